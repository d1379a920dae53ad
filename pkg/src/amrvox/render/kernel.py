"""Compiled sampling and raymarching kernels.

Levels are flattened into a handful of arrays (a "stack") so a single
jitted function can walk all of them.  Every kernel releases the GIL and
works on a caller-owned output region, so tiles can run on a thread pool.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from ..sparse import SparseVolume

MODE_INDEX, MODE_INTERP, MODE_OFF = 0, 1, 2
MODE_CODES = {"index": MODE_INDEX, "interpolated": MODE_INTERP, "off": MODE_OFF}
EPS_WEIGHT = 1e-12


@dataclass(frozen=True)
class VolumeStack:
    lo: np.ndarray  # (n, 3) int64 leaf-coordinate origin of each table
    tshape: np.ndarray  # (n, 3) int64
    toff: np.ndarray  # (n,) int64 offset into ``table``
    table: np.ndarray  # flat int32 leaf slots, -1 = empty
    values: np.ndarray  # (slots, 8, 8, 8) float32, background baked in
    vsize: np.ndarray  # (n,) float64
    trans: np.ndarray  # (n, 3) float64
    bg: np.ndarray  # (n,) float64


def pack_stack(volumes: list[SparseVolume | None]) -> VolumeStack:
    n = len(volumes)
    lo = np.zeros((n, 3), dtype=np.int64)
    tshape = np.ones((n, 3), dtype=np.int64)
    toff = np.zeros(n, dtype=np.int64)
    vsize = np.ones(n, dtype=np.float64)
    trans = np.zeros((n, 3), dtype=np.float64)
    bg = np.zeros(n, dtype=np.float64)
    tables, values = [], []
    offset = slot_base = 0
    for i, vol in enumerate(volumes):
        if vol is None:
            tables.append(np.full(1, -1, dtype=np.int32))
            toff[i] = offset
            offset += 1
            continue
        pv = vol.packed()
        lo[i] = pv.leaf_lo
        tshape[i] = pv.table.shape
        toff[i] = offset
        t = pv.table.ravel().astype(np.int32)
        t = np.where(t >= 0, t + slot_base, -1).astype(np.int32)
        tables.append(t)
        offset += t.size
        values.append(pv.values)
        slot_base += len(pv.values)
        vsize[i] = pv.voxel_size
        trans[i] = pv.translation
        bg[i] = pv.background
    vals = np.concatenate(values) if values else np.zeros((0, 8, 8, 8), dtype=np.float32)
    return VolumeStack(lo, tshape, toff, np.concatenate(tables), np.ascontiguousarray(vals), vsize, trans, bg)


@njit(cache=True, nogil=True)
def run_kernel(
    task, pts, out_pts, tile, out,
    cam_pos, cam_fwd, cam_right, cam_up, tan_half, width, height,
    dt, max_steps, bgr, bgg, bgb, early_exit,
    boxes, has_mask,
    lo, tshape, toff, table, values, vsize, trans, bg,
    vmin, vmax, op_x, op_y, col_x, col_r, col_g, col_b,
    sigma_s, emission, mode,
):
    """Volumes ``0..n-1`` of the stack are data, ``n..2n-1`` the masks.

    ``task`` 0 shades ``pts`` into ``out_pts`` (sigma, r, g, b); ``task`` 1
    renders pixel rectangle ``tile`` = (x0, y0, x1, y1) into ``out``.

    The helpers are closures so numba inlines them; separate jitted
    functions taking this many arrays cost ~100 ns per call.
    """
    nlev = boxes.shape[0]

    def lookup(vol, i, j, k):
        lx = (i >> 3) - lo[vol, 0]
        ly = (j >> 3) - lo[vol, 1]
        lz = (k >> 3) - lo[vol, 2]
        sy = tshape[vol, 1]
        sz = tshape[vol, 2]
        if lx < 0 or ly < 0 or lz < 0 or lx >= tshape[vol, 0] or ly >= sy or lz >= sz:
            return bg[vol]
        slot = table[toff[vol] + (lx * sy + ly) * sz + lz]
        if slot < 0:
            return bg[vol]
        return float(values[slot, i & 7, j & 7, k & 7])

    def trilinear(vol, x, y, z):
        v = vsize[vol]
        fx = (x - trans[vol, 0]) / v
        fy = (y - trans[vol, 1]) / v
        fz = (z - trans[vol, 2]) / v
        ix = math.floor(fx)
        iy = math.floor(fy)
        iz = math.floor(fz)
        tx = fx - ix
        ty = fy - iy
        tz = fz - iz
        i0 = int(ix)
        j0 = int(iy)
        k0 = int(iz)
        acc = 0.0
        for c in range(8):
            di = c & 1
            dj = (c >> 1) & 1
            dk = (c >> 2) & 1
            wx = tx if di == 1 else 1.0 - tx
            wy = ty if dj == 1 else 1.0 - ty
            wz = tz if dk == 1 else 1.0 - tz
            acc += (wx * wy * wz) * lookup(vol, i0 + di, j0 + dj, k0 + dk)
        return acc

    def index_sample(vol, x, y, z):
        v = vsize[vol]
        i = int(math.floor((x - trans[vol, 0]) / v + 0.5))
        j = int(math.floor((y - trans[vol, 1]) / v + 0.5))
        k = int(math.floor((z - trans[vol, 2]) / v + 0.5))
        return lookup(vol, i, j, k)

    def ramp(u, xs, ys):
        n = xs.shape[0]
        if u <= xs[0]:
            return ys[0]
        if u >= xs[n - 1]:
            return ys[n - 1]
        for s in range(n - 1):
            if u <= xs[s + 1]:
                w = (u - xs[s]) / (xs[s + 1] - xs[s])
                return ys[s] + w * (ys[s + 1] - ys[s])
        return ys[n - 1]

    def shade(x, y, z):
        wsum = 0.0
        cr = 0.0
        cg = 0.0
        cb = 0.0
        for lev in range(nlev):
            if (x < boxes[lev, 0, 0] or y < boxes[lev, 0, 1] or z < boxes[lev, 0, 2]
                    or x > boxes[lev, 1, 0] or y > boxes[lev, 1, 1] or z > boxes[lev, 1, 2]):
                continue
            if mode == MODE_OFF:
                m = 1.0
            elif has_mask[lev] == 0:
                # implicit mask: half-open box
                if x >= boxes[lev, 1, 0] or y >= boxes[lev, 1, 1] or z >= boxes[lev, 1, 2]:
                    continue
                m = 1.0
            elif mode == MODE_INDEX:
                m = index_sample(nlev + lev, x, y, z)
            else:
                m = trilinear(nlev + lev, x, y, z)
            if m == 0.0:
                continue
            u = trilinear(lev, x, y, z)
            un = (u - vmin) / (vmax - vmin)
            un = min(max(un, 0.0), 1.0)
            w = m * ramp(un, op_x, op_y)
            wsum += w
            cr += w * ramp(un, col_x, col_r)
            cg += w * ramp(un, col_x, col_g)
            cb += w * ramp(un, col_x, col_b)
        norm = emission / max(wsum, EPS_WEIGHT)
        return wsum * sigma_s, cr * norm, cg * norm, cb * norm

    if task == 0:
        for n in range(pts.shape[0]):
            s_, r_, g_, b_ = shade(pts[n, 0], pts[n, 1], pts[n, 2])
            out_pts[n, 0] = s_
            out_pts[n, 1] = r_
            out_pts[n, 2] = g_
            out_pts[n, 3] = b_
        return

    x0, y0, x1, y1 = tile[0], tile[1], tile[2], tile[3]
    aspect = width / height
    enter = np.empty(nlev)
    leave = np.empty(nlev)
    d = np.empty(3)
    for py in range(y0, y1):
        for px in range(x0, x1):
            sx = (2.0 * (px + 0.5) / width - 1.0) * tan_half * aspect
            sy = (1.0 - 2.0 * (py + 0.5) / height) * tan_half
            for a in range(3):
                d[a] = cam_fwd[a] + sx * cam_right[a] + sy * cam_up[a]
            dn = math.sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2])
            for a in range(3):
                d[a] /= dn
            # slab intersection of the ray with every level box
            nint = 0
            for lev in range(nlev):
                t0 = 0.0
                t1 = np.inf
                hit = True
                for a in range(3):
                    o = cam_pos[a]
                    blo = boxes[lev, 0, a]
                    bhi = boxes[lev, 1, a]
                    if d[a] == 0.0:
                        if o < blo or o > bhi:
                            hit = False
                            break
                    else:
                        ta = (blo - o) / d[a]
                        tb = (bhi - o) / d[a]
                        if ta > tb:
                            ta, tb = tb, ta
                        t0 = max(t0, ta)
                        t1 = min(t1, tb)
                if hit and t1 >= t0:
                    enter[nint] = t0
                    leave[nint] = t1
                    nint += 1
            # insertion sort by entry; overlapping spans are merged below
            for a in range(1, nint):
                ea = enter[a]
                la = leave[a]
                b = a - 1
                while b >= 0 and enter[b] > ea:
                    enter[b + 1] = enter[b]
                    leave[b + 1] = leave[b]
                    b -= 1
                enter[b + 1] = ea
                leave[b + 1] = la
            T = 1.0
            cr = 0.0
            cg = 0.0
            cb = 0.0
            steps = 0
            last_k = -1
            s = 0
            done = False
            while s < nint and not done:
                span_lo = enter[s]
                span_hi = leave[s]
                s += 1
                while s < nint and enter[s] <= span_hi:
                    span_hi = max(span_hi, leave[s])
                    s += 1
                # samples sit on the ray-global lattice t_k = (k + 1/2) dt
                k = int(math.ceil(span_lo / dt - 0.5))
                if k <= last_k:
                    k = last_k + 1
                while True:
                    t = (k + 0.5) * dt
                    if t > span_hi:
                        break
                    if steps >= max_steps:
                        done = True
                        break
                    steps += 1
                    last_k = k
                    k += 1
                    sig, er, eg, eb = shade(cam_pos[0] + t * d[0], cam_pos[1] + t * d[1], cam_pos[2] + t * d[2])
                    if sig <= 0.0:
                        continue
                    alpha = 1.0 - math.exp(-sig * dt)
                    cr += T * alpha * er
                    cg += T * alpha * eg
                    cb += T * alpha * eb
                    T *= 1.0 - alpha
                    if T < early_exit:
                        done = True
                        break
            out[py, px, 0] = cr + T * bgr
            out[py, px, 1] = cg + T * bgg
            out[py, px, 2] = cb + T * bgb
