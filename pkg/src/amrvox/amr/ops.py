"""Read-only queries on an AMR hierarchy: child masks, ghost zones,
covering grids and point sampling."""
from __future__ import annotations

import numpy as np

from .model import AMRDataset, AMRGrid

#: Default cap on covering-grid cells (one float32 each).
MAX_COVERING_CELLS = 2**31 - 1


class CapacityError(MemoryError):
    """Requested dense array is larger than the configured capacity."""


class OutsideDomainError(ValueError):
    pass


def child_mask(ds: AMRDataset, level: int, grid: AMRGrid, max_level: int | None = None) -> np.ndarray:
    """1.0 where no finer grid covers a cell, 0.0 where one does.

    A cell counts as covered only when all ``refine_by**3`` of its children lie
    inside level-``level + 1`` grids.  ``max_level`` treats deeper levels as
    absent, so the finest loaded level gets an all-ones mask.
    """
    top = ds.max_level if max_level is None else min(max_level, ds.max_level)
    if level >= top:
        return np.ones(grid.dims, dtype=np.float32)
    r = ds.refine_by
    s = np.asarray(grid.start_index, dtype=np.int64)
    fine_lo = s * r
    fine_hi = (s + np.asarray(grid.dims)) * r
    covered = np.zeros(tuple(fine_hi - fine_lo), dtype=bool)
    for child in ds.grids(level + 1):
        lo = np.maximum(fine_lo, child.start_index)
        hi = np.minimum(fine_hi, child.end_index)
        if np.any(hi <= lo):
            continue
        a = lo - fine_lo
        b = hi - fine_lo
        covered[a[0]:b[0], a[1]:b[1], a[2]:b[2]] = True
    nx, ny, nz = grid.dims
    full = covered.reshape(nx, r, ny, r, nz, r).all(axis=(1, 3, 5))
    return np.where(full, np.float32(0.0), np.float32(1.0))


def _wrap_clamp(ds: AMRDataset, level: int, idx: np.ndarray) -> np.ndarray:
    res = ds.resolution(level)
    out = idx.copy()
    for ax in range(3):
        if ds.periodic[ax]:
            out[:, ax] = np.mod(out[:, ax], res[ax])
        else:
            out[:, ax] = np.clip(out[:, ax], 0, res[ax] - 1)
    return out


def _values_at(ds: AMRDataset, level: int, idx: np.ndarray) -> np.ndarray:
    """Cell values at global indices of ``level``, falling back to coarser levels.

    Indices wrap (periodic axes) or clamp to the domain.  A cell not covered by
    any grid of ``level`` is filled by trilinear interpolation of the parent
    level's cell-centred values at the cell centre, recursively.
    """
    idx = _wrap_clamp(ds, level, np.asarray(idx, dtype=np.int64).reshape(-1, 3))
    out = np.empty(len(idx), dtype=np.float64)
    todo = np.ones(len(idx), dtype=bool)
    for g in ds.grids(level):
        hit = todo & g.contains_index(idx)
        if np.any(hit):
            local = idx[hit] - np.asarray(g.start_index)
            out[hit] = g.cells[local[:, 0], local[:, 1], local[:, 2]]
            todo &= ~hit
    if np.any(todo):
        if level == 0:
            raise ValueError("level-0 index not covered by any grid")
        r = ds.refine_by
        # cell centre in parent index space: (g + 1/2) / r - 1/2
        x = (idx[todo] + 0.5) / r - 0.5
        out[todo] = _trilinear_indexed(ds, level - 1, x)
    return out


def _trilinear_indexed(ds: AMRDataset, level: int, x: np.ndarray) -> np.ndarray:
    """Trilinear blend of ``level`` cell values at continuous cell-index coordinates."""
    i0 = np.floor(x).astype(np.int64)
    f = x - i0
    acc = np.zeros(len(x), dtype=np.float64)
    for corner in range(8):
        off = np.array([(corner >> a) & 1 for a in range(3)], dtype=np.int64)
        w = np.prod(np.where(off == 1, f, 1.0 - f), axis=1)
        nz = w != 0.0
        if np.any(nz):
            acc[nz] += w[nz] * _values_at(ds, level, i0[nz] + off)
    return acc


def ghost_zones(ds: AMRDataset, grid: AMRGrid, n: int = 1) -> np.ndarray:
    """Grid cells padded with ``n`` ghost cells per face (only ``n = 1`` supported).

    Ghost cells copy a same-level neighbour when one exists, otherwise they are
    interpolated from coarser data.  The interior is an exact copy of ``grid.cells``.
    """
    if n != 1:
        raise ValueError(f"unsupported ghost zone count n={n}; only n=1 is supported")
    dims = np.asarray(grid.dims)
    out = np.empty(tuple(dims + 2), dtype=np.float32)
    out[1:-1, 1:-1, 1:-1] = grid.cells
    shell = np.ones(out.shape, dtype=bool)
    shell[1:-1, 1:-1, 1:-1] = False
    local = np.argwhere(shell)
    glob = local - 1 + np.asarray(grid.start_index)
    out[shell] = _values_at(ds, grid.level, glob).astype(np.float32)
    return out


def covering_grid(
    ds: AMRDataset, level: int, max_cells: int = MAX_COVERING_CELLS
) -> np.ndarray:
    """Dense array at level ``level`` resolution, zeroth-order filled from coarser data."""
    if level < 0 or level > ds.max_level:
        raise ValueError(f"level {level} outside 0..{ds.max_level}")
    res = ds.resolution(level)
    ncells = int(np.prod(res.astype(object)))
    if ncells > max_cells:
        raise CapacityError(
            f"covering grid at level {level} needs {ncells} cells (limit {max_cells})"
        )
    out = np.zeros(tuple(res), dtype=np.float32)
    r = ds.refine_by
    for lev in range(level + 1):
        k = r ** (level - lev)
        for g in ds.grids(lev):
            block = g.cells
            if k > 1:
                block = block.repeat(k, 0).repeat(k, 1).repeat(k, 2)
            s = np.asarray(g.start_index) * k
            e = s + np.asarray(block.shape)
            out[s[0]:e[0], s[1]:e[1], s[2]:e[2]] = block
    return out


def finest_grid_at(ds: AMRDataset, p) -> tuple[int, int] | None:
    """``(level, grid number)`` of the finest grid containing world point ``p``."""
    p = np.asarray(p, dtype=np.float64)
    for level in range(ds.max_level, -1, -1):
        g_idx = np.floor(p * ds.resolution(level)).astype(np.int64)
        for n, g in enumerate(ds.grids(level)):
            if g.contains_index(g_idx):
                return level, n
    return None


def sample_amr(ds: AMRDataset, p) -> float:
    """Trilinear sample of the finest grid containing ``p`` (clamped at grid edges)."""
    p = np.asarray(p, dtype=np.float64)
    if p.shape != (3,) or np.any(p < 0.0) or np.any(p > 1.0):
        raise OutsideDomainError(f"point {p.tolist()} outside domain [0,1]^3")
    pc = np.minimum(p, np.nextafter(1.0, 0.0))
    hit = finest_grid_at(ds, pc)
    if hit is None:
        raise OutsideDomainError(f"point {p.tolist()} not covered by any grid")
    level, n = hit
    g = ds.levels[level][n]
    x = p * ds.resolution(level) - 0.5 - np.asarray(g.start_index)
    hi = np.asarray(g.dims) - 1
    i0 = np.floor(x).astype(np.int64)
    f = x - i0
    acc = 0.0
    for corner in range(8):
        off = np.array([(corner >> a) & 1 for a in range(3)])
        w = float(np.prod(np.where(off == 1, f, 1.0 - f)))
        if w == 0.0:
            continue
        c = np.clip(i0 + off, 0, hi)
        acc += w * float(g.cells[c[0], c[1], c[2]])
    return acc
