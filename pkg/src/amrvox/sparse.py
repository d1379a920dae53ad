"""Tiled sparse scalar volume (8^3 leaves, flat leaf map).

Index ``i`` maps to the world-space voxel centre ``i * voxel_size + translation``
and the voxel owns the half-open interval ``[(i - 1/2) v + t, (i + 1/2) v + t)``.
Inactive voxels read as the background value.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LEAF_DIM = 8
LEAF_LOG2 = 3
LEAF_VOXELS = LEAF_DIM**3


@dataclass
class Leaf:
    """One 8^3 tile; arrays are indexed ``[i, j, k]`` in local coordinates."""

    values: np.ndarray = field(default_factory=lambda: np.zeros((8, 8, 8), dtype=np.float32))
    active: np.ndarray = field(default_factory=lambda: np.zeros((8, 8, 8), dtype=bool))


@dataclass(frozen=True)
class PackedVolume:
    """Dense lookup view of a :class:`SparseVolume` for vectorised reads.

    ``table`` maps leaf coordinates (offset by ``leaf_lo``) to a row of
    ``values``; -1 marks a missing leaf.  Inactive voxels hold the background.
    """

    leaf_lo: np.ndarray
    table: np.ndarray
    values: np.ndarray
    voxel_size: float
    translation: np.ndarray
    background: float


class SparseVolume:
    def __init__(
        self,
        name: str = "density",
        voxel_size: float = 1.0,
        translation=(0.0, 0.0, 0.0),
        background: float = 0.0,
    ):
        if not voxel_size > 0:
            raise ValueError(f"voxel_size must be > 0, got {voxel_size}")
        self.name = name
        self.voxel_size = float(voxel_size)
        self.translation = tuple(float(t) for t in translation)
        self.background = float(np.float32(background))
        self.leaves: dict[tuple[int, int, int], Leaf] = {}
        self._packed: PackedVolume | None = None

    def __repr__(self):
        return (
            f"SparseVolume(name={self.name!r}, voxel_size={self.voxel_size}, "
            f"translation={self.translation}, leaves={len(self.leaves)}, "
            f"active={self.active_voxel_count})"
        )

    # -- construction -----------------------------------------------------

    def copy_from_array(self, arr: np.ndarray, origin=(0, 0, 0), dims=None) -> "SparseVolume":
        """Write a dense ``(nx, ny, nz)`` block at index ``origin`` and activate it.

        With ``dims`` given, ``arr`` may be flat in x-fastest order.
        """
        arr = np.asarray(arr, dtype=np.float32)
        if dims is not None:
            dims = tuple(int(d) for d in dims)
            if arr.size != int(np.prod(dims)):
                raise ValueError(f"array of {arr.size} values does not match dims {dims}")
            arr = arr.reshape(dims, order="F")
        if arr.ndim != 3:
            raise ValueError(f"expected a 3-D array, got shape {arr.shape}")
        o = np.asarray(origin, dtype=np.int64)
        end = o + np.asarray(arr.shape)
        if np.any(end <= o):
            return self
        leaf_lo = o >> LEAF_LOG2
        leaf_hi = (end - 1) >> LEAF_LOG2
        for lx in range(leaf_lo[0], leaf_hi[0] + 1):
            for ly in range(leaf_lo[1], leaf_hi[1] + 1):
                for lz in range(leaf_lo[2], leaf_hi[2] + 1):
                    lorig = np.array([lx, ly, lz], dtype=np.int64) << LEAF_LOG2
                    a = np.maximum(o, lorig)
                    b = np.minimum(end, lorig + LEAF_DIM)
                    key = (int(lorig[0]), int(lorig[1]), int(lorig[2]))
                    leaf = self.leaves.get(key)
                    if leaf is None:
                        leaf = self.leaves[key] = Leaf()
                    la, lb = a - lorig, b - lorig
                    sa, sb = a - o, b - o
                    leaf.values[la[0]:lb[0], la[1]:lb[1], la[2]:lb[2]] = arr[
                        sa[0]:sb[0], sa[1]:sb[1], sa[2]:sb[2]
                    ]
                    leaf.active[la[0]:lb[0], la[1]:lb[1], la[2]:lb[2]] = True
        self._packed = None
        return self

    def scaled(self, k: float) -> "SparseVolume":
        """Copy sharing voxel data with voxel size and translation multiplied by ``k``."""
        out = SparseVolume(
            self.name, self.voxel_size * k, tuple(t * k for t in self.translation), self.background
        )
        out.leaves = self.leaves
        return out

    # -- queries ----------------------------------------------------------

    @property
    def active_voxel_count(self) -> int:
        return int(sum(int(leaf.active.sum()) for leaf in self.leaves.values()))

    @property
    def leaf_count(self) -> int:
        return len(self.leaves)

    def active_bounds(self) -> tuple[np.ndarray, np.ndarray] | None:
        """Inclusive min/max index of active voxels, or None when empty."""
        lo = hi = None
        for key, leaf in self.leaves.items():
            idx = np.argwhere(leaf.active)
            if len(idx) == 0:
                continue
            idx = idx + np.asarray(key)
            a, b = idx.min(axis=0), idx.max(axis=0)
            lo = a if lo is None else np.minimum(lo, a)
            hi = b if hi is None else np.maximum(hi, b)
        if lo is None:
            return None
        return lo, hi

    def packed(self) -> PackedVolume:
        if self._packed is None:
            self._packed = _pack(self)
        return self._packed

    def index_to_world(self, idx) -> np.ndarray:
        return np.asarray(idx, dtype=np.float64) * self.voxel_size + np.asarray(self.translation)

    def containing_index(self, p) -> np.ndarray:
        """Index of the voxel whose half-open interval holds ``p``: ``floor((p - t)/v + 1/2)``."""
        p = np.asarray(p, dtype=np.float64)
        return np.floor((p - np.asarray(self.translation)) / self.voxel_size + 0.5).astype(np.int64)

    def values_at(self, idx) -> np.ndarray:
        """Stored value (background when inactive) at integer indices ``(..., 3)``."""
        return _gather(self.packed(), np.asarray(idx, dtype=np.int64))

    def index_sample(self, p) -> np.ndarray | float:
        """Uninterpolated value of the voxel containing ``p``."""
        out = self.values_at(self.containing_index(p))
        return float(out) if out.ndim == 0 else out

    def trilinear_sample(self, p) -> np.ndarray | float:
        """Trilinear blend of the 8 voxel centres surrounding ``p``."""
        out = _trilinear(self.packed(), np.asarray(p, dtype=np.float64))
        return float(out) if out.ndim == 0 else out


def _pack(vol: SparseVolume) -> PackedVolume:
    if not vol.leaves:
        return PackedVolume(
            np.zeros(3, dtype=np.int64),
            np.full((1, 1, 1), -1, dtype=np.int32),
            np.zeros((0, 8, 8, 8), dtype=np.float32),
            vol.voxel_size,
            np.asarray(vol.translation),
            vol.background,
        )
    keys = np.array(list(vol.leaves.keys()), dtype=np.int64) >> LEAF_LOG2
    lo = keys.min(axis=0)
    shape = tuple(keys.max(axis=0) - lo + 1)
    table = np.full(shape, -1, dtype=np.int32)
    values = np.empty((len(keys), 8, 8, 8), dtype=np.float32)
    bg = np.float32(vol.background)
    for n, (key, leaf) in enumerate(vol.leaves.items()):
        c = keys[n] - lo
        table[c[0], c[1], c[2]] = n
        values[n] = np.where(leaf.active, leaf.values, bg)
    return PackedVolume(lo, table, values, vol.voxel_size, np.asarray(vol.translation), vol.background)


def _gather(pv: PackedVolume, idx: np.ndarray) -> np.ndarray:
    shape = idx.shape[:-1]
    flat = idx.reshape(-1, 3)
    leaf = (flat >> LEAF_LOG2) - pv.leaf_lo
    local = flat & (LEAF_DIM - 1)
    tshape = np.asarray(pv.table.shape)
    inside = np.all((leaf >= 0) & (leaf < tshape), axis=1)
    out = np.full(len(flat), np.float32(pv.background), dtype=np.float32)
    if np.any(inside):
        li = leaf[inside]
        slot = pv.table[li[:, 0], li[:, 1], li[:, 2]]
        ok = slot >= 0
        rows = np.flatnonzero(inside)[ok]
        lc = local[inside][ok]
        out[rows] = pv.values[slot[ok], lc[:, 0], lc[:, 1], lc[:, 2]]
    return out.reshape(shape)


def _trilinear(pv: PackedVolume, p: np.ndarray) -> np.ndarray:
    x = (p - pv.translation) / pv.voxel_size
    i0 = np.floor(x).astype(np.int64)
    f = x - i0
    acc = np.zeros(x.shape[:-1], dtype=np.float64)
    for corner in range(8):
        off = np.array([(corner >> a) & 1 for a in range(3)], dtype=np.int64)
        w = np.prod(np.where(off == 1, f, 1.0 - f), axis=-1)
        acc = acc + w * _gather(pv, i0 + off)
    return acc


def active_stats(volumes) -> dict:
    """Active voxels, leaf count and serialized byte size of ``volumes`` as one SVOL file."""
    from .svol import serialized_size

    if isinstance(volumes, SparseVolume):
        volumes = [volumes]
    volumes = list(volumes)
    return {
        "active_voxels": sum(v.active_voxel_count for v in volumes),
        "leaf_count": sum(v.leaf_count for v in volumes),
        "bytes": serialized_size(volumes),
    }
