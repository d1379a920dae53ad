"""In-memory AMR hierarchy: grids, datasets and their structural validation.

Grid cell arrays are stored as ``float32`` arrays of shape ``(nx, ny, nz)``
indexed ``cells[i, j, k]``.  Flattening with ``order="F"`` yields the
x-fastest ordering used on disk.

The world domain is the unit cube ``[0, 1]^3``; a level-``L`` cell with
global index ``g`` spans ``[g * h, (g + 1) * h)`` with ``h = 1 / res_L``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class AMRValidationError(ValueError):
    """Raised when a dataset violates a structural invariant."""


@dataclass(frozen=True, eq=False)
class AMRGrid:
    level: int
    start_index: tuple[int, int, int]
    dims: tuple[int, int, int]
    cells: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "start_index", tuple(int(s) for s in self.start_index))
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        cells = np.asarray(self.cells, dtype=np.float32)
        if cells.ndim == 1 and cells.size == int(np.prod(self.dims)):
            cells = cells.reshape(self.dims, order="F")
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)

    @property
    def end_index(self) -> tuple[int, int, int]:
        """Exclusive upper global index per axis."""
        return tuple(s + d for s, d in zip(self.start_index, self.dims))

    def contains_index(self, idx: np.ndarray) -> np.ndarray:
        """Boolean per row of an ``(N, 3)`` integer index array."""
        idx = np.asarray(idx)
        lo = np.asarray(self.start_index)
        hi = np.asarray(self.end_index)
        return np.all((idx >= lo) & (idx < hi), axis=-1)


@dataclass(eq=False)
class AMRDataset:
    domain_dimensions: tuple[int, int, int]
    refine_by: int
    levels: list[list[AMRGrid]]
    periodic: tuple[bool, bool, bool] = (False, False, False)
    field_name: str = "density"
    _validated: bool = field(default=False, repr=False)

    def __post_init__(self):
        self.domain_dimensions = tuple(int(d) for d in self.domain_dimensions)
        self.periodic = tuple(bool(p) for p in self.periodic)
        self.refine_by = int(self.refine_by)

    @property
    def max_level(self) -> int:
        return len(self.levels) - 1

    def resolution(self, level: int) -> np.ndarray:
        """Cells per axis at ``level``: ``domain_dimensions * refine_by**level``."""
        return np.asarray(self.domain_dimensions, dtype=np.int64) * self.refine_by**level

    def cell_size(self, level: int) -> float:
        return 1.0 / float(self.resolution(level)[0])

    def grids(self, level: int) -> list[AMRGrid]:
        if level < 0 or level > self.max_level:
            return []
        return self.levels[level]

    def iter_grids(self):
        for lev in self.levels:
            yield from lev

    def validate(self) -> "AMRDataset":
        validate_dataset(self)
        self._validated = True
        return self


def _box_overlap(a: AMRGrid, b: AMRGrid) -> bool:
    return all(
        max(sa, sb) < min(ea, eb)
        for sa, ea, sb, eb in zip(a.start_index, a.end_index, b.start_index, b.end_index)
    )


def _covered_volume(boxes, lo, hi) -> int:
    """Number of cells of box ``[lo, hi)`` covered by the union of disjoint ``boxes``."""
    total = 0
    for s, e in boxes:
        ilo = np.maximum(lo, s)
        ihi = np.minimum(hi, e)
        if np.all(ihi > ilo):
            total += int(np.prod(ihi - ilo))
    return total


def validate_dataset(ds: AMRDataset) -> None:
    """Check every structural invariant; raise :class:`AMRValidationError` on the first failure."""
    dd = ds.domain_dimensions
    if len(dd) != 3 or any(d < 1 for d in dd):
        raise AMRValidationError(f"domain_dimensions must be three positive integers, got {dd}")
    if len(set(dd)) != 1:
        raise AMRValidationError(
            f"non-cubic cells unsupported: domain_dimensions {dd} give unequal cell sizes"
        )
    if ds.refine_by < 2:
        raise AMRValidationError(f"refine_by must be >= 2, got {ds.refine_by}")
    if not ds.levels or not ds.levels[0]:
        raise AMRValidationError("dataset has no level-0 grids")

    for level, grids in enumerate(ds.levels):
        if not grids:
            raise AMRValidationError(f"level {level} has no grids")
        res = ds.resolution(level)
        for n, g in enumerate(grids):
            tag = f"level {level} grid {n}"
            if g.level != level:
                raise AMRValidationError(f"{tag}: grid declares level {g.level}")
            if any(d < 1 for d in g.dims):
                raise AMRValidationError(f"{tag}: dims {g.dims} must be >= 1")
            if any(s < 0 for s in g.start_index):
                raise AMRValidationError(f"{tag}: negative start_index {g.start_index}")
            if any(e > r for e, r in zip(g.end_index, res)):
                raise AMRValidationError(
                    f"{tag}: extent {g.start_index}+{g.dims} exceeds level resolution {tuple(res)}"
                )
            if g.cells.shape != g.dims:
                raise AMRValidationError(f"{tag}: cell array shape {g.cells.shape} != dims {g.dims}")
            if not np.all(np.isfinite(g.cells)):
                raise AMRValidationError(f"{tag}: non-finite cell values")
        for a in range(len(grids)):
            for b in range(a + 1, len(grids)):
                if _box_overlap(grids[a], grids[b]):
                    raise AMRValidationError(
                        f"overlapping grids at level {level}: grids {a} and {b}"
                    )

    # level 0 must tile the domain, otherwise some points have no data at all
    boxes0 = [(np.array(g.start_index), np.array(g.end_index)) for g in ds.levels[0]]
    if _covered_volume(boxes0, np.zeros(3, dtype=np.int64), ds.resolution(0)) != int(
        np.prod(ds.resolution(0))
    ):
        raise AMRValidationError("level 0 grids do not cover the domain")

    r = ds.refine_by
    for level in range(1, len(ds.levels)):
        parents = [(np.array(g.start_index), np.array(g.end_index)) for g in ds.levels[level - 1]]
        for n, g in enumerate(ds.levels[level]):
            s = np.array(g.start_index)
            e = np.array(g.end_index)
            plo = s // r
            phi = -(-e // r)
            need = int(np.prod(phi - plo))
            if _covered_volume(parents, plo, phi) != need:
                raise AMRValidationError(
                    f"nesting violation at level {level} grid {n}: "
                    f"extent {tuple(s)}..{tuple(e)} not inside level {level - 1}"
                )
