"""AMR hierarchy to per-level (data, mask) sparse-volume pairs.

Each level becomes one ghost-padded data volume and one unpadded child-mask
volume.  Data is written with its ghost shell starting at the grid's global
start index, so interior cell ``g`` sits at data index ``g + 1`` and mask
index ``g``.  The translations ``-v/2 - V0`` (data) and ``+v/2 - V0`` (mask)
put both at world centre ``(g + 1/2) v - V0``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .amr import AMRDataset, child_mask, covering_grid, ghost_zones
from .amr.ops import MAX_COVERING_CELLS
from .sparse import SparseVolume
from .svol import read_svol, write_svol

MIN_VOXEL_SIZE = 1e-12
ALIGN_TOL = 1e-12


class PrecisionError(ValueError):
    pass


class AlignmentError(AssertionError):
    pass


@dataclass(frozen=True)
class BuildConfig:
    field: str | None = None
    min_level: int = 0
    max_level: int | None = None
    scale: float = 1.0
    with_mask: bool = True
    with_ghost: bool = True
    with_shift: bool = True

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError(f"scale must be > 0, got {self.scale}")
        if self.min_level < 0:
            raise ValueError(f"min_level must be >= 0, got {self.min_level}")
        if self.max_level is not None and self.max_level < self.min_level:
            raise ValueError(
                f"max_level {self.max_level} is below min_level {self.min_level}"
            )

    def level_range(self, ds: AMRDataset) -> range:
        top = ds.max_level if self.max_level is None else min(self.max_level, ds.max_level)
        return range(self.min_level, top + 1)


@dataclass
class LevelVolumePair:
    """Data and mask volumes for one refinement level.

    ``mask`` may be ``None`` for a dense single-volume representation; the
    mask is then implicitly 1 inside ``bounds`` (world lo, hi) and 0 outside.
    """

    level: int
    data: SparseVolume
    mask: SparseVolume | None
    voxel_size: float
    level0_voxel_size: float
    ghost: int = 1
    bounds: tuple[np.ndarray, np.ndarray] | None = field(default=None, repr=False)

    def scaled(self, k: float) -> "LevelVolumePair":
        b = None if self.bounds is None else (self.bounds[0] * k, self.bounds[1] * k)
        return LevelVolumePair(
            self.level,
            self.data.scaled(k),
            None if self.mask is None else self.mask.scaled(k),
            self.voxel_size * k,
            self.level0_voxel_size * k,
            self.ghost,
            b,
        )


def voxel_size(ds: AMRDataset, level: int, scale: float = 1.0) -> float:
    """World size of one level-``level`` cell: ``scale / (nx * refine_by**level)``."""
    if level < 0:
        raise ValueError(f"level must be >= 0, got {level}")
    res_x = int(ds.domain_dimensions[0]) * int(ds.refine_by) ** int(level)
    v = scale / float(res_x)
    if v < MIN_VOXEL_SIZE:
        raise PrecisionError(
            f"voxel size {v:.3e} at level {level} is below {MIN_VOXEL_SIZE:g}; "
            "increase the scale multiplier"
        )
    return v


def build_level(ds: AMRDataset, level: int, cfg: BuildConfig | None = None) -> LevelVolumePair:
    cfg = cfg or BuildConfig()
    if cfg.field is not None and cfg.field != ds.field_name:
        raise ValueError(f"field {cfg.field!r} not in dataset (has {ds.field_name!r})")
    grids = ds.grids(level)
    if not grids:
        raise ValueError(f"level {level} has no grids")
    v = voxel_size(ds, level, cfg.scale)
    v0 = voxel_size(ds, 0, cfg.scale)
    if cfg.with_shift:
        t_data = (-v / 2 - v0,) * 3
        t_mask = (v / 2 - v0,) * 3
    else:
        t_data = t_mask = (0.0, 0.0, 0.0)
    top = cfg.level_range(ds)[-1]
    data = SparseVolume(ds.field_name, v, t_data)
    mask = SparseVolume("mask", v, t_mask)
    for g in grids:
        if cfg.with_ghost:
            data.copy_from_array(ghost_zones(ds, g, 1), g.start_index)
        else:
            data.copy_from_array(g.cells, g.start_index)
        if cfg.with_mask:
            m = child_mask(ds, level, g, max_level=top)
        else:
            m = np.ones(g.dims, dtype=np.float32)
        mask.copy_from_array(m, g.start_index)
    return LevelVolumePair(level, data, mask, v, v0, 1 if cfg.with_ghost else 0)


def build_levels(ds: AMRDataset, cfg: BuildConfig | None = None) -> list[LevelVolumePair]:
    cfg = cfg or BuildConfig()
    return [build_level(ds, level, cfg) for level in cfg.level_range(ds)]


def convert_dataset(ds: AMRDataset, cfg: BuildConfig | None, out_dir) -> list[Path]:
    """Write ``level{L}.svol`` (data grid, then ``mask``) for every selected level."""
    cfg = cfg or BuildConfig()
    if not ds.levels:
        raise ValueError("dataset is empty")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for pair in build_levels(ds, cfg):
        paths.append(write_svol(out / f"level{pair.level}.svol", [pair.data, pair.mask]))
    return paths


_LEVEL_RE = re.compile(r"level(\d+)\.svol$")


def load_level_file(path) -> LevelVolumePair:
    """Rebuild a pair from a ``level{L}.svol`` file written by :func:`convert_dataset`."""
    path = Path(path)
    vols = read_svol(path)
    m = _LEVEL_RE.search(path.name)
    level = int(m.group(1)) if m else 0
    data = vols[0]
    mask = next((v for v in vols[1:] if v.name == "mask"), None)
    v = data.voxel_size
    ghost = 0
    db, mb = data.active_bounds(), None if mask is None else mask.active_bounds()
    if db is not None and mb is not None and np.all(db[1] - mb[1] == 2):
        ghost = 1
    if mask is not None and mask.translation != data.translation:
        v0 = -mask.translation[0] + v / 2
    else:
        # unshifted build: no level-0 offset was applied
        v0 = 0.0
    return LevelVolumePair(level, data, mask, v, v0, ghost)


def load_levels(paths) -> list[LevelVolumePair]:
    pairs = [load_level_file(p) for p in paths]
    return sorted(pairs, key=lambda p: p.level)


def uniform_pair(
    ds: AMRDataset,
    level: int,
    scale: float = 1.0,
    ghost: bool = False,
    max_cells: int = MAX_COVERING_CELLS,
) -> LevelVolumePair:
    """Covering grid at ``level`` as one dense volume with an implicit all-ones mask.

    Placed in the same world frame as :func:`build_level` output.  With
    ``ghost`` the block is edge-padded by one voxel (periodic axes wrap) so
    trilinear reads do not fall off inside the domain.
    """
    cg = covering_grid(ds, level, max_cells=max_cells)
    v = voxel_size(ds, level, scale)
    v0 = voxel_size(ds, 0, scale)
    data = SparseVolume(ds.field_name, v)
    if ghost:
        for ax in range(3):
            mode = "wrap" if ds.periodic[ax] else "edge"
            pad = [(0, 0)] * 3
            pad[ax] = (1, 1)
            cg = np.pad(cg, pad, mode=mode)
        data.translation = (-v / 2 - v0,) * 3
    else:
        data.translation = (v / 2 - v0,) * 3
    data.copy_from_array(cg, (0, 0, 0))
    lo = np.full(3, -v0)
    hi = np.asarray(ds.resolution(level), dtype=np.float64) * v - v0
    return LevelVolumePair(level, data, None, v, v0, 1 if ghost else 0, (lo, hi))


@dataclass
class AlignmentReport:
    max_deviation: float
    checked: int
    per_level: dict[int, float]


def _sample_indices(pair: LevelVolumePair, rng: np.random.Generator, n: int) -> np.ndarray:
    b = pair.mask.active_bounds() if pair.mask is not None else None
    if b is None:
        lo = np.zeros(3, dtype=np.int64)
        hi = np.zeros(3, dtype=np.int64)
    else:
        lo, hi = b
    corners = np.array([[lo, hi][(c >> a) & 1][a] for c in range(8) for a in range(3)]).reshape(8, 3)
    rand = rng.integers(lo, hi + 1, size=(n, 3))
    return np.vstack([corners, rand])


def verify_alignment(pairs, samples: int = 64, seed: int = 0, tol: float = ALIGN_TOL) -> AlignmentReport:
    """Check that data cell ``g`` and mask cell ``g`` share world centre ``(g + 1/2) v - V0``."""
    pairs = list(pairs)
    if not pairs:
        raise ValueError("verify_alignment needs at least one level")
    rng = np.random.default_rng(seed)
    worst = 0.0
    per_level = {}
    checked = 0
    for pair in pairs:
        v, v0 = pair.voxel_size, pair.level0_voxel_size
        g = _sample_indices(pair, rng, samples)
        expected = (g + 0.5) * v - v0
        w_data = pair.data.index_to_world(g + pair.ghost)
        dev = np.abs(w_data - expected)
        if pair.mask is not None:
            w_mask = pair.mask.index_to_world(g)
            dev = np.maximum(dev, np.abs(w_mask - expected))
            dev = np.maximum(dev, np.abs(w_data - w_mask))
        row_dev = dev.max(axis=1)
        level_dev = float(row_dev.max())
        per_level[pair.level] = level_dev
        checked += len(g)
        if level_dev > tol:
            bad = g[int(np.argmax(row_dev))]
            raise AlignmentError(
                f"level {pair.level} misaligned at index {tuple(int(b) for b in bad)}: "
                f"deviation {level_dev:.3e} > {tol:g}"
            )
        worst = max(worst, level_dev)
    return AlignmentReport(worst, checked, per_level)


def mask_selection(pairs, points) -> np.ndarray:
    """Index-sampled mask value of every level at world ``points``; shape ``(N, levels)``."""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    cols = []
    for pair in pairs:
        if pair.mask is None:
            lo, hi = pair.bounds
            cols.append(np.all((points >= lo) & (points < hi), axis=1).astype(np.float32))
        else:
            cols.append(np.asarray(pair.mask.index_sample(points), dtype=np.float32))
    return np.stack(cols, axis=1)
