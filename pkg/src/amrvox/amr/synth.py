"""Synthetic AMR datasets for tests and benchmarks."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .model import AMRDataset, AMRGrid, validate_dataset

FIELD_KINDS = ("constant", "linear-x", "gaussian")


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for :func:`synth_amr`.

    ``thresholds[L]`` flags level-``L`` cells for refinement; there must be
    one threshold per refined level, strictly increasing.
    """

    domain_dimensions: tuple[int, int, int] = (8, 8, 8)
    refine_by: int = 2
    max_level: int = 0
    kind: str = "constant"
    value: float = 1.0
    center: tuple[float, float, float] = (0.5, 0.5, 0.5)
    width: float = 0.1
    thresholds: tuple[float, ...] = field(default_factory=tuple)
    pad: int = 0
    field_name: str = "density"

    def validate(self) -> None:
        if self.kind not in FIELD_KINDS:
            raise ValueError(f"unknown field kind {self.kind!r}; expected one of {FIELD_KINDS}")
        if self.refine_by < 2:
            raise ValueError("refine_by must be >= 2")
        if self.max_level < 0:
            raise ValueError("max_level must be >= 0")
        if len(self.thresholds) < self.max_level:
            raise ValueError(
                f"need {self.max_level} thresholds for max_level {self.max_level}, "
                f"got {len(self.thresholds)}"
            )
        if any(b <= a for a, b in zip(self.thresholds, self.thresholds[1:])):
            raise ValueError("thresholds must be strictly increasing")
        if self.pad < 0:
            raise ValueError("pad must be >= 0")
        if self.kind == "gaussian" and self.width <= 0:
            raise ValueError("gaussian width must be > 0")

    def evaluate(self, x: np.ndarray, y: np.ndarray, z: np.ndarray) -> np.ndarray:
        """Analytic field at world coordinates."""
        if self.kind == "constant":
            return np.full(np.broadcast(x, y, z).shape, self.value, dtype=np.float64)
        if self.kind == "linear-x":
            return np.broadcast_to(np.asarray(x, dtype=np.float64), np.broadcast(x, y, z).shape)
        cx, cy, cz = self.center
        r2 = (x - cx) ** 2 + (y - cy) ** 2 + (z - cz) ** 2
        return np.exp(-r2 / (2.0 * self.width**2))


def _cell_values(spec: SynthSpec, res, start, dims) -> np.ndarray:
    axes = [(np.arange(s, s + d) + 0.5) / r for s, d, r in zip(start, dims, res)]
    x, y, z = np.meshgrid(*axes, indexing="ij")
    return spec.evaluate(x, y, z).astype(np.float32)


def _merge_boxes(boxes: list[tuple[np.ndarray, np.ndarray]]):
    """Union-of-bounding-box merge until no two boxes overlap."""
    boxes = [(lo.copy(), hi.copy()) for lo, hi in boxes]
    merged = True
    while merged:
        merged = False
        for a in range(len(boxes)):
            for b in range(a + 1, len(boxes)):
                (la, ha), (lb, hb) = boxes[a], boxes[b]
                if np.all(np.maximum(la, lb) < np.minimum(ha, hb)):
                    boxes[a] = (np.minimum(la, lb), np.maximum(ha, hb))
                    del boxes[b]
                    merged = True
                    break
            if merged:
                break
    return boxes


def synth_amr(spec: SynthSpec) -> AMRDataset:
    """Build a nested AMR dataset by thresholding the analytic field level by level.

    Level-``L + 1`` grids cover the level-``L`` cells above ``thresholds[L]``
    (dilated by ``pad`` cells), one bounding box per connected flagged region
    inside each parent grid.  Refinement stops early when nothing is flagged.
    """
    spec.validate()
    dd = tuple(int(d) for d in spec.domain_dimensions)
    r = spec.refine_by
    res0 = np.asarray(dd, dtype=np.int64)
    levels = [[AMRGrid(0, (0, 0, 0), dd, _cell_values(spec, res0, (0, 0, 0), dd))]]

    structure = np.ones((3, 3, 3), dtype=bool)
    for level in range(spec.max_level):
        res = res0 * r**level
        thr = spec.thresholds[level]
        children = []
        for parent in levels[level]:
            flags = parent.cells > thr
            if spec.pad > 0 and flags.any():
                flags = ndimage.binary_dilation(flags, structure=structure, iterations=spec.pad)
            if not flags.any():
                continue
            labels, count = ndimage.label(flags, structure=structure)
            boxes = []
            for sl in ndimage.find_objects(labels):
                lo = np.array([s.start for s in sl], dtype=np.int64)
                hi = np.array([s.stop for s in sl], dtype=np.int64)
                boxes.append((lo, hi))
            for lo, hi in _merge_boxes(boxes):
                start = (lo + np.asarray(parent.start_index)) * r
                dims = (hi - lo) * r
                cells = _cell_values(spec, res * r, start, dims)
                children.append(AMRGrid(level + 1, tuple(start), tuple(dims), cells))
        if not children:
            break
        levels.append(children)

    ds = AMRDataset(dd, r, levels, (False, False, False), spec.field_name)
    validate_dataset(ds)
    ds._validated = True
    return ds


def g3_dataset(
    kind: str = "constant",
    value: float = 1.0,
    fine_value: float | None = None,
    field_name: str = "density",
) -> AMRDataset:
    """The canonical three-level desk dataset.

    Domain 8^3, refine_by 2, one 8^3 grid per level at global starts
    (0,0,0), (4,4,4), (12,12,12).  ``fine_value`` overrides the value on
    levels >= 1 for constant fields.
    """
    spec = SynthSpec(kind=kind, value=value)
    starts = [(0, 0, 0), (4, 4, 4), (12, 12, 12)]
    levels = []
    for level, start in enumerate(starts):
        res = np.array([8, 8, 8]) * 2**level
        cells = _cell_values(spec, res, start, (8, 8, 8))
        if fine_value is not None and level >= 1:
            cells = np.full((8, 8, 8), fine_value, dtype=np.float32)
        levels.append([AMRGrid(level, start, (8, 8, 8), cells)])
    ds = AMRDataset((8, 8, 8), 2, levels, (False, False, False), field_name)
    return ds.validate()
