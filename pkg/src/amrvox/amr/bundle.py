"""AMRI bundle reader/writer.

A bundle is a directory holding ``index.json`` plus one raw blob per grid
(little-endian float32, x-fastest, no header)::

    {
      "domain_dimensions": [8, 8, 8],
      "refine_by": 2,
      "field_name": "density",
      "periodic": [false, false, false],
      "grids": [
        {"level": 0, "start_index": [0, 0, 0], "dims": [8, 8, 8], "blob": "grid_0000.bin"}
      ]
    }
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .model import AMRDataset, AMRGrid, validate_dataset

INDEX_NAME = "index.json"
_F32LE = np.dtype("<f4")


class AMRFormatError(ValueError):
    """Malformed bundle: bad index, missing or wrongly sized blob."""


def _triple(value, what: str, tag: str) -> tuple[int, int, int]:
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise AMRFormatError(f"{tag}: '{what}' must be a list of three integers")
    try:
        out = tuple(int(v) for v in value)
    except (TypeError, ValueError) as exc:
        raise AMRFormatError(f"{tag}: '{what}' must be integers") from exc
    if any(o != v for o, v in zip(out, value)):
        raise AMRFormatError(f"{tag}: '{what}' must be integers")
    return out


def load_amr(path) -> AMRDataset:
    """Read and validate an AMRI bundle directory."""
    root = Path(path)
    index_path = root / INDEX_NAME
    try:
        index = json.loads(index_path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise AMRFormatError(f"{index_path}: index file not found") from exc
    except json.JSONDecodeError as exc:
        raise AMRFormatError(f"{index_path}: malformed index ({exc})") from exc
    if not isinstance(index, dict):
        raise AMRFormatError(f"{index_path}: malformed index (top level must be an object)")

    try:
        domain = _triple(index["domain_dimensions"], "domain_dimensions", str(index_path))
        refine_by = int(index["refine_by"])
        grid_specs = index["grids"]
    except KeyError as exc:
        raise AMRFormatError(f"{index_path}: malformed index (missing key {exc})") from exc
    field_name = str(index.get("field_name", "density"))
    periodic = index.get("periodic", [False, False, False])
    if not isinstance(periodic, list) or len(periodic) != 3:
        raise AMRFormatError(f"{index_path}: 'periodic' must be a list of three booleans")
    if not isinstance(grid_specs, list):
        raise AMRFormatError(f"{index_path}: 'grids' must be a list")

    by_level: dict[int, list[AMRGrid]] = {}
    for n, spec in enumerate(grid_specs):
        tag = f"{index_path} grid {n}"
        try:
            level = int(spec["level"])
            start = _triple(spec["start_index"], "start_index", tag)
            dims = _triple(spec["dims"], "dims", tag)
            blob_name = str(spec["blob"])
        except (KeyError, TypeError) as exc:
            raise AMRFormatError(f"{tag}: malformed index entry ({exc})") from exc
        if level < 0 or any(d < 1 for d in dims):
            raise AMRFormatError(f"{tag}: malformed index entry (level {level}, dims {dims})")
        blob_path = root / blob_name
        try:
            raw = blob_path.read_bytes()
        except FileNotFoundError as exc:
            raise AMRFormatError(f"{tag}: missing blob {blob_path}") from exc
        expected = int(np.prod(dims)) * 4
        if len(raw) != expected:
            raise AMRFormatError(
                f"{tag}: blob length mismatch for {blob_name} "
                f"(expected {expected} bytes, found {len(raw)})"
            )
        cells = np.frombuffer(raw, dtype=_F32LE).astype(np.float32)
        by_level.setdefault(level, []).append(
            AMRGrid(level, start, dims, cells.reshape(dims, order="F"))
        )

    n_levels = max(by_level) + 1 if by_level else 0
    levels = [by_level.get(lev, []) for lev in range(n_levels)]
    ds = AMRDataset(domain, refine_by, levels, tuple(bool(p) for p in periodic), field_name)
    validate_dataset(ds)
    ds._validated = True
    return ds


def save_amr(ds: AMRDataset, path) -> Path:
    """Write ``ds`` as an AMRI bundle; returns the bundle directory."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    entries = []
    n = 0
    for level, grids in enumerate(ds.levels):
        for g in grids:
            blob = f"grid_{n:04d}.bin"
            data = np.asarray(g.cells, dtype=_F32LE).ravel(order="F")
            (root / blob).write_bytes(data.tobytes())
            entries.append(
                {
                    "level": level,
                    "start_index": list(g.start_index),
                    "dims": list(g.dims),
                    "blob": blob,
                }
            )
            n += 1
    index = {
        "domain_dimensions": list(ds.domain_dimensions),
        "refine_by": ds.refine_by,
        "field_name": ds.field_name,
        "periodic": list(ds.periodic),
        "grids": entries,
    }
    (root / INDEX_NAME).write_text(json.dumps(index, indent=2), encoding="utf-8")
    return root
