"""Uniform covering grid vs multiresolution level volumes: memory and timing."""
from __future__ import annotations

import csv
import json
import logging
import os
import time
import tracemalloc
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .amr import AMRDataset, CapacityError
from .levels import BuildConfig, LevelVolumePair, convert_dataset, load_levels, uniform_pair
from .render import Camera, RenderSettings, ShaderConfig, TransferFunction, render_image, write_image
from .sparse import active_stats
from .svol import read_svol, write_svol

log = logging.getLogger(__name__)

#: Largest uniform grid the benchmark will materialise (cells).
MAX_UNIFORM_CELLS = 2**24


@dataclass
class RepresentationResult:
    name: str
    feasible: bool = True
    note: str = ""
    level: int | None = None
    active_data_voxels: int | None = None
    active_voxels_total: int | None = None
    leaf_count: int | None = None
    bytes: int | None = None
    load_ms: float | None = None
    render_ms: dict[str, float] = field(default_factory=dict)
    peak_traced_bytes: int | None = None
    images: dict[str, str] = field(default_factory=dict)
    files: list[str] = field(default_factory=list)


@dataclass
class BenchReport:
    multiresolution: RepresentationResult
    uniform: RepresentationResult
    ratios: dict[str, float]
    environment: dict

    def to_dict(self) -> dict:
        return asdict(self)

    def rows(self):
        """``(representation, metric, value, unit)`` tuples for the CSV report."""
        for rep in (self.multiresolution, self.uniform):
            yield rep.name, "feasible", int(rep.feasible), "bool"
            for metric, unit in (
                ("active_data_voxels", "voxels"),
                ("active_voxels_total", "voxels"),
                ("leaf_count", "leaves"),
                ("bytes", "bytes"),
                ("load_ms", "ms"),
                ("peak_traced_bytes", "bytes"),
            ):
                value = getattr(rep, metric)
                if value is not None:
                    yield rep.name, metric, value, unit
            for cam, ms in rep.render_ms.items():
                yield rep.name, f"render_ms_{cam}", ms, "ms"
        for metric, value in self.ratios.items():
            yield "ratio", metric, value, "uniform/multiresolution"


def default_shader(levels: list[LevelVolumePair]) -> ShaderConfig:
    lo = min(float(np.min(p.data.packed().values)) for p in levels)
    hi = max(float(np.max(p.data.packed().values)) for p in levels)
    lo = min(lo, 0.0)
    if not hi > lo:
        hi = lo + 1.0
    return ShaderConfig(TransferFunction.linear(lo, hi, max_opacity=1.0), extinction_scale=4.0)


def load_uniform_file(path) -> LevelVolumePair:
    """Dense single-volume file written by :func:`run_benchmark`."""
    (data,) = read_svol(path)
    v = data.voxel_size
    lo, hi = data.active_bounds()
    t = np.asarray(data.translation)
    bounds = ((lo - 0.5) * v + t, (hi + 0.5) * v + t)
    return LevelVolumePair(0, data, None, v, float(bounds[0][0]) * -1.0, 0, bounds)


def _timed(fn, repeats: int):
    times = []
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn()
        times.append((time.perf_counter() - t0) * 1e3)
    return result, float(np.mean(times))


def _measure(rep, loader, shader_for, cameras, settings, repeats, out_dir):
    tracemalloc.start()
    try:
        levels, rep.load_ms = _timed(loader, repeats)
        shader = shader_for(levels)
        # warm-up so the timings exclude kernel loading
        c = next(iter(cameras.values()))
        render_image(levels, shader, Camera(c.position, c.look_at, c.up, c.vfov, 1, 1), settings)
        for cam_name, cam in cameras.items():
            img, rep.render_ms[cam_name] = _timed(
                lambda: render_image(levels, shader, cam, settings), repeats
            )
            path = out_dir / f"{rep.name}_{cam_name}.pfm"
            write_image(img, path, "pfm")
            rep.images[cam_name] = str(path)
        rep.peak_traced_bytes = tracemalloc.get_traced_memory()[1]
    finally:
        tracemalloc.stop()
    return shader


def run_benchmark(
    ds: AMRDataset,
    cfg: BuildConfig | None,
    cam_outside: Camera,
    cam_inside: Camera,
    settings: RenderSettings | None = None,
    out_dir=".",
    repeats: int = 3,
    uniform_level: int | None = None,
    shader: ShaderConfig | None = None,
    max_uniform_cells: int = MAX_UNIFORM_CELLS,
) -> BenchReport:
    """Build, save, reload and render both representations; write ``bench.json``/``bench.csv``.

    Voxel and byte counts come from the artifacts themselves; times are
    wall-clock means over ``repeats`` runs.  A uniform grid above
    ``max_uniform_cells`` is reported as infeasible instead of failing.
    """
    cfg = cfg or BuildConfig()
    settings = settings or RenderSettings()
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cameras = {"outside": cam_outside, "inside": cam_inside}
    top = cfg.level_range(ds)[-1]
    ulevel = top if uniform_level is None else uniform_level

    multi = RepresentationResult("multiresolution", level=top)
    paths = convert_dataset(ds, cfg, out / "multires")
    multi.files = [str(p) for p in paths]
    vols = [v for p in paths for v in read_svol(p)]
    stats = active_stats(vols)
    multi.active_voxels_total = stats["active_voxels"]
    multi.leaf_count = stats["leaf_count"]
    multi.active_data_voxels = sum(v.active_voxel_count for v in vols if v.name != "mask")
    multi.bytes = sum(os.path.getsize(p) for p in paths)
    shared_shader = shader
    chosen = _measure(
        multi,
        lambda: load_levels(paths),
        lambda levels: shared_shader or default_shader(levels),
        cameras, settings, repeats, out,
    )

    uni = RepresentationResult("uniform", level=ulevel)
    try:
        pair = uniform_pair(ds, ulevel, cfg.scale, ghost=False, max_cells=max_uniform_cells)
    except CapacityError as exc:
        uni.feasible = False
        uni.note = str(exc)
        log.warning("uniform representation infeasible: %s", exc)
    else:
        upath = write_svol(out / "uniform.svol", [pair.data])
        uni.files = [str(upath)]
        ustats = active_stats([pair.data])
        uni.active_voxels_total = uni.active_data_voxels = ustats["active_voxels"]
        uni.leaf_count = ustats["leaf_count"]
        uni.bytes = os.path.getsize(upath)
        _measure(uni, lambda: [load_uniform_file(upath)], lambda _: chosen, cameras, settings, repeats, out)

    ratios = {}
    if uni.feasible:
        for metric in ("active_data_voxels", "bytes", "load_ms"):
            a, b = getattr(uni, metric), getattr(multi, metric)
            if a is not None and b:
                ratios[metric] = a / b
        for cam in cameras:
            if multi.render_ms.get(cam):
                ratios[f"render_ms_{cam}"] = uni.render_ms[cam] / multi.render_ms[cam]

    report = BenchReport(
        multi,
        uni,
        ratios,
        {
            "threads": settings.threads,
            "dt": settings.dt,
            "image_size": [cam_outside.width, cam_outside.height],
            "repeats": repeats,
            "uniform_level": ulevel,
            "max_level": top,
        },
    )
    (out / "bench.json").write_text(json.dumps(report.to_dict(), indent=2))
    with open(out / "bench.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["representation", "metric", "value", "unit"])
        w.writerows(report.rows())
    return report


def default_cameras(ds: AMRDataset, scale: float = 1.0, size=(256, 256)) -> tuple[Camera, Camera]:
    """An outside view of the whole domain and an inside view of the finest grid."""
    v0 = scale / ds.domain_dimensions[0]
    centre = np.full(3, 0.5 * scale - v0)
    outside = Camera(tuple(centre + np.array([0.35, 0.45, -2.4]) * scale), tuple(centre),
                     vfov=40.0, width=size[0], height=size[1])
    finest = ds.levels[-1][0]
    res = ds.resolution(ds.max_level)
    lo = np.asarray(finest.start_index) / res * scale - v0
    hi = np.asarray(finest.end_index) / res * scale - v0
    target = (lo + hi) / 2
    eye = target - np.array([0.0, 0.0, 0.75]) * (hi - lo)[2] - np.array([0.0, 0.0, 0.02 * scale])
    inside = Camera(tuple(eye), tuple(target), vfov=60.0, width=size[0], height=size[1])
    return outside, inside
