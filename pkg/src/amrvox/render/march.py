"""Emission-absorption raymarcher over (data, mask) level pairs."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ..levels import LevelVolumePair
from . import kernel
from .camera import Camera
from .image import Image
from .transfer import RenderSettings, ShaderConfig

_BOX_SLACK = 1e-9
_NO_TILE = np.zeros(4, dtype=np.int64)
_NO_IMAGE = np.zeros((1, 1, 3))
_NO_POINTS = np.zeros((1, 3))
_NO_CAMERA = (np.zeros(3), np.zeros(3), np.zeros(3), np.zeros(3), 1.0, 1.0, 1.0)
_NO_MARCH = (1.0, 1, 0.0, 0.0, 0.0, 0.0)


def _support(vol, pad: float) -> tuple[np.ndarray, np.ndarray]:
    """World span of active voxels widened by ``pad`` voxels."""
    b = vol.active_bounds()
    if b is None:
        return np.full(3, np.inf), np.full(3, -np.inf)
    t = np.asarray(vol.translation)
    return (b[0] - pad) * vol.voxel_size + t, (b[1] + pad) * vol.voxel_size + t


def level_box(pair: LevelVolumePair, mask_mode: str) -> np.ndarray:
    """World AABB outside of which the level contributes nothing; shape ``(2, 3)``."""
    lo, hi = _support(pair.data, 1.0)
    if mask_mode != "off":
        if pair.mask is None:
            mlo, mhi = pair.bounds
        elif mask_mode == "index":
            mlo, mhi = _support(pair.mask, 0.5)
            slack = _BOX_SLACK * pair.mask.voxel_size
            mlo, mhi = mlo - slack, mhi + slack
        else:
            mlo, mhi = _support(pair.mask, 1.0)
        lo, hi = np.maximum(lo, mlo), np.minimum(hi, mhi)
    return np.stack([lo, hi])


class _Scene:
    """Level stacks and shader constants laid out for the compiled kernels."""

    def __init__(self, levels: list[LevelVolumePair], shader: ShaderConfig):
        self.levels = list(levels)
        self.boxes = np.ascontiguousarray(
            np.stack([level_box(p, shader.mask_mode) for p in self.levels]), dtype=np.float64
        )
        self.has_mask = np.array([p.mask is not None for p in self.levels], dtype=np.int64)
        self.stack = kernel.pack_stack([p.data for p in self.levels] + [p.mask for p in self.levels])
        tf = shader.transfer
        self.tf_args = (
            float(tf.vmin), float(tf.vmax),
            np.ascontiguousarray(tf.opacity_x), np.ascontiguousarray(tf.opacity_y),
            np.ascontiguousarray(tf.color_x),
            np.ascontiguousarray(tf.color_rgb[:, 0]),
            np.ascontiguousarray(tf.color_rgb[:, 1]),
            np.ascontiguousarray(tf.color_rgb[:, 2]),
            float(shader.extinction_scale), float(shader.emission_scale),
            kernel.MODE_CODES[shader.mask_mode],
        )

    def volume_args(self):
        st = self.stack
        return (
            self.boxes, self.has_mask,
            st.lo, st.tshape, st.toff, st.table, st.values, st.vsize, st.trans, st.bg,
        )

    def union_extent(self) -> float:
        lo = self.boxes[:, 0].min(axis=0)
        hi = self.boxes[:, 1].max(axis=0)
        return float(np.max(hi - lo))


def shade_sample(levels, shader: ShaderConfig, p) -> tuple[np.ndarray, np.ndarray]:
    """Extinction and emitted colour at world points ``p`` (shape ``(..., 3)``).

    Each level contributes ``m_L * opacity(u_L)``; with partitioning masks
    exactly one level is non-zero and the colour is that level's colour.
    """
    p = np.asarray(p, dtype=np.float64)
    pts = p.reshape(-1, 3)
    tf = shader.transfer
    wsum = np.zeros(len(pts))
    csum = np.zeros((len(pts), 3))
    for pair in levels:
        if shader.mask_mode == "off":
            m = np.ones(len(pts))
        elif pair.mask is None:
            lo, hi = pair.bounds
            m = np.all((pts >= lo) & (pts < hi), axis=1).astype(np.float64)
        elif shader.mask_mode == "index":
            m = np.asarray(pair.mask.index_sample(pts), dtype=np.float64)
        else:
            m = np.asarray(pair.mask.trilinear_sample(pts), dtype=np.float64)
        u = np.asarray(pair.data.trilinear_sample(pts), dtype=np.float64)
        w = m * tf.opacity(u)
        wsum += w
        csum += w[:, None] * tf.color(u)
    sigma = wsum * shader.extinction_scale
    color = csum * (shader.emission_scale / np.maximum(wsum, kernel.EPS_WEIGHT))[:, None]
    return sigma.reshape(p.shape[:-1]), color.reshape(p.shape[:-1] + (3,))


def shade_points_compiled(levels, shader: ShaderConfig, p) -> tuple[np.ndarray, np.ndarray]:
    """Same as :func:`shade_sample` but through the compiled kernel."""
    scene = _Scene(levels, shader)
    pts = np.ascontiguousarray(np.asarray(p, dtype=np.float64).reshape(-1, 3))
    out = np.empty((len(pts), 4))
    kernel.run_kernel(0, pts, out, _NO_TILE, _NO_IMAGE, *_NO_CAMERA, *_NO_MARCH, *scene.volume_args(), *scene.tf_args)
    return out[:, 0], out[:, 1:]


def _tiles(width: int, height: int, size: int):
    for y0 in range(0, height, size):
        for x0 in range(0, width, size):
            yield x0, y0, min(x0 + size, width), min(y0 + size, height)


def render_image(
    levels, shader: ShaderConfig, cam: Camera, settings: RenderSettings | None = None
) -> Image:
    """Front-to-back raymarch of every pixel centre.

    Samples sit at ``t = (k + 1/2) dt`` along each ray, restricted to the
    union of level boxes.  Each sample composites ``a = 1 - exp(-sigma dt)``.
    Pixels are independent, so the result does not depend on ``threads``.
    """
    settings = settings or RenderSettings()
    levels = list(levels)
    if not levels:
        raise ValueError("render_image needs at least one level")
    scene = _Scene(levels, shader)
    extent = scene.union_extent()
    if np.isfinite(extent) and settings.dt > extent:
        raise ValueError(f"dt {settings.dt} exceeds the volume extent {extent:.6g}")
    fwd, right, up = cam.basis()
    out = np.zeros((cam.height, cam.width, 3), dtype=np.float64)
    cam_args = (
        np.asarray(cam.position, dtype=np.float64), fwd, right, up,
        cam.tan_half_fov, float(cam.width), float(cam.height),
    )
    bg = settings.background
    march_args = (float(settings.dt), int(settings.max_steps), bg[0], bg[1], bg[2], float(settings.early_exit))
    vol_args = scene.volume_args()

    no_out = np.zeros((1, 4))

    def run(tile):
        kernel.run_kernel(
            1, _NO_POINTS, no_out, np.asarray(tile, dtype=np.int64), out,
            *cam_args, *march_args, *vol_args, *scene.tf_args,
        )

    tiles = list(_tiles(cam.width, cam.height, settings.tile))
    if settings.threads == 1:
        for tile in tiles:
            run(tile)
    else:
        with ThreadPoolExecutor(max_workers=settings.threads) as pool:
            list(pool.map(run, tiles))
    return Image(out.astype(np.float32))
