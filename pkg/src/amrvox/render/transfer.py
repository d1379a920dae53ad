"""Transfer functions and shader settings."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MASK_MODES = ("index", "interpolated", "off")


@dataclass(frozen=True)
class TransferFunction:
    """Piecewise-linear opacity and colour ramps over normalised values.

    Control positions live in ``[0, 1]`` and map onto ``[vmin, vmax]``.
    Values outside the domain clamp to the end points.
    """

    vmin: float
    vmax: float
    opacity_x: np.ndarray
    opacity_y: np.ndarray
    color_x: np.ndarray
    color_rgb: np.ndarray

    def __post_init__(self):
        if not (np.isfinite(self.vmin) and np.isfinite(self.vmax) and self.vmax > self.vmin):
            raise ValueError(f"transfer domain must satisfy vmin < vmax, got [{self.vmin}, {self.vmax}]")
        for name in ("opacity_x", "opacity_y", "color_x"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.float64).ravel())
        object.__setattr__(self, "color_rgb", np.asarray(self.color_rgb, dtype=np.float64).reshape(-1, 3))
        for xs, what in ((self.opacity_x, "opacity"), (self.color_x, "color")):
            if len(xs) < 1:
                raise ValueError(f"{what} ramp needs at least one control point")
            if np.any(np.diff(xs) <= 0):
                raise ValueError(f"{what} ramp positions must be strictly increasing")
            if xs[0] < 0 or xs[-1] > 1:
                raise ValueError(f"{what} ramp positions must lie in [0, 1]")
        if len(self.opacity_y) != len(self.opacity_x) or len(self.color_rgb) != len(self.color_x):
            raise ValueError("ramp positions and values differ in length")
        if np.any((self.opacity_y < 0) | (self.opacity_y > 1)):
            raise ValueError("opacities must lie in [0, 1]")
        if np.any((self.color_rgb < 0) | (self.color_rgb > 1)):
            raise ValueError("colours must lie in [0, 1]")

    @classmethod
    def constant(cls, opacity: float, color=(1.0, 1.0, 1.0), vmin=0.0, vmax=1.0):
        return cls(vmin, vmax, [0.0, 1.0], [opacity, opacity], [0.0, 1.0], [color, color])

    @classmethod
    def linear(cls, vmin: float, vmax: float, max_opacity: float = 1.0, colors=None):
        """Opacity rising linearly from 0 to ``max_opacity``; default colour ramp blue to white."""
        if colors is None:
            colors = [(0.1, 0.2, 0.8), (0.9, 0.5, 0.1), (1.0, 1.0, 0.9)]
        cx = np.linspace(0.0, 1.0, len(colors))
        return cls(vmin, vmax, [0.0, 1.0], [0.0, max_opacity], cx, colors)

    @classmethod
    def from_ramp_file(cls, path) -> "TransferFunction":
        """Read ``value opacity r g b`` lines (``#`` starts a comment).

        Values are in data units and must increase; the first and last
        values become the transfer domain.
        """
        rows = []
        for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 5:
                raise ValueError(f"{path}:{lineno}: expected 'value opacity r g b'")
            try:
                rows.append([float(p) for p in parts])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
        if len(rows) < 2:
            raise ValueError(f"{path}: ramp needs at least two lines")
        arr = np.asarray(rows)
        vmin, vmax = arr[0, 0], arr[-1, 0]
        if not vmax > vmin:
            raise ValueError(f"{path}: ramp values must increase")
        x = (arr[:, 0] - vmin) / (vmax - vmin)
        x[0], x[-1] = 0.0, 1.0
        return cls(vmin, vmax, x, arr[:, 1], x, arr[:, 2:5])

    def normalize(self, u):
        return np.clip((np.asarray(u, dtype=np.float64) - self.vmin) / (self.vmax - self.vmin), 0.0, 1.0)

    def opacity(self, u):
        return np.interp(self.normalize(u), self.opacity_x, self.opacity_y)

    def color(self, u):
        n = self.normalize(u)
        return np.stack([np.interp(n, self.color_x, self.color_rgb[:, c]) for c in range(3)], axis=-1)


@dataclass(frozen=True)
class ShaderConfig:
    transfer: TransferFunction
    extinction_scale: float = 1.0
    emission_scale: float = 1.0
    mask_mode: str = "index"

    def __post_init__(self):
        if self.mask_mode not in MASK_MODES:
            raise ValueError(f"mask_mode must be one of {MASK_MODES}, got {self.mask_mode!r}")
        if not (np.isfinite(self.extinction_scale) and self.extinction_scale >= 0):
            raise ValueError("extinction_scale must be finite and >= 0")
        if not (np.isfinite(self.emission_scale) and self.emission_scale >= 0):
            raise ValueError("emission_scale must be finite and >= 0")


@dataclass(frozen=True)
class RenderSettings:
    dt: float = 1.0 / 256
    max_steps: int = 1_000_000
    background: tuple[float, float, float] = (0.0, 0.0, 0.0)
    threads: int = 1
    tile: int = 32
    early_exit: float = 1e-4

    def __post_init__(self):
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be finite and > 0, got {self.dt}")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        bg = tuple(float(c) for c in self.background)
        if len(bg) != 3 or not all(np.isfinite(c) and c >= 0 for c in bg):
            raise ValueError(f"background must be three finite non-negative numbers, got {bg}")
        object.__setattr__(self, "background", bg)
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        if self.tile < 1:
            raise ValueError("tile must be >= 1")
