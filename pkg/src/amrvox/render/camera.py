from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Camera:
    """Pinhole camera; ``vfov`` is the vertical field of view in degrees."""

    position: tuple[float, float, float]
    look_at: tuple[float, float, float]
    up: tuple[float, float, float] = (0.0, 1.0, 0.0)
    vfov: float = 40.0
    width: int = 256
    height: int = 256

    def __post_init__(self):
        for name in ("position", "look_at", "up"):
            val = tuple(float(x) for x in getattr(self, name))
            if len(val) != 3 or not all(math.isfinite(x) for x in val):
                raise ValueError(f"camera {name} must be three finite numbers, got {val}")
            object.__setattr__(self, name, val)
        if not (math.isfinite(self.vfov) and 0.0 < self.vfov < 180.0):
            raise ValueError(f"camera vfov must be in (0, 180), got {self.vfov}")
        if int(self.width) < 1 or int(self.height) < 1:
            raise ValueError(f"camera size must be positive, got {self.width}x{self.height}")
        object.__setattr__(self, "width", int(self.width))
        object.__setattr__(self, "height", int(self.height))
        fwd = np.subtract(self.look_at, self.position)
        if not np.linalg.norm(fwd) > 0:
            raise ValueError("camera position and look_at coincide")
        if np.linalg.norm(np.cross(fwd, self.up)) <= 1e-12 * np.linalg.norm(fwd) * np.linalg.norm(self.up):
            raise ValueError("camera up vector is parallel to the view direction")

    def basis(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Unit forward, right and up vectors."""
        fwd = np.subtract(self.look_at, self.position).astype(np.float64)
        fwd /= np.linalg.norm(fwd)
        right = np.cross(fwd, np.asarray(self.up, dtype=np.float64))
        right /= np.linalg.norm(right)
        up = np.cross(right, fwd)
        return fwd, right, up

    @property
    def tan_half_fov(self) -> float:
        return math.tan(math.radians(self.vfov) / 2.0)

    def scaled(self, k: float) -> "Camera":
        return Camera(
            tuple(x * k for x in self.position),
            tuple(x * k for x in self.look_at),
            self.up,
            self.vfov,
            self.width,
            self.height,
        )


def generate_ray(cam: Camera, px: float, py: float) -> tuple[np.ndarray, np.ndarray]:
    """Origin and unit direction through image-plane position ``(px, py)``.

    ``(0, 0)`` is the top-left corner of the image; pixel ``(i, j)`` has its
    centre at ``(i + 0.5, j + 0.5)``.
    """
    fwd, right, up = cam.basis()
    th = cam.tan_half_fov
    sx = (2.0 * px / cam.width - 1.0) * th * (cam.width / cam.height)
    sy = (1.0 - 2.0 * py / cam.height) * th
    d = fwd + sx * right + sy * up
    return np.asarray(cam.position, dtype=np.float64), d / np.linalg.norm(d)
