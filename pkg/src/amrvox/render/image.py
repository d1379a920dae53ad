"""Float RGB frame buffer plus PPM/PFM IO."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass
class Image:
    """RGB float32 pixels, row-major with the top-left pixel first; shape ``(h, w, 3)``."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float32)
        if px.ndim != 3 or px.shape[2] != 3:
            raise ValueError(f"image pixels must have shape (h, w, 3), got {px.shape}")
        self.pixels = px

    @classmethod
    def blank(cls, width: int, height: int, color=(0.0, 0.0, 0.0)) -> "Image":
        px = np.empty((height, width, 3), dtype=np.float32)
        px[...] = color
        return cls(px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


def image_diff(a: Image, b: Image) -> dict:
    if a.pixels.shape != b.pixels.shape:
        raise ValueError(
            f"image dimensions differ: {a.width}x{a.height} vs {b.width}x{b.height}"
        )
    d = np.abs(a.pixels.astype(np.float64) - b.pixels.astype(np.float64))
    return {
        "max_abs": float(d.max()) if d.size else 0.0,
        "mean_abs": float(d.mean()) if d.size else 0.0,
        "max_abs_per_channel": d.reshape(-1, 3).max(axis=0).tolist(),
        "mean_abs_per_channel": d.reshape(-1, 3).mean(axis=0).tolist(),
    }


def write_image(img: Image, path, fmt: str | None = None) -> Path:
    path = Path(path)
    fmt = (fmt or path.suffix.lstrip(".")).lower()
    if fmt == "pfm":
        header = f"PF\n{img.width} {img.height}\n-1.0\n".encode("ascii")
        # PFM stores the bottom row first
        body = img.pixels[::-1].astype("<f4").tobytes()
    elif fmt == "ppm":
        header = f"P6\n{img.width} {img.height}\n255\n".encode("ascii")
        body = np.rint(np.clip(img.pixels, 0.0, 1.0) * 255.0).astype(np.uint8).tobytes()
    else:
        raise ValueError(f"unknown image format {fmt!r}; expected ppm or pfm")
    path.write_bytes(header + body)
    return path


def _header_tokens(buf: bytes, count: int) -> tuple[list[bytes], int]:
    tokens, pos = [], 0
    while len(tokens) < count:
        while pos < len(buf) and buf[pos:pos + 1].isspace():
            pos += 1
        start = pos
        while pos < len(buf) and not buf[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError("truncated image header")
        tokens.append(buf[start:pos])
    return tokens, pos + 1


def read_image(path) -> Image:
    buf = Path(path).read_bytes()
    tokens, pos = _header_tokens(buf, 4)
    magic = tokens[0]
    w, h = int(tokens[1]), int(tokens[2])
    if magic == b"PF":
        scale = float(tokens[3])
        dtype = "<f4" if scale < 0 else ">f4"
        n = w * h * 3
        data = np.frombuffer(buf, dtype=dtype, count=n, offset=pos)
        return Image(data.reshape(h, w, 3)[::-1].astype(np.float32))
    if magic == b"P6":
        data = np.frombuffer(buf, dtype=np.uint8, count=w * h * 3, offset=pos)
        return Image(data.reshape(h, w, 3).astype(np.float32) / 255.0)
    raise ValueError(f"unsupported image magic {magic!r}")
