"""SVOL container: several named sparse volumes in one little-endian file.

Layout::

    "SVOL"  u32 version=1  u32 grid_count
    per grid:  u16 name_len, name (UTF-8), f64 voxel_size, f64[3] translation,
               f32 background, u64 leaf_count
    per leaf:  i32[3] origin, 64-byte activity mask (bit n = x + 8y + 64z,
               LSB-first), 512 x f32 values (x-fastest)
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .sparse import Leaf, SparseVolume

MAGIC = b"SVOL"
VERSION = 1
FILE_HEADER = struct.Struct("<4sII")
GRID_FIXED = struct.Struct("<d3dfQ")
LEAF_HEADER = struct.Struct("<3i")
LEAF_BYTES = LEAF_HEADER.size + 64 + 512 * 4


class SvolFormatError(ValueError):
    def __init__(self, message: str, offset: int, path=None):
        where = f"{path}: " if path is not None else ""
        super().__init__(f"{where}{message} (at byte offset {offset})")
        self.message = message
        self.offset = offset
        self.path = path


def serialized_size(volumes) -> int:
    size = FILE_HEADER.size
    for v in volumes:
        size += 2 + len(v.name.encode("utf-8")) + GRID_FIXED.size + LEAF_BYTES * v.leaf_count
    return size


def _encode(volumes) -> bytes:
    parts = [FILE_HEADER.pack(MAGIC, VERSION, len(volumes))]
    for v in volumes:
        name = v.name.encode("utf-8")
        parts.append(struct.pack("<H", len(name)))
        parts.append(name)
        parts.append(GRID_FIXED.pack(v.voxel_size, *v.translation, v.background, v.leaf_count))
        for key in sorted(v.leaves, key=lambda k: (k[2], k[1], k[0])):
            leaf = v.leaves[key]
            parts.append(LEAF_HEADER.pack(*key))
            bits = leaf.active.ravel(order="F")
            parts.append(np.packbits(bits, bitorder="little").tobytes())
            parts.append(leaf.values.astype("<f4").ravel(order="F").tobytes())
    return b"".join(parts)


def write_svol(path, volumes) -> Path:
    volumes = list(volumes)
    if not volumes:
        raise ValueError("write_svol needs at least one volume")
    path = Path(path)
    path.write_bytes(_encode(volumes))
    return path


def _decode(buf: bytes) -> list[SparseVolume]:
    pos = 0

    def take(n: int, what: str) -> bytes:
        nonlocal pos
        if pos + n > len(buf):
            raise SvolFormatError(f"truncated file while reading {what}", pos)
        chunk = buf[pos:pos + n]
        pos += n
        return chunk

    magic, version, count = FILE_HEADER.unpack(take(FILE_HEADER.size, "file header"))
    if magic != MAGIC:
        raise SvolFormatError(f"bad magic {magic!r}", 0)
    if version != VERSION:
        raise SvolFormatError(f"unsupported version {version}", 4)
    volumes = []
    for _ in range(count):
        (name_len,) = struct.unpack("<H", take(2, "grid name length"))
        name_at = pos
        try:
            name = take(name_len, "grid name").decode("utf-8")
        except UnicodeDecodeError as exc:
            raise SvolFormatError("grid name is not valid UTF-8", name_at) from exc
        fixed_at = pos
        vs, tx, ty, tz, bg, nleaves = GRID_FIXED.unpack(take(GRID_FIXED.size, "grid header"))
        if not vs > 0:
            raise SvolFormatError(f"non-positive voxel size {vs}", fixed_at)
        vol = SparseVolume(name, vs, (tx, ty, tz), bg)
        for _ in range(nleaves):
            key = LEAF_HEADER.unpack(take(LEAF_HEADER.size, "leaf origin"))
            if any(k % 8 for k in key):
                raise SvolFormatError(f"leaf origin {key} not a multiple of 8", pos - LEAF_HEADER.size)
            bits = np.unpackbits(np.frombuffer(take(64, "leaf mask"), dtype=np.uint8), bitorder="little")
            vals = np.frombuffer(take(2048, "leaf values"), dtype="<f4").astype(np.float32)
            vol.leaves[key] = Leaf(
                vals.reshape((8, 8, 8), order="F").copy(),
                bits.astype(bool).reshape((8, 8, 8), order="F").copy(),
            )
        volumes.append(vol)
    if pos != len(buf):
        raise SvolFormatError(f"{len(buf) - pos} trailing bytes", pos)
    return volumes


def read_svol(path) -> list[SparseVolume]:
    try:
        return _decode(Path(path).read_bytes())
    except SvolFormatError as exc:
        raise SvolFormatError(exc.message, exc.offset, path) from None
