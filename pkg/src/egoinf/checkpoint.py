"""Versioned binary container for named fp64 matrices.

Layout (all integers little-endian, documented for external readers):

    magic   4 bytes  b"EGCK"
    version u32      currently 1
    mlen    u32      length of the UTF-8 JSON metadata blob
    meta    mlen bytes
    count   u32      number of matrices
    then per matrix, in file order:
        nlen  u16         name length
        name  nlen bytes  UTF-8
        rows  u32
        cols  u32
        data  rows*cols float64, little-endian, row-major
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import DataError

MAGIC = b"EGCK"
VERSION = 1


def save_checkpoint(path, matrices: dict[str, np.ndarray], meta: dict) -> None:
    blob = json.dumps(meta, separators=(",", ":"), sort_keys=True).encode("utf-8")
    parts = [MAGIC, struct.pack("<I", VERSION), struct.pack("<I", len(blob)), blob]
    parts.append(struct.pack("<I", len(matrices)))
    for name, arr in matrices.items():
        a = np.ascontiguousarray(arr, dtype=np.float64)
        if a.ndim != 2:
            raise DataError(f"checkpoint matrix '{name}' must be 2-D, got {a.shape}")
        nb = name.encode("utf-8")
        parts.append(struct.pack("<H", len(nb)))
        parts.append(nb)
        parts.append(struct.pack("<II", a.shape[0], a.shape[1]))
        parts.append(a.astype("<f8").tobytes())
    Path(path).write_bytes(b"".join(parts))


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], dict]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"checkpoint not found: {path}")
    raw = path.read_bytes()
    if raw[:4] != MAGIC:
        raise DataError(f"{path}: not a checkpoint file (bad magic)")
    (version,) = struct.unpack_from("<I", raw, 4)
    if version != VERSION:
        raise DataError(f"{path}: unsupported checkpoint version {version}")
    (mlen,) = struct.unpack_from("<I", raw, 8)
    off = 12
    meta = json.loads(raw[off : off + mlen].decode("utf-8"))
    off += mlen
    (count,) = struct.unpack_from("<I", raw, off)
    off += 4
    matrices: dict[str, np.ndarray] = {}
    for _ in range(count):
        (nlen,) = struct.unpack_from("<H", raw, off)
        off += 2
        name = raw[off : off + nlen].decode("utf-8")
        off += nlen
        rows, cols = struct.unpack_from("<II", raw, off)
        off += 8
        size = rows * cols * 8
        arr = np.frombuffer(raw[off : off + size], dtype="<f8").reshape(rows, cols)
        off += size
        matrices[name] = arr.copy()
    return matrices, meta
