"""OVDT tensor container: a deliberately trivial binary format.

Layout (little-endian):

    bytes 0..3   magic "OVDT"
    bytes 4..7   u32 version, currently 1
    byte  8      u8 dtype code, 0 = float32
    byte  9      u8 ndim
    next         ndim x u64 dims
    payload      row-major float32 values

Bit-exact across languages and across the primary/exporter boundary.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import SchemaError

MAGIC = b"OVDT"
VERSION = 1
DTYPE_F32 = 0


def write_ovdt(path: str | Path, arr: np.ndarray) -> None:
    """Write an array as float32 OVDT. Values must survive the float32 cast finitely."""
    arr = np.ascontiguousarray(arr, dtype=np.float32)
    if not np.all(np.isfinite(arr)):
        raise ValueError("OVDT payload must be finite")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", VERSION))
        f.write(struct.pack("<BB", DTYPE_F32, arr.ndim))
        for d in arr.shape:
            f.write(struct.pack("<Q", d))
        f.write(arr.tobytes(order="C"))


def read_ovdt(path: str | Path) -> np.ndarray:
    """Read an OVDT file into a float32 array; malformed files raise SchemaError."""
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:4] != MAGIC:
        raise SchemaError(f"{path}: not an OVDT file (bad magic)")
    if len(blob) < 10:
        raise SchemaError(f"{path}: truncated OVDT header")
    (version,) = struct.unpack_from("<I", blob, 4)
    if version != VERSION:
        raise SchemaError(f"{path}: unsupported OVDT version {version}")
    dtype_code, ndim = struct.unpack_from("<BB", blob, 8)
    if dtype_code != DTYPE_F32:
        raise SchemaError(f"{path}: unsupported OVDT dtype code {dtype_code}")
    offset = 10
    if len(blob) < offset + 8 * ndim:
        raise SchemaError(f"{path}: truncated OVDT dims")
    dims = struct.unpack_from(f"<{ndim}Q", blob, offset)
    offset += 8 * ndim
    count = 1
    for d in dims:
        count *= d
    payload = blob[offset:]
    if len(payload) != 4 * count:
        raise SchemaError(f"{path}: payload length {len(payload)} does not match dims {dims}")
    arr = np.frombuffer(payload, dtype="<f4").astype(np.float32)
    return arr.reshape(dims)
