"""Minimal binary tensor container shared with external consumers.

Layout (all integers little-endian):

    magic   4 bytes  "GRDT"
    version u16      1
    dtype   u8       0 = u8, 1 = f32
    ndim    u8
    dims    ndim x u32
    payload row-major values, last dimension fastest

No padding, no trailing bytes. The format is documented bit-exactly in
docs/formats.md so other languages can implement it from the doc alone.
"""

from __future__ import annotations

import os
import struct
from pathlib import Path

import numpy as np

MAGIC = b"GRDT"
VERSION = 1
DTYPE_U8 = 0
DTYPE_F32 = 1

_DTYPE_CODES = {np.dtype(np.uint8): DTYPE_U8, np.dtype(np.float32): DTYPE_F32}
_DTYPE_NUMPY = {DTYPE_U8: np.dtype("u1"), DTYPE_F32: np.dtype("<f4")}


class TensorFormatError(ValueError):
    pass


def serialize_tensor(array: np.ndarray) -> bytes:
    dtype = np.dtype(array.dtype)
    if dtype not in _DTYPE_CODES:
        raise TensorFormatError(f"unsupported dtype {dtype} (only u8 and f32)")
    if array.ndim < 1 or array.ndim > 255:
        raise TensorFormatError(f"ndim {array.ndim} out of range")
    for d in array.shape:
        if d <= 0 or d > 0xFFFFFFFF:
            raise TensorFormatError(f"dimension {d} does not fit u32")
    header = MAGIC + struct.pack(
        "<HBB", VERSION, _DTYPE_CODES[dtype], array.ndim
    ) + struct.pack(f"<{array.ndim}I", *array.shape)
    payload = np.ascontiguousarray(array).astype(dtype.newbyteorder("<")).tobytes()
    return header + payload


def deserialize_tensor(data: bytes) -> np.ndarray:
    if len(data) < 8:
        raise TensorFormatError(f"truncated header: {len(data)} bytes")
    if data[:4] != MAGIC:
        raise TensorFormatError(f"bad magic {data[:4]!r}, expected {MAGIC!r}")
    version, dtype_code, ndim = struct.unpack_from("<HBB", data, 4)
    if version != VERSION:
        raise TensorFormatError(f"unsupported version {version}, expected {VERSION}")
    if dtype_code not in _DTYPE_NUMPY:
        raise TensorFormatError(f"unknown dtype code {dtype_code}")
    if len(data) < 8 + 4 * ndim:
        raise TensorFormatError("truncated dimension list")
    dims = struct.unpack_from(f"<{ndim}I", data, 8)
    if any(d == 0 for d in dims):
        raise TensorFormatError(f"zero dimension in {dims}")
    dtype = _DTYPE_NUMPY[dtype_code]
    count = 1
    for d in dims:
        count *= d
    expected = 8 + 4 * ndim + count * dtype.itemsize
    if len(data) < expected:
        raise TensorFormatError(
            f"truncated payload: file has {len(data)} bytes, need {expected}"
        )
    if len(data) > expected:
        raise TensorFormatError(
            f"trailing bytes: file has {len(data)} bytes, expected {expected}"
        )
    array = np.frombuffer(data, dtype=dtype, count=count, offset=8 + 4 * ndim)
    return array.reshape(dims).copy()


def write_tensor(path: Path | str, array: np.ndarray) -> None:
    """Atomic write: the file is either absent or complete, never partial."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(serialize_tensor(array))
    os.replace(tmp, path)


def read_tensor(path: Path | str) -> np.ndarray:
    return deserialize_tensor(Path(path).read_bytes())
