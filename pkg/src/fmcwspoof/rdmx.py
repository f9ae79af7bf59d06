"""RDMX binary matrix files.

Layout (all little-endian)::

    b"RDMX" | u16 version | u16 kind | u32 rank | u32 dims[rank] | payload

``kind`` 0 stores complex values as (re, im) float64 pairs, ``kind`` 1 stores
float64. The payload is row-major.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import FormatError

MAGIC = b"RDMX"
VERSION = 1
KIND_COMPLEX = 0
KIND_REAL = 1
_DTYPES = {KIND_COMPLEX: np.dtype("<c16"), KIND_REAL: np.dtype("<f8")}


def encode(array: np.ndarray) -> bytes:
    array = np.asarray(array)
    kind = KIND_COMPLEX if np.iscomplexobj(array) else KIND_REAL
    header = MAGIC + struct.pack("<HHI", VERSION, kind, array.ndim)
    header += struct.pack(f"<{array.ndim}I", *array.shape)
    return header + np.ascontiguousarray(array, dtype=_DTYPES[kind]).tobytes()


def decode(buf: bytes) -> np.ndarray:
    if len(buf) < 12:
        raise FormatError("file shorter than the fixed RDMX header", len(buf))
    if buf[:4] != MAGIC:
        raise FormatError(f"bad magic {buf[:4]!r}", 0)
    version, kind, rank = struct.unpack_from("<HHI", buf, 4)
    if version != VERSION:
        raise FormatError(f"unsupported RDMX version {version}", 4)
    if kind not in _DTYPES:
        raise FormatError(f"unknown element kind {kind}", 6)
    dims_end = 12 + 4 * rank
    if len(buf) < dims_end:
        raise FormatError(f"header declares rank {rank} but dimensions are truncated", len(buf))
    dims = struct.unpack_from(f"<{rank}I", buf, 12)
    dtype = _DTYPES[kind]
    expected = int(np.prod(dims, dtype=np.int64)) * dtype.itemsize
    actual = len(buf) - dims_end
    if actual != expected:
        raise FormatError(f"payload is {actual} bytes, dimensions {dims} need {expected}",
                          dims_end + min(actual, expected))
    data = np.frombuffer(buf, dtype=dtype, offset=dims_end).reshape(dims)
    return data.astype(dtype.newbyteorder("="), copy=True)


def write(path, array: np.ndarray) -> None:
    with open(path, "wb") as fh:
        fh.write(encode(array))


def read(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return decode(fh.read())
