"""Binary tensor container used for feature caches and adapter exchange.

Byte layout (little-endian throughout):

    offset  size  field
    0       4     magic b"SSTF"
    4       2     version, u16 (currently 1)
    6       1     dtype, u8 (0 = float32; the only defined code)
    7       1     ndim, u8
    8       4*n   dims, u32 each
    ...           payload, row-major float32

The format is deliberately trivial so adapters in any language can read and
write it without a framework dependency.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import TensorFileError

MAGIC = b"SSTF"
VERSION = 1
DTYPE_F32 = 0


def write_tensor(path, array: np.ndarray) -> None:
    """Write an array as a float32 tensor file."""
    arr = np.ascontiguousarray(array, dtype="<f4")
    if arr.ndim > 255:
        raise TensorFileError(f"ndim {arr.ndim} exceeds format limit")
    header = MAGIC + struct.pack("<HBB", VERSION, DTYPE_F32, arr.ndim)
    header += struct.pack(f"<{arr.ndim}I", *arr.shape)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(arr.tobytes())


def read_tensor(path) -> np.ndarray:
    """Read a tensor file back as a float32 array."""
    data = Path(path).read_bytes()
    if len(data) < 8:
        raise TensorFileError(f"{path}: truncated header")
    if data[:4] != MAGIC:
        raise TensorFileError(f"{path}: bad magic {data[:4]!r}")
    version, dtype, ndim = struct.unpack_from("<HBB", data, 4)
    if version != VERSION:
        raise TensorFileError(f"{path}: unsupported version {version}")
    if dtype != DTYPE_F32:
        raise TensorFileError(f"{path}: unsupported dtype code {dtype}")
    dims_end = 8 + 4 * ndim
    if len(data) < dims_end:
        raise TensorFileError(f"{path}: truncated dims")
    dims = struct.unpack_from(f"<{ndim}I", data, 8)
    count = int(np.prod(dims, dtype=np.int64)) if ndim else 1
    payload = data[dims_end:]
    if len(payload) != 4 * count:
        raise TensorFileError(
            f"{path}: payload is {len(payload)} bytes, expected {4 * count}"
        )
    return np.frombuffer(payload, dtype="<f4").reshape(dims).copy()
