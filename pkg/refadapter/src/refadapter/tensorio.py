"""Reader/writer for the harness's tensor file format.

Implemented from the documented byte layout (magic "SSTF", u16 version 1,
u8 dtype 0 = float32, u8 ndim, u32 dims, row-major little-endian payload)
rather than by importing the harness, so this package only depends on the
published interface.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"SSTF"


def read_tensor(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < 8 or data[:4] != MAGIC:
        raise ValueError(f"{path}: not a tensor file")
    version, dtype, ndim = struct.unpack_from("<HBB", data, 4)
    if version != 1 or dtype != 0:
        raise ValueError(f"{path}: unsupported version/dtype {version}/{dtype}")
    dims = struct.unpack_from(f"<{ndim}I", data, 8)
    payload = data[8 + 4 * ndim :]
    count = int(np.prod(dims, dtype=np.int64)) if ndim else 1
    if len(payload) != 4 * count:
        raise ValueError(f"{path}: truncated payload")
    return np.frombuffer(payload, dtype="<f4").reshape(dims).copy()


def write_tensor(path, array: np.ndarray) -> None:
    arr = np.ascontiguousarray(array, dtype="<f4")
    header = MAGIC + struct.pack("<HBB", 1, 0, arr.ndim)
    header += struct.pack(f"<{arr.ndim}I", *arr.shape)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(arr.tobytes())
