"""Named-tensor checkpoint file.

Binary layout, all integers little-endian:

    magic   4 bytes  b"TPCK"
    version u32      currently 1
    count   u32      number of entries
    entry:  name_len u32, name UTF-8, rank u32, dims u64 each,
            then prod(dims) float32 values, row-major
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Dict

import numpy as np

from ..errors import DataFormatError

MAGIC = b"TPCK"
VERSION = 1


def save_tensors(path, tensors: Dict[str, np.ndarray]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(tensors)))
        for name, arr in tensors.items():
            raw = name.encode("utf-8")
            arr = np.ascontiguousarray(arr, dtype="<f4")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<I", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
            fh.write(arr.tobytes())


def load_tensors(path) -> Dict[str, np.ndarray]:
    path = Path(path)
    data = path.read_bytes()
    if data[:4] != MAGIC:
        raise DataFormatError(f"{path}: bad magic bytes {data[:4]!r}, expected {MAGIC!r}")
    version, count = struct.unpack_from("<II", data, 4)
    if version != VERSION:
        raise DataFormatError(f"{path}: unsupported checkpoint version {version}")
    offset = 12
    out: Dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack_from("<I", data, offset)
        offset += 4
        name = data[offset:offset + name_len].decode("utf-8")
        offset += name_len
        (rank,) = struct.unpack_from("<I", data, offset)
        offset += 4
        dims = struct.unpack_from(f"<{rank}Q", data, offset)
        offset += 8 * rank
        n = int(np.prod(dims)) if rank else 1
        arr = np.frombuffer(data, dtype="<f4", count=n, offset=offset).reshape(dims)
        offset += 4 * n
        out[name] = arr.copy()
    if offset != len(data):
        raise DataFormatError(f"{path}: {len(data) - offset} trailing bytes")
    return out
