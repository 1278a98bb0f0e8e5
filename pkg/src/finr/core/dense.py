# Copyright (c) 2025 Mahmood Khordoo
#
# This software is licensed under the MIT License.
# See the LICENSE file in the root directory for details.

"""
Dense tensor storage and the FTNR raw dump format.

FTNR layout (all little-endian):
    magic   4 bytes  b"FTNR"
    version u16
    dtype   u8       0 = float32, 1 = float64
    modes   u8
    extents modes x u64
    data    row-major values
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from finr.errors import CheckpointError, ShapeError

FTNR_MAGIC = b"FTNR"
FTNR_VERSION = 1
MAX_MODES = 6

_DTYPE_CODES = {np.dtype("<f4"): 0, np.dtype("<f8"): 1}
_CODE_DTYPES = {code: dtype for dtype, code in _DTYPE_CODES.items()}
_HEADER = struct.Struct("<4sHBB")


@dataclass(frozen=True, eq=False)
class DenseTensor:
    """Row-major real tensor with between 1 and 6 modes."""

    array: np.ndarray

    def __post_init__(self):
        array = np.asarray(self.array)
        dtype = array.dtype if array.dtype in (np.float32, np.float64) else np.float64
        array = np.array(array, dtype=dtype, order="C", copy=True)
        if not 1 <= array.ndim <= MAX_MODES:
            raise ShapeError(
                f"DenseTensor needs 1 to {MAX_MODES} modes, got shape {array.shape}"
            )
        if any(extent < 1 for extent in array.shape):
            raise ShapeError(f"DenseTensor extents must be positive, got {array.shape}")
        array.setflags(write=False)
        object.__setattr__(self, "array", array)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.array.shape

    @property
    def data(self) -> np.ndarray:
        """Flat row-major view of the values."""
        return self.array.reshape(-1)

    @classmethod
    def from_flat(cls, shape, data) -> "DenseTensor":
        data = np.asarray(data)
        expected = int(np.prod(shape))
        if data.size != expected:
            raise ShapeError(
                f"data length {data.size} does not match shape {tuple(shape)} ({expected})"
            )
        return cls(data.reshape(tuple(shape)))

    def to_bytes(self) -> bytes:
        dtype = self.array.dtype.newbyteorder("<")
        header = _HEADER.pack(FTNR_MAGIC, FTNR_VERSION, _DTYPE_CODES[dtype], self.array.ndim)
        extents = struct.pack(f"<{self.array.ndim}Q", *self.array.shape)
        return header + extents + self.array.astype(dtype, copy=False).tobytes(order="C")

    @classmethod
    def from_bytes(cls, payload: bytes) -> "DenseTensor":
        tensor, consumed = read_ftnr(payload)
        if consumed != len(payload):
            raise CheckpointError(f"{len(payload) - consumed} trailing bytes after FTNR tensor")
        return tensor

    def save(self, path: Path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path: Path) -> "DenseTensor":
        return cls.from_bytes(Path(path).read_bytes())


def read_ftnr(payload: bytes, offset: int = 0) -> tuple[DenseTensor, int]:
    """Decode one FTNR tensor at ``offset``; returns the tensor and the end offset."""
    if len(payload) - offset < _HEADER.size:
        raise CheckpointError("truncated FTNR header")
    magic, version, dtype_code, modes = _HEADER.unpack_from(payload, offset)
    if magic != FTNR_MAGIC:
        raise CheckpointError(f"bad FTNR magic {magic!r}")
    if version != FTNR_VERSION:
        raise CheckpointError(f"unsupported FTNR version {version}")
    if dtype_code not in _CODE_DTYPES:
        raise CheckpointError(f"unknown FTNR dtype code {dtype_code}")
    if not 1 <= modes <= MAX_MODES:
        raise CheckpointError(f"invalid FTNR mode count {modes}")
    offset += _HEADER.size
    if len(payload) - offset < 8 * modes:
        raise CheckpointError("truncated FTNR extents")
    shape = struct.unpack_from(f"<{modes}Q", payload, offset)
    offset += 8 * modes
    dtype = _CODE_DTYPES[dtype_code]
    nbytes = int(np.prod(shape)) * dtype.itemsize
    if len(payload) - offset < nbytes:
        raise CheckpointError("truncated FTNR data")
    data = np.frombuffer(payload, dtype=dtype, count=int(np.prod(shape)), offset=offset)
    return DenseTensor(data.reshape(shape).astype(dtype.newbyteorder("="))), offset + nbytes
