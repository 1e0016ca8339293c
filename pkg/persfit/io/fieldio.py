"""
Binary perspective-field files (``.pfld``).

Layout, little-endian throughout:

    magic    8 bytes  b"PFLD0001"
    width    uint32
    height   uint32
    flags    uint32   bit 0: confidence grids present
    payload  float32 row-major grids: up_x, up_y, latitude[, conf_up, conf_lat]

The file length must match the header exactly.
"""

import struct
from pathlib import Path
from typing import BinaryIO, Union

import numpy as np

from ..core.exceptions import (
    BadMagicError,
    FieldFormatError,
    TrailingDataError,
    TruncatedFileError,
)
from ..geometry.perspective_field import PerspectiveField

MAGIC = b"PFLD0001"
HEADER = struct.Struct("<8sIII")
FLAG_CONFIDENCE = 0x1
GRID_DTYPE = np.dtype("<f4")

NORM_TOL = 1e-3
LAT_TOL = 1e-6


def _validate(field: PerspectiveField) -> None:
    field.check_invariants(norm_tol=NORM_TOL, lat_tol=LAT_TOL)


def encode_field(field: PerspectiveField, with_confidence: bool = True) -> bytes:
    """
    Serialize a field.

    Raises:
        InvariantViolationError: The field breaks a per-pixel invariant
    """
    _validate(field)
    flags = FLAG_CONFIDENCE if with_confidence else 0
    grids = [field.up[..., 0], field.up[..., 1], field.latitude]
    if with_confidence:
        grids += [field.conf_up, field.conf_lat]
    payload = b"".join(np.ascontiguousarray(g, dtype=GRID_DTYPE).tobytes() for g in grids)
    return HEADER.pack(MAGIC, field.width, field.height, flags) + payload


def decode_field(data: bytes) -> PerspectiveField:
    """
    Parse and validate a serialized field.

    Raises:
        BadMagicError, TruncatedFileError, TrailingDataError, FieldFormatError,
        InvariantViolationError
    """
    if len(data) < HEADER.size:
        if len(data) >= len(MAGIC) and data[: len(MAGIC)] != MAGIC:
            raise BadMagicError(bytes(data[: len(MAGIC)]))
        raise TruncatedFileError(HEADER.size, len(data))

    magic, width, height, flags = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise BadMagicError(magic)
    if width == 0 or height == 0:
        raise FieldFormatError(f"Empty field grid {width}x{height}")
    if flags & ~FLAG_CONFIDENCE:
        raise FieldFormatError(f"Unknown header flags 0x{flags:08x}")

    n_grids = 5 if flags & FLAG_CONFIDENCE else 3
    grid_bytes = width * height * GRID_DTYPE.itemsize
    expected = HEADER.size + n_grids * grid_bytes
    if len(data) < expected:
        raise TruncatedFileError(expected, len(data))
    if len(data) > expected:
        raise TrailingDataError(expected, len(data))

    grids = np.frombuffer(data, dtype=GRID_DTYPE, offset=HEADER.size)
    grids = grids.reshape(n_grids, height, width).astype(np.float64)
    up = np.stack([grids[0], grids[1]], axis=-1)
    conf_up = grids[3] if n_grids == 5 else None
    conf_lat = grids[4] if n_grids == 5 else None
    field = PerspectiveField(up, grids[2], conf_up, conf_lat)
    _validate(field)
    return field


def write_field(field: PerspectiveField, sink: BinaryIO, with_confidence: bool = True) -> int:
    """Write a field to a binary stream; returns the byte count."""
    data = encode_field(field, with_confidence=with_confidence)
    sink.write(data)
    return len(data)


def read_field(source: BinaryIO) -> PerspectiveField:
    """Read a whole field from a binary stream."""
    return decode_field(source.read())


def save_field(field: PerspectiveField, path: Union[str, Path]) -> int:
    with open(path, "wb") as sink:
        return write_field(field, sink)


def load_field(path: Union[str, Path]) -> PerspectiveField:
    with open(path, "rb") as source:
        return read_field(source)
