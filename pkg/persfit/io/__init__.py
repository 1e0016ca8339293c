"""Field, camera and gravity file formats."""

from .fieldio import decode_field, encode_field, load_field, read_field, save_field, write_field
from .textio import load_camera, load_gravity, save_camera, save_gravity

__all__ = [
    "decode_field",
    "encode_field",
    "load_camera",
    "load_field",
    "load_gravity",
    "read_field",
    "save_camera",
    "save_field",
    "save_gravity",
    "write_field",
]
