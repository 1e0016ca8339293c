"""persfit Utilities Package."""

from .helpers import (
    ensure_directory,
    format_float,
    format_record,
    format_vector,
    parallel_map,
    write_file,
)

__all__ = [
    "ensure_directory",
    "format_float",
    "format_record",
    "format_vector",
    "parallel_map",
    "write_file",
]
