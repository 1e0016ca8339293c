"""
Helper functions for file operations, number formatting and parallel maps.

Provides utilities for:
- Directory and file operations
- Stable float formatting for result blocks
- Order-preserving thread-pool maps
"""

from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Iterable, List, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")

RESULT_DIGITS = 10


def ensure_directory(path: Path) -> None:
    """Create directory if it doesn't exist."""
    Path(path).mkdir(parents=True, exist_ok=True)


def write_file(path: Path, content: str, overwrite: bool = False) -> bool:
    """
    Write content to file.

    Args:
        path: File path to write to
        content: Content to write
        overwrite: If True, overwrite existing file

    Returns:
        True if file was written, False if it exists and overwrite is False
    """
    path = Path(path)
    if path.exists() and not overwrite:
        return False

    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(content, encoding="utf-8")
    return True


def format_float(x: float) -> str:
    """Result-block float: 10 significant digits."""
    return format(float(x), f".{RESULT_DIGITS}g")


def format_vector(values: Sequence[float]) -> str:
    """(a,b,c) with result-block floats."""
    return "(" + ",".join(format_float(v) for v in values) + ")"


def format_record(pairs: Iterable) -> str:
    """Space-separated key=value record."""
    return " ".join(f"{key}={value}" for key, value in pairs)


def parallel_map(fn: Callable[[T], R], items: Sequence[T], threads: int) -> List[R]:
    """Map over items with a thread pool; results keep the input order."""
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
