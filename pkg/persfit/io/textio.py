"""
Text formats for cameras (``.cam``) and gravity directions (``.grav``).

A camera file holds one ``key=value`` per line with the keys model, width,
height, f, cx, cy, k1 and k2. A gravity file holds ``gx gy gz`` on one line.
Floats are written with 17 significant digits so they round-trip exactly.
"""

from pathlib import Path
from typing import Dict, Union

import numpy as np

from ..core.exceptions import CameraFormatError, PersfitError
from ..core.logging import get_logger
from ..geometry.camera_model import CameraModel, CameraParams
from ..geometry.gravity_manifold import GravityDir
from ..utils.helpers import write_file

logger = get_logger(__name__)

CAMERA_KEYS = ("model", "width", "height", "f", "cx", "cy", "k1", "k2")
REQUIRED_KEYS = ("model", "width", "height", "f", "cx", "cy")
K1_WARN = 0.5


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def format_camera(params: CameraParams) -> str:
    values = {
        "model": params.model.value,
        "width": str(params.width),
        "height": str(params.height),
        "f": _fmt(params.f),
        "cx": _fmt(params.cx),
        "cy": _fmt(params.cy),
        "k1": _fmt(params.k1),
        "k2": _fmt(params.k2),
    }
    return "".join(f"{key}={values[key]}\n" for key in CAMERA_KEYS)


def parse_camera(text: str, source: str = "<string>") -> CameraParams:
    """
    Parse a camera file.

    Raises:
        CameraFormatError: Malformed line, unknown or duplicate key, missing
            key, bad value, or intrinsics violating their invariants
    """
    entries: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep:
            raise CameraFormatError(f"{source}:{lineno}: expected key=value, got '{line}'")
        if key not in CAMERA_KEYS:
            raise CameraFormatError(f"{source}:{lineno}: unknown key '{key}'")
        if key in entries:
            raise CameraFormatError(f"{source}:{lineno}: duplicate key '{key}'")
        entries[key] = value

    missing = [k for k in REQUIRED_KEYS if k not in entries]
    if missing:
        raise CameraFormatError(f"{source}: missing keys {', '.join(missing)}")

    try:
        model = CameraModel(entries["model"])
        params = CameraParams(
            model=model,
            width=int(entries["width"]),
            height=int(entries["height"]),
            f=float(entries["f"]),
            cx=float(entries["cx"]),
            cy=float(entries["cy"]),
            k1=float(entries.get("k1", 0.0)),
            k2=float(entries.get("k2", 0.0)),
        )
    except (ValueError, PersfitError) as exc:
        raise CameraFormatError(f"{source}: {exc}") from exc

    if abs(params.k1) > K1_WARN:
        logger.warning("%s: |k1| = %.3g is outside the usual range", source, abs(params.k1))
    return params


def save_camera(params: CameraParams, path: Union[str, Path]) -> None:
    write_file(Path(path), format_camera(params), overwrite=True)


def load_camera(path: Union[str, Path]) -> CameraParams:
    return parse_camera(Path(path).read_text(encoding="utf-8"), source=str(path))


def format_gravity(g: GravityDir) -> str:
    return " ".join(_fmt(x) for x in g.vec) + "\n"


def parse_gravity(text: str, source: str = "<string>") -> GravityDir:
    """
    Parse ``gx gy gz`` (whitespace or comma separated).

    Raises:
        CameraFormatError: Not three finite numbers, or the zero vector
    """
    parts = text.replace(",", " ").split()
    try:
        values = np.array([float(p) for p in parts])
    except ValueError as exc:
        raise CameraFormatError(f"{source}: {exc}") from exc
    if values.shape != (3,) or not np.all(np.isfinite(values)):
        raise CameraFormatError(f"{source}: expected three finite numbers, got '{text.strip()}'")
    try:
        return GravityDir(values)
    except PersfitError as exc:
        raise CameraFormatError(f"{source}: {exc}") from exc


def save_gravity(g: GravityDir, path: Union[str, Path]) -> None:
    write_file(Path(path), format_gravity(g), overwrite=True)


def load_gravity(path: Union[str, Path]) -> GravityDir:
    return parse_gravity(Path(path).read_text(encoding="utf-8"), source=str(path))
