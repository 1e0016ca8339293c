"""
Undistort-Grid Command - Emit the undistortion displacement field as plot data.

One row per pixel center of the stride grid: the distorted pixel (px, py)
and the displacement (dx, dy) to its undistorted position, in pixels.
Pixels outside the invertible radius print ``nan``.
"""

from pathlib import Path

import numpy as np
import typer

from ..geometry.camera_model import denormalize, normalize, undistort
from ..geometry.perspective_field import pixel_centers
from ..io.textio import load_camera
from ..utils.helpers import format_float


def undistortgrid_command(camera_path: Path, stride: int = 16) -> int:
    """Print a tab-separated ``px py dx dy`` table for a ``.cam`` file."""
    if stride < 1:
        raise typer.BadParameter("stride must be at least 1", param_hint="--stride")

    params = load_camera(camera_path)
    points, _ = pixel_centers(params.width, params.height, stride)
    q, valid = undistort(params, normalize(params, points), strict=False)
    delta = denormalize(params, q) - points
    delta[~valid] = np.nan

    lines = ["px\tpy\tdx\tdy"]
    for (px, py), (dx, dy) in zip(points, delta):
        lines.append("\t".join(format_float(v) for v in (px, py, dx, dy)))
    typer.echo("\n".join(lines))
    return 0
