"""
Multi-Calibrate Command - Calibrate several fields of one camera.

With ``--share intrinsics`` a single focal length and distortion is fitted
jointly with one gravity per image. ``--share none`` calibrates every image
on its own.
"""

import math
from pathlib import Path
from typing import List, Optional

import typer
from rich.console import Console

from ..core.logging import get_logger
from ..geometry.camera_model import CameraModel
from ..io.fieldio import load_field
from ..optim.calibrator import Sharing, calibrate
from ..optim.lm_optimizer import LMStatus
from ..utils.helpers import format_float, format_record
from .calibrate import (
    EXIT_OPTIMIZATION_FAILED,
    build_problem,
    gravity_pairs,
    intrinsics_pairs,
    print_summary,
    result_record,
    sigma_k1,
)

console = Console(stderr=True)
logger = get_logger(__name__)


def multicalibrate_command(
    field_paths: List[Path],
    share: Sharing = Sharing.SHARED_INTRINSICS,
    model: CameraModel = CameraModel.PINHOLE,
    init: str = "trivial",
    stride: Optional[int] = None,
    max_iters: Optional[int] = None,
    lambda0: Optional[float] = None,
) -> int:
    """
    Calibrate a set of fields and print one shared line plus one line per image.

    Returns:
        0 on convergence, 3 if any optimization stalled
    """
    fields = [load_field(p) for p in field_paths]
    stalled = False

    if share is Sharing.INDEPENDENT:
        for path, fld in zip(field_paths, fields):
            problem = build_problem(
                [fld], model=model, init=init, stride=stride,
                max_iters=max_iters, lambda0=lambda0,
            )
            result = calibrate(problem)
            typer.echo(f"image={path.name} {result_record(result)}")
            stalled |= result.status is LMStatus.STALLED
    else:
        problem = build_problem(
            fields, model=model, init=init, sharing=share, stride=stride,
            max_iters=max_iters, lambda0=lambda0,
        )
        result = calibrate(problem)
        shared = intrinsics_pairs(result) + [
            ("sigma_vfov_deg", format_float(math.degrees(result.sigma_vfov))),
            ("sigma_k1", format_float(sigma_k1(result))),
            ("images", len(fields)),
            ("iters", result.n_iters),
            ("status", result.status.value),
        ]
        typer.echo(format_record(shared))
        for i, path in enumerate(field_paths):
            pairs = [("image", path.name)] + gravity_pairs(result, i) + [
                ("sigma_gravity_deg", format_float(math.degrees(result.gravities[i].sigma_gravity))),
            ]
            typer.echo(format_record(pairs))
        print_summary(f"📷 {len(fields)} images, shared intrinsics", result)
        stalled = result.status is LMStatus.STALLED

    if stalled:
        console.print("[bold red]❌ Error:[/bold red] optimization stalled")
        return EXIT_OPTIMIZATION_FAILED
    return 0
