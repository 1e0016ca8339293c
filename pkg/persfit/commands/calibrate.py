"""
Calibrate Command - Fit gravity, focal length and distortion to one field.

Reads a ``.pfld`` perspective field, runs the chosen initialization and the
Levenberg-Marquardt refinement, and prints one key=value result line.
"""

import math
from pathlib import Path
from typing import List, Optional

import typer
from rich import box
from rich.console import Console
from rich.table import Table

from ..core.exceptions import CameraFormatError
from ..core.logging import get_logger
from ..core.settings import get_settings
from ..geometry.camera_model import CameraModel
from ..geometry.perspective_field import PerspectiveField
from ..io.fieldio import load_field
from ..io.textio import parse_gravity, save_camera
from ..optim.calibrator import CalibrationProblem, CalibrationResult, Prior, Sharing, calibrate
from ..optim.lm_optimizer import LMConfig, LMStatus
from ..utils.helpers import format_float, format_record, format_vector

console = Console(stderr=True)
logger = get_logger(__name__)

EXIT_OPTIMIZATION_FAILED = 3


def build_problem(
    fields: List[PerspectiveField],
    model: CameraModel = CameraModel.PINHOLE,
    init: str = "trivial",
    sharing: Sharing = Sharing.INDEPENDENT,
    fix_gravity: Optional[str] = None,
    fix_focal: Optional[float] = None,
    prior_focal: Optional[float] = None,
    prior_focal_std: Optional[float] = None,
    stride: Optional[int] = None,
    max_iters: Optional[int] = None,
    lambda0: Optional[float] = None,
) -> CalibrationProblem:
    """
    Turn command-line flags into a calibration problem.

    Raises:
        typer.BadParameter: Conflicting or malformed flags
    """
    if fix_gravity is not None and fix_focal is not None:
        raise typer.BadParameter(
            "--fix-gravity and --fix-focal are mutually exclusive", param_hint="--fix-focal"
        )
    if fix_focal is not None and prior_focal is not None:
        raise typer.BadParameter(
            "--fix-focal and --prior-focal are mutually exclusive", param_hint="--prior-focal"
        )
    if (prior_focal is None) != (prior_focal_std is None):
        raise typer.BadParameter(
            "--prior-focal and --prior-focal-std must be given together",
            param_hint="--prior-focal-std",
        )
    if fix_focal is not None and fix_focal <= 0:
        raise typer.BadParameter("focal length must be positive", param_hint="--fix-focal")

    gravity = None
    if fix_gravity is not None:
        try:
            gravity = parse_gravity(fix_gravity, source="--fix-gravity")
        except CameraFormatError as exc:
            raise typer.BadParameter(exc.detail, param_hint="--fix-gravity") from exc

    prior = None
    if prior_focal is not None:
        if prior_focal_std <= 0 or prior_focal <= 0:
            raise typer.BadParameter(
                "focal prior and its std must be positive", param_hint="--prior-focal-std"
            )
        prior = Prior(value=prior_focal, std=prior_focal_std)

    return CalibrationProblem(
        fields=fields,
        model=model,
        sharing=sharing,
        init=init,
        stride=stride or get_settings().DEFAULT_STRIDE,
        fix_gravity=gravity,
        fix_focal=fix_focal,
        prior_focal=prior,
        lm=LMConfig.build(max_iters=max_iters, lambda0=lambda0),
    )


def intrinsics_pairs(result: CalibrationResult) -> list:
    cam = result.camera
    return [
        ("f", format_float(cam.f)),
        ("vfov_deg", format_float(math.degrees(cam.vfov))),
        ("k1", format_float(cam.k1)),
        ("k2", format_float(cam.k2)),
    ]


def gravity_pairs(result: CalibrationResult, image: int = 0) -> list:
    est = result.gravities[image]
    return [
        ("roll", format_float(math.degrees(est.roll))),
        ("pitch", format_float(math.degrees(est.pitch))),
        ("gravity", format_vector(est.gravity.vec)),
    ]


def sigma_k1(result: CalibrationResult) -> float:
    return float(result.sigma_k[0]) if result.sigma_k.size else 0.0


def result_record(result: CalibrationResult) -> str:
    """The single-image result line."""
    pairs = gravity_pairs(result) + intrinsics_pairs(result) + [
        ("sigma_gravity_deg", format_float(math.degrees(result.gravities[0].sigma_gravity))),
        ("sigma_vfov_deg", format_float(math.degrees(result.sigma_vfov))),
        ("sigma_k1", format_float(sigma_k1(result))),
        ("iters", result.n_iters),
        ("status", result.status.value),
    ]
    return format_record(pairs)


def print_summary(title: str, result: CalibrationResult) -> None:
    table = Table(title=title, show_header=False, box=box.SIMPLE)
    table.add_column("Key", style="cyan")
    table.add_column("Value", style="green")
    table.add_row("Model", result.camera.model.value)
    table.add_row("Status", result.status.value)
    table.add_row("Iterations", str(result.n_iters))
    table.add_row("Final cost", f"{result.trace.final_cost:.6g}")
    table.add_row("vFoV", f"{math.degrees(result.vfov):.3f}° ± {math.degrees(result.sigma_vfov):.3f}°")
    console.print(table)


def calibrate_command(
    field_path: Path,
    model: CameraModel = CameraModel.PINHOLE,
    init: str = "trivial",
    fix_gravity: Optional[str] = None,
    fix_focal: Optional[float] = None,
    prior_focal: Optional[float] = None,
    prior_focal_std: Optional[float] = None,
    stride: Optional[int] = None,
    max_iters: Optional[int] = None,
    lambda0: Optional[float] = None,
    out: Optional[Path] = None,
    numeric_jacobian: bool = False,
) -> int:
    """
    Calibrate a single perspective field and print its result line.

    Returns:
        0 on convergence, 3 when the damping stalled
    """
    problem = build_problem(
        [], model=model, init=init,
        fix_gravity=fix_gravity, fix_focal=fix_focal,
        prior_focal=prior_focal, prior_focal_std=prior_focal_std,
        stride=stride, max_iters=max_iters, lambda0=lambda0,
    )
    problem.fields = [load_field(field_path)]
    result = calibrate(problem, method="numeric" if numeric_jacobian else "analytic")
    typer.echo(result_record(result))
    print_summary(f"📷 {field_path.name}", result)

    if out is not None:
        save_camera(result.camera, out)
        console.print(f"[dim]Wrote camera to {out}[/dim]")

    if result.status is LMStatus.STALLED:
        console.print(
            "[bold red]❌ Error:[/bold red] optimization stalled (damping exceeded its ceiling)"
        )
        console.print("[yellow]💡 Tip:[/yellow] try another --init strategy or a larger --stride")
        return EXIT_OPTIMIZATION_FAILED
    return 0
