"""
Bench Command - Calibrate every scenario of a synth directory and report errors.

Scenarios are processed in filename order; a failed calibration counts as
an infinite error so it is never recalled.
"""

import dataclasses
import math
from pathlib import Path
from typing import List, Optional

import typer
from rich import box
from rich.console import Console
from rich.table import Table

from ..core.exceptions import EmptyInputError, PersfitError
from ..core.logging import get_logger
from ..core.settings import get_settings
from ..evaluation.metrics import (
    BenchmarkRow,
    ErrorSample,
    PIXEL_RECALL_THRESHOLDS,
    angular_errors,
    format_report,
    median,
    pixel_distortion_error,
    recall,
)
from ..evaluation.synth import load_scenario
from ..geometry.camera_model import CameraModel
from ..optim.calibrator import calibrate
from ..optim.lm_optimizer import LMStatus
from ..utils.helpers import parallel_map
from .calibrate import build_problem

console = Console(stderr=True)
logger = get_logger(__name__)


def scenario_stems(directory: Path) -> List[str]:
    """Stems of every ``.pfld`` in the directory, sorted."""
    return sorted(p.stem for p in Path(directory).glob("*.pfld"))


def bench_command(
    directory: Path,
    model: CameraModel = CameraModel.PINHOLE,
    init: str = "trivial",
    stride: Optional[int] = None,
    max_iters: Optional[int] = None,
    lambda0: Optional[float] = None,
    fix_true_gravity: bool = False,
    fix_true_focal: bool = False,
    threads: Optional[int] = None,
) -> int:
    """
    Run the calibrator over a scenario directory and print the report table.

    ``--fix-true-gravity`` / ``--fix-true-focal`` hold the ground truth fixed
    for partial calibration.
    """
    if fix_true_gravity and fix_true_focal:
        raise typer.BadParameter(
            "--fix-true-gravity and --fix-true-focal are mutually exclusive",
            param_hint="--fix-true-focal",
        )
    if not Path(directory).is_dir():
        raise FileNotFoundError(2, "No such directory", str(directory))
    stems = scenario_stems(directory)
    if not stems:
        raise EmptyInputError(f"No .pfld scenarios in {directory}")

    # Flag validation happens once, before any work is scheduled.
    build_problem([], model=model, init=init, stride=stride, max_iters=max_iters, lambda0=lambda0)

    def evaluate(stem: str) -> ErrorSample:
        field, gt_camera, gt_gravity = load_scenario(directory, stem)
        problem = build_problem(
            [field], model=model, init=init, stride=stride,
            max_iters=max_iters, lambda0=lambda0,
        )
        if fix_true_gravity:
            problem = dataclasses.replace(problem, fix_gravity=gt_gravity)
        if fix_true_focal:
            problem = dataclasses.replace(problem, fix_focal=gt_camera.f)
        try:
            result = calibrate(problem)
        except PersfitError as exc:
            logger.warning("Scenario %s failed: %s", stem, exc)
            return ErrorSample.failure()
        if result.status is LMStatus.STALLED:
            logger.warning("Scenario %s stalled after %d iterations", stem, result.n_iters)
            return ErrorSample.failure()
        sample = angular_errors(gt_camera, gt_gravity, result.camera, result.gravity)
        sample.pixel_dist_err = pixel_distortion_error(gt_camera, result.camera.k)
        return sample

    samples = parallel_map(evaluate, stems, threads or get_settings().THREADS)

    name = f"{CameraModel(model).value}/{init}"
    if fix_true_gravity:
        name += "+gravity"
    if fix_true_focal:
        name += "+focal"
    typer.echo(format_report([BenchmarkRow.from_samples(name, samples)]), nl=False)

    failures = sum(1 for s in samples if math.isinf(s.gravity_err))
    table = Table(title=f"📊 {len(samples)} scenarios", show_header=False, box=box.SIMPLE)
    table.add_column("Key", style="cyan")
    table.add_column("Value", style="green")
    table.add_row("Failures", str(failures))
    table.add_row("Median gravity error", f"{median([s.gravity_err for s in samples]):.3f}°")
    pixel = [s.pixel_dist_err for s in samples]
    table.add_row("Median pixel distortion error", f"{median(pixel):.3f} px")
    for t, r in zip(PIXEL_RECALL_THRESHOLDS, recall(pixel)):
        table.add_row(f"Pixel recall @{t:g}px", f"{r:.1f}%")
    console.print(table)
    return 0
