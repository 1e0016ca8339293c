"""
Persfit CLI - Main CLI Application

The main Typer application for persfit - camera calibration from perspective
fields by Levenberg-Marquardt refinement.

Commands:
- calibrate: Fit gravity, focal length and distortion to one field
- multi-calibrate: Fit several fields of one camera
- synth: Write synthetic scenarios (field, camera, gravity)
- bench: Calibrate a synth directory and print the error report
- check-jacobians: Compare analytic Jacobians with finite differences
- undistort-grid: Emit the undistortion displacement field for plotting
- version: Show CLI version

Results go to standard output as key=value records; everything else goes to
standard error.
"""

import sys
from pathlib import Path
from typing import List, Optional

import typer
from rich.console import Console

from . import __version__
from .commands.bench import bench_command
from .commands.calibrate import calibrate_command
from .commands.checkjacobians import checkjacobians_command
from .commands.multicalibrate import multicalibrate_command
from .commands.synth import synth_command
from .commands.undistortgrid import undistortgrid_command
from .core.exceptions import PersfitError
from .core.logging import setup_logging
from .core.settings import get_settings
from .evaluation.synth import ConfMode
from .geometry.camera_model import CameraModel
from .optim.calibrator import Sharing
from .optim.initialization import available_init_strategies

EXIT_USAGE = 1
EXIT_IO = 2

# typer may ship its own copy of click; take the class from the one in use
UsageError = next(c for c in typer.BadParameter.__mro__ if c.__name__ == "UsageError")

# Initialize Typer app
app = typer.Typer(
    name="persfit",
    help="📐 persfit - Camera calibration from perspective fields",
    add_completion=False,
    rich_markup_mode="rich",
)

console = Console(stderr=True)


def _check_init(value: str) -> str:
    strategies = available_init_strategies()
    if value not in strategies:
        raise typer.BadParameter(f"choose from {', '.join(sorted(strategies))}")
    return value


# Shared calibrate flags
MODEL_OPTION = typer.Option(CameraModel.PINHOLE, "--model", "-m", help="Camera model to fit")
INIT_OPTION = typer.Option(
    "trivial", "--init", callback=_check_init, help="Initialization: trivial, heuristic or solver"
)
STRIDE_OPTION = typer.Option(
    None, "--stride", min=1, help="Pixel subsampling stride (default: PERSFIT_DEFAULT_STRIDE)"
)
MAX_ITERS_OPTION = typer.Option(None, "--max-iters", min=1, help="Iteration cap (default 30)")
LAMBDA0_OPTION = typer.Option(None, "--lambda0", help="Initial damping (default 0.1)")
THREADS_OPTION = typer.Option(None, "--threads", min=1, help="Worker cap (default: PERSFIT_THREADS)")


@app.command("calibrate")
def calibrate(
    field: Path = typer.Argument(..., help="Perspective field (.pfld)"),
    model: CameraModel = MODEL_OPTION,
    init: str = INIT_OPTION,
    fix_gravity: Optional[str] = typer.Option(
        None, "--fix-gravity", help="Known gravity gx,gy,gz in camera coordinates"
    ),
    fix_focal: Optional[float] = typer.Option(None, "--fix-focal", help="Known focal length (px)"),
    prior_focal: Optional[float] = typer.Option(None, "--prior-focal", help="Focal prior mean (px)"),
    prior_focal_std: Optional[float] = typer.Option(
        None, "--prior-focal-std", help="Focal prior standard deviation (px)"
    ),
    stride: Optional[int] = STRIDE_OPTION,
    max_iters: Optional[int] = MAX_ITERS_OPTION,
    lambda0: Optional[float] = LAMBDA0_OPTION,
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Write the fitted camera (.cam)"),
    numeric_jacobian: bool = typer.Option(
        False, "--numeric-jacobian", help="Use central differences instead of the analytic Jacobian"
    ),
) -> int:
    """
    📷 Calibrate one camera from a perspective field.

    Prints roll, pitch, gravity, focal length, vertical field of view and
    distortion with their standard deviations.

    [bold cyan]Examples:[/bold cyan]

      $ persfit calibrate scene.pfld

      $ persfit calibrate scene.pfld --model radial1 --init heuristic

      $ persfit calibrate scene.pfld --fix-gravity 0,1,0 --out scene.cam

      $ persfit calibrate scene.pfld --prior-focal 800 --prior-focal-std 50
    """
    return calibrate_command(
        field_path=field,
        model=model,
        init=init,
        fix_gravity=fix_gravity,
        fix_focal=fix_focal,
        prior_focal=prior_focal,
        prior_focal_std=prior_focal_std,
        stride=stride,
        max_iters=max_iters,
        lambda0=lambda0,
        out=out,
        numeric_jacobian=numeric_jacobian,
    )


@app.command("multi-calibrate")
def multi_calibrate(
    fields: List[Path] = typer.Argument(..., help="Perspective fields of one camera"),
    share: Sharing = typer.Option(
        Sharing.SHARED_INTRINSICS, "--share", help="What the images have in common"
    ),
    model: CameraModel = MODEL_OPTION,
    init: str = INIT_OPTION,
    stride: Optional[int] = STRIDE_OPTION,
    max_iters: Optional[int] = MAX_ITERS_OPTION,
    lambda0: Optional[float] = LAMBDA0_OPTION,
) -> int:
    """
    🎞️ Calibrate several images taken with the same camera.

    With --share intrinsics one focal length and distortion is fitted with
    a gravity per image; --share none calibrates each image alone.

    [bold cyan]Examples:[/bold cyan]

      $ persfit multi-calibrate a.pfld b.pfld c.pfld --share intrinsics

      $ persfit multi-calibrate a.pfld b.pfld --share none --model radial1
    """
    return multicalibrate_command(
        field_paths=fields,
        share=share,
        model=model,
        init=init,
        stride=stride,
        max_iters=max_iters,
        lambda0=lambda0,
    )


@app.command("synth")
def synth(
    out: Path = typer.Option(..., "--out", "-o", help="Output directory"),
    seed: int = typer.Option(0, "--seed", help="Base seed of the batch"),
    count: int = typer.Option(1, "--count", "-n", help="Number of scenarios"),
    width: int = typer.Option(320, "--width", help="Image width (px)"),
    height: int = typer.Option(320, "--height", help="Image height (px)"),
    model: CameraModel = MODEL_OPTION,
    noise_up: float = typer.Option(0.0, "--noise-up", help="Up-vector noise std (deg)"),
    noise_lat: float = typer.Option(0.0, "--noise-lat", help="Latitude noise std (deg)"),
    noise_lat_bias: float = typer.Option(
        0.0, "--noise-lat-bias", help="Std of one latitude offset per field (deg)"
    ),
    outliers: float = typer.Option(0.0, "--outliers", help="Outlier pixel fraction"),
    conf: ConfMode = typer.Option(ConfMode.UNIT, "--conf", help="Confidence map mode"),
    threads: Optional[int] = THREADS_OPTION,
) -> int:
    """
    🎲 Generate synthetic scenarios with ground truth.

    Writes NNNN.pfld, NNNN.cam and NNNN.grav per scenario.

    [bold cyan]Examples:[/bold cyan]

      $ persfit synth --seed 1 --count 100 --out data/clean

      $ persfit synth --count 50 --model radial1 --noise-up 2 --noise-lat 2 --out data/noisy

      $ persfit synth --count 50 --outliers 0.2 --conf oracle-inlier --out data/outliers
    """
    return synth_command(
        out=out,
        seed=seed,
        count=count,
        width=width,
        height=height,
        model=model,
        noise_up=noise_up,
        noise_lat=noise_lat,
        noise_lat_bias=noise_lat_bias,
        outliers=outliers,
        conf=conf,
        threads=threads,
    )


@app.command("bench")
def bench(
    directory: Path = typer.Option(..., "--dir", "-d", help="Scenario directory written by synth"),
    model: CameraModel = MODEL_OPTION,
    init: str = INIT_OPTION,
    stride: Optional[int] = STRIDE_OPTION,
    max_iters: Optional[int] = MAX_ITERS_OPTION,
    lambda0: Optional[float] = LAMBDA0_OPTION,
    fix_true_gravity: bool = typer.Option(
        False, "--fix-true-gravity", help="Hold the ground-truth gravity fixed"
    ),
    fix_true_focal: bool = typer.Option(
        False, "--fix-true-focal", help="Hold the ground-truth focal length fixed"
    ),
    threads: Optional[int] = THREADS_OPTION,
) -> int:
    """
    📊 Calibrate every scenario in a directory and print the error report.

    [bold cyan]Examples:[/bold cyan]

      $ persfit bench --dir data/clean

      $ persfit bench --dir data/noisy --model radial1 --init solver

      $ persfit bench --dir data/noisy --fix-true-focal
    """
    return bench_command(
        directory=directory,
        model=model,
        init=init,
        stride=stride,
        max_iters=max_iters,
        lambda0=lambda0,
        fix_true_gravity=fix_true_gravity,
        fix_true_focal=fix_true_focal,
        threads=threads,
    )


@app.command("check-jacobians")
def check_jacobians(
    seed: int = typer.Option(0, "--seed", help="Seed of the random configurations"),
    trials: int = typer.Option(100, "--trials", help="Number of random configurations"),
) -> int:
    """
    🧮 Verify the analytic Jacobians against central differences.

    Exits 1 if any block has a relative error of 1e-5 or more.

    [bold cyan]Examples:[/bold cyan]

      $ persfit check-jacobians --seed 7 --trials 100
    """
    return checkjacobians_command(seed=seed, trials=trials)


@app.command("undistort-grid")
def undistort_grid(
    camera: Path = typer.Option(..., "--camera", "-c", help="Camera file (.cam)"),
    stride: int = typer.Option(16, "--stride", help="Grid spacing (px)"),
) -> int:
    """
    🗺️ Print the undistortion displacement of a pixel grid.

    [bold cyan]Examples:[/bold cyan]

      $ persfit undistort-grid --camera scene.cam --stride 32 > grid.tsv
    """
    return undistortgrid_command(camera_path=camera, stride=stride)


@app.command("version")
def version() -> int:
    """Show persfit version."""
    typer.echo(f"persfit {__version__}")
    return 0


@app.callback(invoke_without_command=True)
def callback(
    ctx: typer.Context,
    version: Optional[bool] = typer.Option(
        None,
        "--version",
        "-V",
        help="Show version and exit",
        is_flag=True,
    ),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Log every iteration to stderr"),
):
    """
    persfit - Camera calibration from perspective fields

    Recovers roll, pitch, focal length and radial distortion from per-pixel
    up-vectors and latitudes.

    [bold]Features:[/bold]
    • Pinhole and one- or two-coefficient radial cameras
    • Fixed parameters and Gaussian priors for partial calibration
    • First-order uncertainties from the Gauss-Newton Hessian
    • Synthetic scenarios and an error benchmark
    """
    setup_logging("DEBUG" if verbose else get_settings().LOG_LEVEL)

    if version:
        typer.echo(f"persfit {__version__}")
        raise typer.Exit()

    if ctx.invoked_subcommand is None:
        console.print(ctx.get_help())


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run the CLI and return its exit code.

    0 success, 1 usage error, 2 I/O or format error, 3 optimization failure.
    """
    args = sys.argv[1:] if argv is None else list(argv)
    command = typer.main.get_command(app)
    try:
        rv = command.main(args=args, prog_name="persfit", standalone_mode=False)
    except UsageError as exc:
        exc.show(file=sys.stderr)
        return EXIT_USAGE
    except typer.Abort:
        console.print("[red]Aborted.[/red]")
        return EXIT_USAGE
    except PersfitError as exc:
        console.print(f"[bold red]❌ Error:[/bold red] {exc.detail}")
        return exc.exit_code
    except NotImplementedError as exc:
        console.print(f"[bold red]❌ Not implemented:[/bold red] {exc}")
        return EXIT_USAGE
    except OSError as exc:
        name = exc.filename if exc.filename is not None else ""
        console.print(f"[bold red]❌ Cannot access[/bold red] '{name}': {exc.strerror or exc}")
        return EXIT_IO
    return rv if isinstance(rv, int) else 0


# Entry point for running the CLI
if __name__ == "__main__":
    sys.exit(main())
