"""
Check-Jacobians Command - Compare analytic Jacobians with finite differences.
"""

import typer
from rich.console import Console

from ..optim.jacobians import JACOBIAN_BLOCKS, check_jacobians
from ..utils.helpers import format_float, format_record

console = Console(stderr=True)

JACOBIAN_TOL = 1e-5


def checkjacobians_command(seed: int = 0, trials: int = 100) -> int:
    """
    Print the maximum relative error per Jacobian block.

    Returns:
        0 when every block is below 1e-5, else 1
    """
    if trials < 1:
        raise typer.BadParameter("trials must be at least 1", param_hint="--trials")

    report = check_jacobians(seed, trials)
    pairs = [(f"max_rel_err[{block}]", format_float(report.errors[block])) for block in JACOBIAN_BLOCKS]
    pairs += [
        ("max_rel_err", format_float(report.max_error)),
        ("trials", report.trials),
        ("passed", str(report.passed(JACOBIAN_TOL)).lower()),
    ]
    typer.echo(format_record(pairs))

    if not report.passed(JACOBIAN_TOL):
        worst = max(report.errors, key=report.errors.get)
        console.print(
            f"[bold red]❌ Jacobian mismatch:[/bold red] block '{worst}' "
            f"has relative error {report.errors[worst]:.3g}"
        )
        return 1
    console.print(f"[green]✅ All Jacobian blocks agree to {JACOBIAN_TOL:g}[/green]")
    return 0
