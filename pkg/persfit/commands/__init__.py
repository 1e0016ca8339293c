"""persfit CLI Commands Package."""

from .bench import bench_command
from .calibrate import calibrate_command
from .checkjacobians import checkjacobians_command
from .multicalibrate import multicalibrate_command
from .synth import synth_command
from .undistortgrid import undistortgrid_command

__all__ = [
    "bench_command",
    "calibrate_command",
    "checkjacobians_command",
    "multicalibrate_command",
    "synth_command",
    "undistortgrid_command",
]
