"""Synthetic scenarios and evaluation metrics."""

from .metrics import (
    BenchmarkRow,
    ErrorSample,
    angular_errors,
    auc,
    format_report,
    pixel_distortion_error,
    recall,
)
from .synth import ConfMode, NoiseSpec, Scenario, sample_scenario

__all__ = [
    "BenchmarkRow",
    "ConfMode",
    "ErrorSample",
    "NoiseSpec",
    "Scenario",
    "angular_errors",
    "auc",
    "format_report",
    "pixel_distortion_error",
    "recall",
    "sample_scenario",
]
