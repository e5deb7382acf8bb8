"""Calibration metrics over prediction records."""
from .metrics import (
    DEFAULT_BINS,
    ReliabilityBin,
    bin_edges,
    bin_indices,
    compute_accuracy,
    compute_ece,
    compute_mce,
    ece_from_table,
    expected_calibration_error,
    extract_choice_letter,
    grade_answer,
    mce_from_table,
    mean_confidence,
    normalize_confidence,
    reliability_bins,
    reliability_table,
)

__all__ = [
    "DEFAULT_BINS",
    "ReliabilityBin",
    "bin_edges",
    "bin_indices",
    "compute_accuracy",
    "compute_ece",
    "compute_mce",
    "ece_from_table",
    "expected_calibration_error",
    "extract_choice_letter",
    "grade_answer",
    "mce_from_table",
    "mean_confidence",
    "normalize_confidence",
    "reliability_bins",
    "reliability_table",
]
