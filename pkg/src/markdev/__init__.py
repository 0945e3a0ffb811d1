"""Deviation tests for marked point patterns."""

__version__ = "0.1.0"

from .deviation import DeviationKind, deviation_measure
from .errors import NumericalError, ValidationError
from .estimators import EdgeCorrection, MarkFunction, PairTable, Transformation, estimate_chat_f, estimate_kf, transform
from .harness import StudyConfig, estimate_power, run_power_study, row_study
from .mctest import TestConfig, TestResult, compute_t0, permute_marks, run_test
from .models import GaussianFieldSpec, ModelFamily, ModelSpec, simulate_model
from .pattern import FunctionEstimate, MarkedPattern, RGrid, Window, mark_summary, pairwise_distances, window_grid
from .residuals import NullDistribution, ScalingKind, build_null_distribution, compute_residuals

__all__ = [
    "DeviationKind", "deviation_measure",
    "NumericalError", "ValidationError",
    "EdgeCorrection", "MarkFunction", "PairTable", "Transformation", "estimate_chat_f", "estimate_kf", "transform",
    "StudyConfig", "estimate_power", "run_power_study", "row_study",
    "TestConfig", "TestResult", "compute_t0", "permute_marks", "run_test",
    "GaussianFieldSpec", "ModelFamily", "ModelSpec", "simulate_model",
    "FunctionEstimate", "MarkedPattern", "RGrid", "Window", "mark_summary", "pairwise_distances", "window_grid",
    "NullDistribution", "ScalingKind", "build_null_distribution", "compute_residuals",
]
