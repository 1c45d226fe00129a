"""Retrieval metrics, diagnostics and the experiment runner."""
from .chisq import chi2_critical, chi_square_uniformity
from .experiment import (
    DEFAULT_SIGMAS,
    DEFAULT_TAU_GRID,
    EvalReport,
    ExperimentConfig,
    ReportCell,
    TauSweep,
    TechniqueParams,
    linear_fit_r2,
    parameter_sweep,
    run_experiment,
    tau_sweep,
)
from .metrics import Z_95, confidence_interval_95, f1, precision_recall

__all__ = [
    "DEFAULT_SIGMAS",
    "DEFAULT_TAU_GRID",
    "EvalReport",
    "ExperimentConfig",
    "ReportCell",
    "TauSweep",
    "TechniqueParams",
    "Z_95",
    "chi2_critical",
    "chi_square_uniformity",
    "confidence_interval_95",
    "f1",
    "linear_fit_r2",
    "parameter_sweep",
    "precision_recall",
    "run_experiment",
    "tau_sweep",
]
