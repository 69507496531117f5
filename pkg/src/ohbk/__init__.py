"""Online signal recovery with heavy-ball Kaczmarz iterations."""

__version__ = "0.1.0"

from .linalg import SymMatrix, sym_eigenvalues
from .solver import SolverState, Trajectory, init, run, run_paired, step
from .sources import Measurement, MeasurementSource, SourceSpec, load_csv_matrix, make_rng
from .theory import (
    RateReport,
    WEstimate,
    check_condition,
    closed_form_W_isotropic,
    estimate_W,
    max_beta_isotropic,
    rate_constants,
    recurrence_oracle,
    theorem_bound,
)

__all__ = [
    "Measurement", "MeasurementSource", "RateReport", "SolverState", "SourceSpec", "SymMatrix",
    "Trajectory", "WEstimate", "check_condition", "closed_form_W_isotropic", "estimate_W", "init",
    "load_csv_matrix", "make_rng", "max_beta_isotropic", "rate_constants", "recurrence_oracle",
    "run", "run_paired", "step", "sym_eigenvalues", "theorem_bound",
]
