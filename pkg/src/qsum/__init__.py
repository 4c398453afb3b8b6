"""q-Borel / q-Laplace summation of two-slope linear q-difference systems."""
from .numerics import (
    DEFAULT_CONTEXT,
    ConvergenceError,
    DomainError,
    NumericContext,
    PoleProximityError,
    QSumError,
)
from .pipeline import (
    ForbiddenDirectionError,
    MeromorphicSolution,
    PoleSpiral,
    evaluate_solution,
    predicted_poles,
    summation_assemble,
)
from .series import TruncatedSeries, recombine, section
from .system import SystemSpec, d_step_transfer, select_forcing_sign, sigma_forbidden, solve_formal, solve_formal_exact
from .theta import theta_eval
from .transforms import Direction, Slope, growth_check, qborel_linear, qborel_literal, qlaplace_literal
from .verify import ResidualReport, run_suite

__all__ = [
    "DEFAULT_CONTEXT", "ConvergenceError", "DomainError", "NumericContext", "PoleProximityError", "QSumError",
    "ForbiddenDirectionError", "MeromorphicSolution", "PoleSpiral", "evaluate_solution", "predicted_poles",
    "summation_assemble", "TruncatedSeries", "recombine", "section", "SystemSpec", "d_step_transfer",
    "select_forcing_sign", "sigma_forbidden", "solve_formal", "solve_formal_exact", "theta_eval", "Direction",
    "Slope", "growth_check", "qborel_linear", "qborel_literal", "qlaplace_literal", "ResidualReport", "run_suite",
]
__version__ = "0.1.0"
