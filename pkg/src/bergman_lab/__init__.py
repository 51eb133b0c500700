"""Numerical laboratory for Bergman projections with exponential weights.

Submodules
----------
weights       radial weight families and the derivative-product ledger
moments       moment integrals and their asymptotic law
fenchel       Legendre-Fenchel transforms and the boundary series
kernel        reproducing-kernel coefficients and integral means
smooth_sums   smooth dyadic partial sums and Hardy norms
projection    Schur integrals and discretised projections
fock          radial Fock-space analogues
cli           command-line experiment runner
"""
from ._backend import BACKEND
from .errors import (BracketError, ConfigError, ConvergenceError, DomainError, LabError,
                     MemoryBudgetError, QuadratureError, TruncationError)
from .fenchel import inverse_lf_closed_form, lf_closed_form, lf_transform
from .fock import (build_fock_kernel, class_s_check, eval_fock_kernel, fock_limit_condition_check,
                   fock_schur_integral)
from .kernel import build_kernel, eval_kernel, integral_mean_M1, m1_asymptote, suggest_n_max
from .moments import fock_moment, log_moments, moment, moment_asymptote, moment_table
from .projection import (assemble_projection, ident2_residual, opnorm_lower, piecewise_bounds,
                         polar_grid, schur_integral)
from .weights import WeightSpec, build_Pn, check_limit_condition, check_sign_condition

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "__version__",
    "LabError", "DomainError", "QuadratureError", "BracketError", "TruncationError",
    "ConvergenceError", "MemoryBudgetError", "ConfigError",
    "WeightSpec", "build_Pn", "check_limit_condition", "check_sign_condition",
    "moment", "log_moments", "moment_asymptote", "moment_table", "fock_moment",
    "lf_transform", "lf_closed_form", "inverse_lf_closed_form",
    "build_kernel", "eval_kernel", "integral_mean_M1", "m1_asymptote", "suggest_n_max",
    "ident2_residual", "piecewise_bounds", "schur_integral", "polar_grid",
    "assemble_projection", "opnorm_lower",
    "build_fock_kernel", "eval_fock_kernel", "fock_schur_integral", "class_s_check",
    "fock_limit_condition_check",
]
