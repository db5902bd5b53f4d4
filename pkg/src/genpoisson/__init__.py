"""Error bounds for Fourier partial sums of generalized Poisson integrals.

Kernel tails ``sum_{k>=n} exp(-alpha k^r) cos(k t - beta pi / 2)`` are
evaluated in scaled form, their L_s norms computed by two independent
routes, and the resulting bounds checked against closed-form asymptotics.
"""

from .asymptotics import AsymptoticEstimate, FORMULA_IDS, estimate, formulas_for, threshold_n0, threshold_n1
from .bounds import (SandwichBounds, best_constant_deviation, empirical_class_lower_bound, lower_bound,
                     sandwich, upper_bound)
from .harness import GridConfig, VerificationReport, emit_report, sweep, verify_case
from .kernel import KernelParams, Scaled, TruncationError, kernel_tail_eval, tail_series
from .norms import QuadratureConfig, inverse_sqrt_norm, inverse_sqrt_norm_limit, periodic_ls_norm, window_residual
from .orders import NormOrder
from .specfun import ConvergenceError, cos_norm, hyp2f1

__version__ = "0.1.0"
