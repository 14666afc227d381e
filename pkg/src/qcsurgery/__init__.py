"""Desk-scale numerical laboratory for quasiconformal gluing of locally
univalent entire functions: overflow-safe block functions, the gluing
diffeomorphism, spiral power-map geometry, the interpolating
quasiconformal map and its glued quasiregular composition, a grid
Beltrami solver, Schwarzian/product-function operators, and Nevanlinna
growth estimation."""

from ._kernels import ACTIVE_LANE
from .special import LogComplex, eval_P, log_g, log_g_prime_over_g, zeros_g
from .gluing import GlueParams, glue_constants, phi, phi_prime, \
    verify_asymptotics
from .spiral import Region, SpiralParams, classify, inverse_h, make_spiral, \
    power_p
from .surgery import BeltramiSample, JacobianMat, beltrami_of_U, \
    beltrami_of_tau, eval_U, log_area, tau, tau_jacobian
from .beltrami import ComplexGridField, QCSolveReport, \
    conformal_at_infinity_report, solve_beltrami, truncate_mu
from .oscillation import HoloFun, ZeroRecord, bank_laine_B, \
    check_bank_laine, count_zeros, integrate_ode, recover_solutions, \
    schwarzian
from .nevanlinna import ArcExclusionPolicy, RadialProfile, \
    composed_logderiv_profile, counting_N, order_fit, proximity_m, x1_check

__version__ = "0.1.0"

__all__ = [
    "ACTIVE_LANE", "ArcExclusionPolicy", "BeltramiSample",
    "ComplexGridField", "GlueParams", "HoloFun", "JacobianMat",
    "LogComplex", "QCSolveReport", "RadialProfile", "Region",
    "SpiralParams", "ZeroRecord", "bank_laine_B", "beltrami_of_U",
    "beltrami_of_tau", "check_bank_laine", "classify",
    "composed_logderiv_profile", "conformal_at_infinity_report",
    "counting_N", "count_zeros", "eval_P", "eval_U", "glue_constants",
    "integrate_ode", "inverse_h", "log_area", "log_g",
    "log_g_prime_over_g", "make_spiral", "order_fit", "phi", "phi_prime",
    "power_p", "proximity_m", "recover_solutions", "schwarzian",
    "solve_beltrami", "tau", "tau_jacobian", "truncate_mu",
    "verify_asymptotics", "x1_check", "zeros_g",
]
