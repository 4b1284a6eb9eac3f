"""Constructive density of s-harmonic functions in one dimension.

Exterior bump data are extended into a ball with the fractional Poisson
kernel; finite combinations of such extensions, rescaled, approximate any
smooth target in ``C^k`` of the unit ball while vanishing far away.
"""

from .density_engine import (ApproximationReport, Dictionary, SHarmonicSum, SpanSolution,
                             approximate, blowup_l1_error, blowup_member,
                             boundary_growth_constant, build_dictionary, ck_error,
                             ck_errors, derivative_matrix, fit_boundary_growth,
                             growth_function, rescale, rescale_for_monomial, span_solve)
from .errors import (BadEta, BadExponent, BudgetInfeasible, FracDenseError, GeometryError,
                     IllConditioned, InputError, NonConvergence, NonFinite, NumericalError,
                     OrderTooHigh, OverflowRisk, RankDeficient, SupportError,
                     TooCloseToBoundary)
from .fraclap import ResidualReport, frac_laplacian, residual_report
from .jets import DerivativeVector, MultiIndex
from .kernel_extension import (Ball, Bump, ExteriorData, FracParams, SHarmonicFn,
                               bump_profile, extend, extend_derivatives, kernel_mass,
                               poisson_constant, poisson_kernel, transform)
from .polyapprox import (MollifierPlan, Polynomial, choose_plan, convolve_to_polynomial,
                         mollifier_polynomial, weierstrass_approx)
from .quadrature import DEFAULT_QUAD, QuadSettings, integrate, integrate_endpoint_singular

__version__ = "0.1.0"

__all__ = [
    "ApproximationReport",
    "BadEta",
    "BadExponent",
    "Ball",
    "BudgetInfeasible",
    "Bump",
    "DEFAULT_QUAD",
    "DerivativeVector",
    "Dictionary",
    "ExteriorData",
    "FracDenseError",
    "FracParams",
    "GeometryError",
    "IllConditioned",
    "InputError",
    "MollifierPlan",
    "MultiIndex",
    "NonConvergence",
    "NonFinite",
    "NumericalError",
    "OrderTooHigh",
    "OverflowRisk",
    "Polynomial",
    "QuadSettings",
    "RankDeficient",
    "ResidualReport",
    "SHarmonicFn",
    "SHarmonicSum",
    "SpanSolution",
    "SupportError",
    "TooCloseToBoundary",
    "approximate",
    "blowup_l1_error",
    "blowup_member",
    "boundary_growth_constant",
    "build_dictionary",
    "bump_profile",
    "choose_plan",
    "ck_error",
    "ck_errors",
    "convolve_to_polynomial",
    "derivative_matrix",
    "extend",
    "extend_derivatives",
    "fit_boundary_growth",
    "frac_laplacian",
    "growth_function",
    "integrate",
    "integrate_endpoint_singular",
    "kernel_mass",
    "mollifier_polynomial",
    "poisson_constant",
    "poisson_kernel",
    "rescale",
    "rescale_for_monomial",
    "residual_report",
    "span_solve",
    "transform",
    "weierstrass_approx",
]
