"""Numerical toolkit for the fractional calculus of variations.

Riemann-Liouville and Caputo operators on uniform grids
(:mod:`~fraclegendre.fracops`), a Lagrangian expression language with
second-order forward-mode AD (:mod:`~fraclegendre.exprlang`), functionals
and their variations (:mod:`~fraclegendre.variational`), and the
fractional Legendre condition with its bump construction
(:mod:`~fraclegendre.legendre`).
"""

from .errors import ContractError, DomainError, FracError, HypothesisError, NumericalError
from .exprlang import EvalError, Jet2, ParseError, eval_jet, evaluate, parse, unparse
from .fracops import (
    Grid,
    GridFunction,
    Order,
    Scheme,
    Side,
    caputo_left_deriv_grid,
    caputo_right_deriv_grid,
    gamma,
    rl_constant_deriv_exact,
    rl_left_deriv_grid,
    rl_left_integral_grid,
    rl_power_deriv_exact,
    rl_right_deriv_grid,
    rl_right_integral_grid,
)
from .legendre import (
    BumpSpec,
    LegendreReport,
    Verdict,
    bump_bounds_check,
    bump_frac_deriv,
    bump_value,
    eta_tilde,
    eta_tilde_frac_deriv,
    legendre_check,
    lemma_negativity_demo,
)
from .variational import (
    Coefficients,
    OperatorKind,
    Problem,
    el_residual,
    functional_value,
    gateaux_check,
    second_difference_quotients,
    second_variation,
    second_variation_coefficients,
)

__version__ = "0.1.0"
