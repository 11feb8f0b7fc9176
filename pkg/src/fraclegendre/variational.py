r"""Fractional variational functionals and their first and second variations.

For a Lagrangian :math:`L(x, y, D^\alpha y)` on ``[a, b]`` this module
evaluates

* the functional :math:`J[y] = \int_a^b L\,dx` (composite trapezoid),
* the Euler-Lagrange residual
  :math:`\partial_y L + {}_xD^\alpha_b\, \partial_{D^\alpha y} L`,
* the coefficients ``P, Q, R`` of the second variation and the quadratic
  form :math:`\int P (D^\alpha\eta)^2 + Q \eta D^\alpha\eta + R \eta^2`.

When ``y(a) != 0`` the left RL derivative is infinite at ``x = a``. The
first grid cell is then integrated with a one-point rule at ``a + h/2``
(see :func:`functional_value`), and the rule that fired is logged.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ContractError, NumericalError
from .exprlang import EvalError, Expr, Jet2, eval_jet, evaluate, parse, variables
from .fracops import (
    Grid,
    GridFunction,
    Order,
    Scheme,
    caputo_left_deriv_grid,
    rl_left_deriv_grid,
    rl_right_deriv_grid,
)

__all__ = [
    "OperatorKind",
    "Problem",
    "Coefficients",
    "functional_value",
    "el_residual",
    "interior_max_abs",
    "second_variation_coefficients",
    "second_variation",
    "quadratic_form",
    "gateaux_check",
    "second_difference_quotients",
]

logger = logging.getLogger(__name__)

BOUNDARY_TOL = 1e-9


class OperatorKind(enum.Enum):
    RiemannLiouville = "RiemannLiouville"
    Caputo = "Caputo"


@dataclass(frozen=True)
class Problem:
    """A functional ``J[y] = int_a^b L(x, y, D^alpha y) dx`` with fixed ends."""

    lagrangian: Expr
    order: Order
    grid: Grid
    boundary: tuple[float, float] = (0.0, 0.0)
    operator_kind: OperatorKind = OperatorKind.RiemannLiouville
    scheme: Scheme = Scheme.GrunwaldLetnikov

    def __post_init__(self) -> None:
        if isinstance(self.lagrangian, str):
            object.__setattr__(self, "lagrangian", parse(self.lagrangian))
        if not isinstance(self.order, Order):
            object.__setattr__(self, "order", Order(self.order))
        if not 0 < self.order.alpha <= 1:
            raise ContractError(f"alpha must lie in (0, 1], got {self.order.alpha}")
        ya, yb = (float(v) for v in self.boundary)
        object.__setattr__(self, "boundary", (ya, yb))
        unknown = variables(self.lagrangian) - {"x", "y", "Dy"}
        if unknown:
            raise ContractError(f"Lagrangian uses unknown variables {sorted(unknown)}")

    def frac_deriv(self, f: GridFunction) -> GridFunction:
        """Left fractional derivative of *f* of the kind this problem uses."""
        if self.operator_kind is OperatorKind.Caputo:
            return caputo_left_deriv_grid(f, self.order, self.scheme)
        return rl_left_deriv_grid(f, self.order, self.scheme)

    def sample(self, fn: Callable[[np.ndarray], np.ndarray]) -> GridFunction:
        return GridFunction.from_callable(self.grid, fn)


@dataclass(frozen=True)
class Coefficients:
    """``P = L_DyDy``, ``Q = 2 L_yDy``, ``R = L_yy`` along a trajectory.

    Nodes where the trajectory's derivative is singular hold NaN.
    """

    P: GridFunction
    Q: GridFunction
    R: GridFunction


def _check_on_grid(p: Problem, f: GridFunction, name: str) -> None:
    if f.grid != p.grid:
        raise ContractError(f"{name} lives on {f.grid}, expected {p.grid}")


def _check_boundary(p: Problem, f: GridFunction, target: tuple[float, float], name: str) -> None:
    _check_on_grid(p, f, name)
    for node, want in ((0, target[0]), (-1, target[1])):
        got = f.values[node]
        if not abs(got - want) <= BOUNDARY_TOL:
            where = "a" if node == 0 else "b"
            raise ContractError(f"{name}({where}) = {got!r}, expected {want!r}")


def _locate_eval_error(fn: Callable[[slice | int], object], n: int, exc: EvalError) -> EvalError:
    for i in range(n):
        try:
            fn(i)
        except EvalError as inner:
            return EvalError(f"{inner} at node {i}")
    return exc


def _jets(p: Problem, x: np.ndarray, y: np.ndarray, dy: np.ndarray) -> Jet2:
    try:
        return eval_jet(p.lagrangian, x, y, dy)
    except EvalError as exc:
        raise _locate_eval_error(
            lambda i: eval_jet(p.lagrangian, x[i], y[i], dy[i]), x.size, exc
        ) from exc


def _values(p: Problem, x: np.ndarray, y: np.ndarray, dy: np.ndarray) -> np.ndarray:
    def at(sel):
        return evaluate(p.lagrangian, x=x[sel], y=y[sel], Dy=dy[sel])

    try:
        out = at(slice(None))
    except EvalError as exc:
        raise _locate_eval_error(at, x.size, exc) from exc
    return np.broadcast_to(np.asarray(out, dtype=float), x.shape).copy()


def _first_cell_midpoint(p: Problem, y: GridFunction) -> tuple[float, float, float]:
    """``(x, y, D^alpha y)`` at ``a + h/2`` for a trajectory with ``y(a) != 0``.

    The derivative splits into the constant-singularity term
    ``y(a) (x - a)^(-alpha) / Gamma(1 - alpha)`` and the derivative of
    ``y - y(a)``, which is regular and is interpolated linearly.
    """
    h, alpha = p.grid.h, p.order.alpha
    y0 = y.values[0]
    regular = caputo_left_deriv_grid(y, p.order, p.scheme).values
    dy_mid = y0 * (h / 2) ** (-alpha) / math.gamma(1.0 - alpha) + 0.5 * (regular[0] + regular[1])
    return p.grid.a + h / 2, 0.5 * (y.values[0] + y.values[1]), dy_mid


def _integrate(
    values: np.ndarray, h: float, first_cell: Callable[[], float] | None, what: str
) -> float:
    """Composite trapezoid, with the singular-first-node rule."""
    if not np.all(np.isfinite(values[1:])):
        bad = 1 + int(np.argmax(~np.isfinite(values[1:])))
        raise NumericalError(f"{what}: non-finite integrand at node {bad}")
    if math.isfinite(values[0]):
        return float(h * (values.sum() - 0.5 * (values[0] + values[-1])))

    mid = first_cell() if first_cell is not None else math.nan
    if math.isfinite(mid):
        logger.info("%s: singular first node, first cell uses the value at a + h/2", what)
        first = mid
    else:
        logger.info("%s: singular first node, first cell uses the value at x_1", what)
        first = values[1]
    rest = values[1:]
    return float(h * first + h * (rest.sum() - 0.5 * (rest[0] + rest[-1])))


def functional_value(p: Problem, y: GridFunction) -> float:
    """Trapezoidal approximation of ``J[y]``.

    If ``D^alpha y`` is infinite at ``x = a`` (RL derivative, ``y(a) != 0``),
    the first cell is integrated with the midpoint value obtained from the
    closed-form constant-singularity term; if that is unavailable the value
    at ``x_1`` is used instead.
    """
    _check_boundary(p, y, p.boundary, "y")
    dy = p.frac_deriv(y)
    x = p.grid.nodes
    ok = np.isfinite(dy.values)

    integrand = np.full(x.size, np.nan)
    integrand[ok] = _values(p, x[ok], y.values[ok], dy.values[ok])

    def first_cell() -> float:
        xm, ym, dym = _first_cell_midpoint(p, y)
        try:
            return float(evaluate(p.lagrangian, x=xm, y=ym, Dy=dym))
        except EvalError:
            return math.nan

    return _integrate(integrand, p.grid.h, first_cell, "functional_value")


def el_residual(p: Problem, y: GridFunction) -> GridFunction:
    """Euler-Lagrange residual ``L_y + xD^alpha_b L_Dy`` at every node.

    ``L_Dy`` is sampled on the grid and differentiated with the numerical
    right RL derivative. Endpoint values may be non-finite; judge a
    candidate by :func:`interior_max_abs`.
    """
    _check_boundary(p, y, p.boundary, "y")
    dy = p.frac_deriv(y)
    x = p.grid.nodes
    ok = np.isfinite(dy.values)

    l_y = np.full(x.size, np.nan)
    l_dy = np.full(x.size, np.nan)
    jet = _jets(p, x[ok], y.values[ok], dy.values[ok])
    l_y[ok] = jet.d_y
    l_dy[ok] = jet.d_Dy

    right = rl_right_deriv_grid(GridFunction(p.grid, l_dy, singular=True), p.order, p.scheme)
    return GridFunction(p.grid, l_y + right.values, singular=True)


def interior_max_abs(f: GridFunction) -> float:
    """Largest absolute value over the interior nodes."""
    inner = f.values[1:-1]
    if not np.all(np.isfinite(inner)):
        raise NumericalError("non-finite value at an interior node")
    return float(np.max(np.abs(inner))) if inner.size else 0.0


def second_variation_coefficients(p: Problem, y_star: GridFunction) -> Coefficients:
    """``P, Q, R`` of the second variation along *y_star*."""
    _check_boundary(p, y_star, p.boundary, "y*")
    dy = p.frac_deriv(y_star)
    x = p.grid.nodes
    ok = np.isfinite(dy.values)

    jet = _jets(p, x[ok], y_star.values[ok], dy.values[ok])
    fields = []
    for part, scale in ((jet.d_DyDy, 1.0), (jet.d_yDy, 2.0), (jet.d_yy, 1.0)):
        v = np.full(x.size, np.nan)
        v[ok] = scale * np.asarray(part)
        fields.append(GridFunction(p.grid, v, singular=True))
    return Coefficients(*fields)


def second_variation(p: Problem, coeffs: Coefficients, eta: GridFunction) -> float:
    r"""Quadratic form :math:`\int P (D^\alpha\eta)^2 + Q\eta D^\alpha\eta + R\eta^2\,dx`."""
    _check_boundary(p, eta, (0.0, 0.0), "eta")
    for name in ("P", "Q", "R"):
        _check_on_grid(p, getattr(coeffs, name), name)

    d_eta = p.frac_deriv(eta).values
    return quadratic_form(coeffs, eta.values, d_eta, p.grid.h)


def quadratic_form(
    coeffs: Coefficients, eta: np.ndarray, d_eta: np.ndarray, h: float
) -> float:
    """Trapezoidal quadrature of ``P d_eta^2 + Q eta d_eta + R eta^2``.

    A non-finite first node falls back to the value at ``x_1`` for the
    first cell.
    """
    e = np.asarray(eta, dtype=float)
    de = np.asarray(d_eta, dtype=float)
    with np.errstate(invalid="ignore"):
        integrand = coeffs.P.values * de**2 + coeffs.Q.values * e * de + coeffs.R.values * e**2
    # the form is quadratic in eta: where eta and its derivative vanish, so does it
    integrand = np.where((e == 0) & (de == 0), 0.0, integrand)
    return _integrate(integrand, h, None, "second_variation")


def _perturbed(y_star: GridFunction, eta: GridFunction, eps: float) -> GridFunction:
    return GridFunction(y_star.grid, y_star.values + eps * eta.values)


def gateaux_check(
    p: Problem, y_star: GridFunction, eta: GridFunction, eps_list: Sequence[float]
) -> list[float]:
    """``J[y* + eps eta]`` for every ``eps`` in *eps_list*."""
    _check_boundary(p, eta, (0.0, 0.0), "eta")
    return [functional_value(p, _perturbed(y_star, eta, eps)) for eps in eps_list]


def second_difference_quotients(
    p: Problem, y_star: GridFunction, eta: GridFunction, eps_list: Sequence[float]
) -> list[float]:
    """``(J[y* + eps eta] - 2 J[y*] + J[y* - eps eta]) / eps^2`` for each ``eps``.

    Tends to :func:`second_variation` as ``eps -> 0``.
    """
    if any(eps == 0 for eps in eps_list):
        raise ContractError("eps must be nonzero")
    j0 = functional_value(p, y_star)
    plus = gateaux_check(p, y_star, eta, eps_list)
    minus = gateaux_check(p, y_star, eta, [-eps for eps in eps_list])
    return [(jp - 2 * j0 + jm) / eps**2 for jp, jm, eps in zip(plus, minus, eps_list)]
