r"""Riemann-Liouville and Caputo operators on uniform grids.

Two families live here:

* closed forms for the reference cases (constants and power functions),
  used as oracles;
* discrete grid operators: a product-integration rule for the fractional
  integrals, and Grunwald-Letnikov / L1 schemes for the derivatives.

All operators map a :class:`GridFunction` to a new :class:`GridFunction` on
the same closed uniform grid. Right-sided operators are realized by
reflecting about the interval midpoint, which on a uniform grid is simply a
reversal of the value array.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from .errors import DomainError

__all__ = [
    "Scheme",
    "Side",
    "Order",
    "Grid",
    "GridFunction",
    "gamma",
    "gl_weights",
    "rl_left_integral_grid",
    "rl_right_integral_grid",
    "rl_left_deriv_grid",
    "rl_right_deriv_grid",
    "caputo_left_deriv_grid",
    "caputo_right_deriv_grid",
    "rl_power_deriv_exact",
    "rl_power_integral_exact",
    "rl_constant_deriv_exact",
]


class Scheme(enum.Enum):
    """Discretization used for the fractional derivatives."""

    #: Convolution with the Grunwald-Letnikov binomial weights.
    GrunwaldLetnikov = "GrunwaldLetnikov"
    #: Product-integrate :math:`J^{1-\alpha}` and then finite-difference it.
    L1 = "L1"


class Side(enum.Enum):
    Left = "Left"
    Right = "Right"


@dataclass(frozen=True)
class Order:
    """A fractional order :math:`\\alpha > 0` together with its integer ceiling."""

    alpha: float

    def __post_init__(self) -> None:
        alpha = float(self.alpha)
        if not math.isfinite(alpha) or alpha <= 0:
            raise DomainError(f"order must be positive and finite, got {self.alpha!r}")
        object.__setattr__(self, "alpha", alpha)

    @property
    def is_integer(self) -> bool:
        return self.alpha == math.floor(self.alpha)

    @property
    def n(self) -> int:
        """Smallest integer ``n`` with ``n - 1 < alpha <= n``."""
        if self.is_integer:
            return int(self.alpha)
        return math.floor(self.alpha) + 1


@dataclass(frozen=True)
class Grid:
    """Closed uniform partition of ``[a, b]`` with ``npoints`` nodes."""

    a: float
    b: float
    npoints: int

    def __post_init__(self) -> None:
        a, b = float(self.a), float(self.b)
        if not (math.isfinite(a) and math.isfinite(b)) or not a < b:
            raise DomainError(f"grid needs finite a < b, got [{self.a}, {self.b}]")
        if int(self.npoints) != self.npoints or self.npoints < 2:
            raise DomainError(f"grid needs an integer npoints >= 2, got {self.npoints!r}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "npoints", int(self.npoints))

    @property
    def h(self) -> float:
        return (self.b - self.a) / (self.npoints - 1)

    @cached_property
    def nodes(self) -> np.ndarray:
        x = np.linspace(self.a, self.b, self.npoints)
        x.setflags(write=False)
        return x

    def index_of(self, x: float) -> int:
        """Index of the node closest to *x*."""
        return int(np.clip(round((x - self.a) / self.h), 0, self.npoints - 1))


@dataclass(frozen=True)
class GridFunction:
    """Real values sampled on every node of a :class:`Grid`.

    Entries must be finite, except that a function flagged ``singular`` may
    carry non-finite values at the two endpoint nodes (e.g. a
    Riemann-Liouville derivative of a function with ``f(a) != 0``).
    """

    grid: Grid
    values: np.ndarray
    singular: bool = field(default=False)

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.npoints,):
            raise DomainError(
                f"expected {self.grid.npoints} values, got array of shape {v.shape}"
            )
        bad = ~np.isfinite(v)
        if self.singular:
            bad[0] = bad[-1] = False
        if bad.any():
            raise DomainError(f"non-finite value at node {int(np.argmax(bad))}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_callable(cls, grid: Grid, fn: Callable[[np.ndarray], np.ndarray]) -> GridFunction:
        return cls(grid, np.broadcast_to(fn(grid.nodes), grid.nodes.shape))

    @classmethod
    def zeros(cls, grid: Grid) -> GridFunction:
        return cls(grid, np.zeros(grid.npoints))

    @property
    def x(self) -> np.ndarray:
        return self.grid.nodes

    def reflect(self) -> GridFunction:
        """Values of ``f(a + b - x)`` on the same grid."""
        return GridFunction(self.grid, self.values[::-1], self.singular)

    def __len__(self) -> int:
        return self.grid.npoints


# {{{ closed forms

def gamma(z: float) -> float:
    """Euler Gamma function for ``z > 0``."""
    z = float(z)
    if not z > 0 or not math.isfinite(z):
        raise DomainError(f"gamma requires a positive finite argument, got {z!r}")
    return math.gamma(z)


def _gamma_ratio(num: float, den: float) -> float:
    """``Gamma(num) / Gamma(den)``, returning 0 when *den* is a pole."""
    if den <= 0 and den == math.floor(den):
        return 0.0
    return math.gamma(num) / math.gamma(den)


def rl_power_deriv_exact(beta: float, order: Order, a: float, x: float) -> float:
    r"""Left RL derivative of :math:`(x - a)^\beta`,
    :math:`\Gamma(\beta + 1) / \Gamma(\beta + 1 - \alpha) (x - a)^{\beta - \alpha}`.
    """
    if beta < 0:
        raise DomainError(f"beta must be >= 0, got {beta}")
    if x < a:
        raise DomainError(f"x = {x} lies left of a = {a}")

    coeff = _gamma_ratio(beta + 1.0, beta + 1.0 - order.alpha)
    if coeff == 0.0:
        return 0.0
    t, p = x - a, beta - order.alpha
    if t == 0.0 and p < 0:
        return math.copysign(math.inf, coeff)
    return coeff * t**p


def rl_power_integral_exact(beta: float, order: Order, a: float, x: float) -> float:
    r"""Left RL integral of :math:`(x - a)^\beta`,
    :math:`\Gamma(\beta + 1) / \Gamma(\beta + 1 + \alpha) (x - a)^{\beta + \alpha}`.
    """
    if beta < 0:
        raise DomainError(f"beta must be >= 0, got {beta}")
    if x < a:
        raise DomainError(f"x = {x} lies left of a = {a}")
    return math.gamma(beta + 1.0) / math.gamma(beta + 1.0 + order.alpha) * (x - a) ** (
        beta + order.alpha
    )


def rl_constant_deriv_exact(
    xi: float, order: Order, a: float, b: float, side: Side, x: float
) -> float:
    """RL derivative of the constant *xi*; non-finite at the singular endpoint."""
    if not a <= x <= b:
        raise DomainError(f"x = {x} outside [{a}, {b}]")
    if xi == 0 or order.is_integer:
        return 0.0

    t = x - a if side is Side.Left else b - x
    if t == 0.0:
        return math.copysign(math.inf, xi)
    return xi * t ** (-order.alpha) / math.gamma(1.0 - order.alpha)

# }}}


# {{{ discrete operators

def gl_weights(alpha: float, n: int) -> np.ndarray:
    """First *n* Grunwald-Letnikov weights, ``w_k = w_{k-1} (k - 1 - alpha) / k``."""
    k = np.arange(1, n, dtype=float)
    return np.concatenate([[1.0], np.cumprod((k - 1.0 - alpha) / k)])


def _second_difference_of_powers(p: float, k: np.ndarray) -> np.ndarray:
    # (k+1)^p - 2 k^p + (k-1)^p for k >= 1, written to avoid cancellation
    t = 1.0 / k
    with np.errstate(divide="ignore"):
        return k**p * (np.expm1(p * np.log1p(t)) + np.expm1(p * np.log1p(-t)))


def _product_integration(values: np.ndarray, alpha: float, h: float) -> np.ndarray:
    n = values.size
    out = np.zeros(n)
    if n == 1:
        return out

    p = alpha + 1.0
    k = np.arange(1, n - 1, dtype=float)
    inner = np.concatenate([[1.0], _second_difference_of_powers(p, k)])
    i = np.arange(1, n, dtype=float)
    first = (i - 1.0) ** p - (i - 1.0 - alpha) * i**alpha

    out[1:] = np.convolve(values[1:], inner)[: n - 1] + first * values[0]
    return h**alpha / math.gamma(alpha + 2.0) * out


def _check_integral_order(order: Order) -> None:
    if not 0 < order.alpha <= 2:
        raise DomainError(f"integral order must lie in (0, 2], got {order.alpha}")


def _check_deriv_order(order: Order) -> None:
    if not 0 < order.alpha <= 1:
        raise DomainError(f"derivative order must lie in (0, 1], got {order.alpha}")


def rl_left_integral_grid(f: GridFunction, order: Order) -> GridFunction:
    r"""Left Riemann-Liouville integral :math:`{}_aJ^\alpha_x f` at every node.

    The kernel :math:`(x - u)^{\alpha - 1}` is integrated exactly against the
    piecewise-linear interpolant of *f*, so the rule is exact for linear *f*.
    """
    _check_integral_order(order)
    return GridFunction(f.grid, _product_integration(f.values, order.alpha, f.grid.h))


def rl_right_integral_grid(f: GridFunction, order: Order) -> GridFunction:
    """Right Riemann-Liouville integral, by reflection of the left one."""
    return rl_left_integral_grid(f.reflect(), order).reflect()


def _left_deriv_values(values: np.ndarray, alpha: float, h: float, scheme: Scheme) -> np.ndarray:
    n = values.size
    if scheme is Scheme.GrunwaldLetnikov:
        out = np.convolve(values, gl_weights(alpha, n))[:n] / h**alpha
        if alpha == 1.0 and n > 1:
            # GL degenerates to a backward difference, which has no left neighbour here
            out[0] = (values[1] - values[0]) / h
    elif scheme is Scheme.L1:
        integral = values if alpha == 1.0 else _product_integration(values, 1.0 - alpha, h)
        out = np.gradient(integral, h, edge_order=1) if n > 1 else np.zeros(n)
    else:
        raise TypeError(f"unknown scheme {scheme!r}")

    if alpha < 1.0 and values[0] != 0.0:
        # the RL derivative behaves like f(a) (x - a)^(-alpha) near x = a
        out[0] = math.copysign(math.inf, values[0]) if np.isfinite(values[0]) else math.nan
    return out


def rl_left_deriv_grid(
    f: GridFunction, order: Order, scheme: Scheme = Scheme.GrunwaldLetnikov
) -> GridFunction:
    r"""Left Riemann-Liouville derivative :math:`{}_aD^\alpha_x f` for
    :math:`0 < \alpha \le 1`.

    When ``f(a) != 0`` and ``alpha < 1`` the true derivative diverges at
    ``x = a``; that node is then reported as ``+-inf`` and the result is
    flagged ``singular``.
    """
    _check_deriv_order(order)
    if not isinstance(scheme, Scheme):
        raise TypeError(f"scheme must be a Scheme, got {scheme!r}")

    values = _left_deriv_values(f.values, order.alpha, f.grid.h, scheme)
    singular = f.singular or not np.isfinite(values[0])
    return GridFunction(f.grid, values, singular=singular)


def rl_right_deriv_grid(
    f: GridFunction, order: Order, scheme: Scheme = Scheme.GrunwaldLetnikov
) -> GridFunction:
    r"""Right Riemann-Liouville derivative :math:`{}_xD^\alpha_b f`.

    Computed as the reflection of the left derivative of the reflected
    function; the :math:`(-1)^n` sign comes out of the reflection.
    """
    return rl_left_deriv_grid(f.reflect(), order, scheme).reflect()


def caputo_left_deriv_grid(
    f: GridFunction, order: Order, scheme: Scheme = Scheme.GrunwaldLetnikov
) -> GridFunction:
    """Left Caputo derivative, i.e. the RL derivative of ``f - f(a)``."""
    shifted = GridFunction(f.grid, f.values - f.values[0])
    return rl_left_deriv_grid(shifted, order, scheme)


def caputo_right_deriv_grid(
    f: GridFunction, order: Order, scheme: Scheme = Scheme.GrunwaldLetnikov
) -> GridFunction:
    return caputo_left_deriv_grid(f.reflect(), order, scheme).reflect()

# }}}
