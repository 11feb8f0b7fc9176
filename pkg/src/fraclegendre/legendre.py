r"""The fractional Legendre condition and the bump construction behind it.

For ``0 < alpha < 1`` the cubic

.. math::

    f(x) = \frac{x - c}{d} - \frac{5 - \alpha}{2 d^2} (x - c)^2
         + \frac{3 - \alpha}{2 d^3} (x - c)^3

vanishes together with its left RL derivative (based at ``c``) at both ends
of ``[c, c + d]``. Extended by zero it gives an admissible variation
:math:`\tilde\eta` that concentrates the quadratic form of the second
variation on a short subinterval, where the ``P (D^\alpha \eta)^2`` term
dominates as ``d -> 0``. Hence ``P >= 0`` is necessary for a minimum.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.integrate import quad

from .errors import ContractError, DomainError, HypothesisError, NumericalError
from .fracops import Grid, GridFunction
from .variational import (
    Coefficients,
    Problem,
    quadratic_form,
    second_variation_coefficients,
)

__all__ = [
    "BumpSpec",
    "BoundsCheck",
    "LemmaRow",
    "Verdict",
    "LegendreReport",
    "bump_value",
    "bump_frac_deriv",
    "bump_bounds_check",
    "eta_tilde",
    "eta_tilde_frac_deriv",
    "lemma_bound",
    "lemma_corrected_bound",
    "lemma_negativity_demo",
    "legendre_check",
    "sign_changes",
]

# minimum number of grid nodes inside [c, c + d]
MIN_SUPPORT_NODES = 8


@dataclass(frozen=True)
class BumpSpec:
    """Support ``[c, c + d]`` and order of the bump, on a parent grid."""

    c: float
    d: float
    alpha: float
    parent: Grid

    def __post_init__(self) -> None:
        if not self.d > 0:
            raise DomainError(f"d must be positive, got {self.d}")
        if not 0 < self.alpha < 1:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")
        g = self.parent
        slack = 1e-12 * (g.b - g.a)
        if self.c < g.a - slack or self.c + self.d > g.b + slack:
            raise DomainError(
                f"[{self.c}, {self.c + self.d}] is not contained in [{g.a}, {g.b}]"
            )
        n = int(np.count_nonzero(self.support_mask))
        if n < MIN_SUPPORT_NODES:
            raise DomainError(
                f"support [{self.c}, {self.c + self.d}] holds {n} grid nodes, "
                f"need at least {MIN_SUPPORT_NODES}"
            )

    @property
    def support_mask(self) -> np.ndarray:
        x = self.parent.nodes
        slack = 1e-12 * (self.parent.b - self.parent.a)
        return (x >= self.c - slack) & (x <= self.c + self.d + slack)


def _local(spec: BumpSpec, x) -> np.ndarray:
    t = np.asarray(x, dtype=float) - spec.c
    slack = 1e-12 * max(1.0, abs(spec.c) + spec.d)
    if np.any(t < -slack) or np.any(t > spec.d + slack):
        raise DomainError(f"x outside the bump support [{spec.c}, {spec.c + spec.d}]")
    return np.clip(t, 0.0, spec.d)


def _scalar_or_array(v: np.ndarray, like):
    return float(v) if np.ndim(like) == 0 else v


def bump_value(spec: BumpSpec, x):
    """The cubic bump ``f(x)`` for ``c <= x <= c + d``."""
    t = _local(spec, x)
    a, d = spec.alpha, spec.d
    v = t / d - (5 - a) * t**2 / (2 * d**2) + (3 - a) * t**3 / (2 * d**3)
    return _scalar_or_array(v, x)


def _cubic_deriv(t, a: float, d: float):
    # term-wise power rule on the cubic, in the local variable t = x - c >= 0
    return (
        t ** (1 - a) / d
        - (5 - a) * t ** (2 - a) / ((2 - a) * d**2)
        + 3 * t ** (3 - a) / ((2 - a) * d**3)
    ) / math.gamma(2 - a)


def bump_frac_deriv(spec: BumpSpec, x):
    """Left RL derivative of the bump, based at ``c``, in closed form."""
    return _scalar_or_array(_cubic_deriv(_local(spec, x), spec.alpha, spec.d), x)


class BoundsCheck(NamedTuple):
    sup_f: float
    sup_Df: float
    ok: bool


def bump_bounds_check(spec: BumpSpec, samples: int = 10_000) -> BoundsCheck:
    """Dense-sample ``|f| < 1`` and ``|D^alpha f| < d^(-alpha)`` on the support."""
    if samples < 1000:
        raise DomainError(f"need at least 1000 samples, got {samples}")
    x = np.linspace(spec.c, spec.c + spec.d, samples)
    sup_f = float(np.max(np.abs(bump_value(spec, x))))
    sup_df = float(np.max(np.abs(bump_frac_deriv(spec, x))))
    return BoundsCheck(sup_f, sup_df, sup_f < 1.0 and sup_df < spec.d ** (-spec.alpha))


def eta_tilde(spec: BumpSpec) -> GridFunction:
    """The bump on ``[c, c + d]`` extended by zero to the parent grid."""
    mask = spec.support_mask
    values = np.zeros(spec.parent.npoints)
    values[mask] = bump_value(spec, spec.parent.nodes[mask])
    return GridFunction(spec.parent, values)


def _tail(spec: BumpSpec, s: np.ndarray) -> np.ndarray:
    # RL derivative of the cubic's Taylor expansion about c + d, restricted to x > c + d
    a, d = spec.alpha, spec.d
    derivs = ((1 - a) / (2 * d), (4 - 2 * a) / d**2, 3 * (3 - a) / d**3)
    return sum(fk / math.gamma(k + 1 - a) * s ** (k - a) for k, fk in enumerate(derivs, 1))


def eta_tilde_frac_deriv(spec: BumpSpec, exact_tail: bool = False) -> GridFunction:
    """Left RL derivative of :func:`eta_tilde` on the parent grid.

    By default this is the piecewise closed form: zero left of ``c``, the
    bump derivative on ``[c, c + d]``, zero right of ``c + d``.

    The RL derivative is nonlocal, so right of the support the true
    derivative of the zero-extended bump does not vanish. With
    ``exact_tail=True`` that tail is included, computed by subtracting the
    derivative of the cubic's continuation past ``c + d``.
    """
    g = spec.parent
    x = g.nodes
    mask = spec.support_mask
    values = np.zeros(g.npoints)
    values[mask] = bump_frac_deriv(spec, x[mask])

    if exact_tail:
        right = x > spec.c + spec.d
        if right.any():
            full = _cubic_deriv(x[right] - spec.c, spec.alpha, spec.d)
            values[right] = full - _tail(spec, x[right] - spec.c - spec.d)
    return GridFunction(g, values)


# {{{ lemma

def _scaled_bump_constants(alpha: float) -> tuple[float, float, float]:
    """``int g^2``, ``int |phi g|``, ``int phi^2`` over ``[0, 1]`` for the unit bump.

    ``phi`` is the bump with ``c = 0, d = 1`` and ``g`` its RL derivative;
    for general ``d`` the three integrals scale as ``d^(1 - 2 alpha)``,
    ``d^(1 - alpha)`` and ``d``.
    """
    a = alpha

    def phi(s):
        return s - (5 - a) * s**2 / 2 + (3 - a) * s**3 / 2

    def g(s):
        return _cubic_deriv(s, a, 1.0)

    c1 = quad(lambda s: g(s) ** 2, 0, 1, limit=200)[0]
    c2 = quad(lambda s: abs(phi(s) * g(s)), 0, 1, limit=200)[0]
    c3 = quad(lambda s: phi(s) ** 2, 0, 1, limit=200)[0]
    return c1, c2, c3


def lemma_bound(d: float, alpha: float, K1: float, K2: float, K3: float) -> float:
    """``d^(1 - 2 alpha) (-K1 + K2 d^alpha + K3 d^(2 alpha))``."""
    return d ** (1 - 2 * alpha) * (-K1 + K2 * d**alpha + K3 * d ** (2 * alpha))


def lemma_corrected_bound(d: float, alpha: float, K1: float, K2: float, K3: float) -> float:
    """Upper bound on the bump's quadratic form when ``P <= -K1``,
    ``|Q| <= K2`` and ``R <= K3`` on the support.

    Same shape as :func:`lemma_bound` but weighted by the bump's actual
    integrals, which are far below the crude ``|f| < 1``,
    ``|D f| < d^(-alpha)`` estimates.
    """
    c1, c2, c3 = _scaled_bump_constants(alpha)
    return d ** (1 - 2 * alpha) * (-K1 * c1 + K2 * c2 * d**alpha + K3 * c3 * d ** (2 * alpha))


class LemmaRow(NamedTuple):
    d: float
    form_value: float
    bound_value: float
    corrected_bound: float

    @property
    def below_bound(self) -> bool:
        """``form_value < bound_value`` up to 5% of ``|bound_value|``."""
        return self.form_value < self.bound_value + 0.05 * abs(self.bound_value)


def lemma_negativity_demo(
    P: GridFunction,
    Q: GridFunction,
    R: GridFunction,
    c: float,
    K1: float,
    K2: float,
    K3: float,
    alpha: float,
    d_list: Sequence[float],
) -> list[LemmaRow]:
    """Evaluate the bump's quadratic form for each support length ``d``.

    The hypotheses ``P <= -K1``, ``Q <= K2``, ``R <= K3`` are checked on the
    grid nodes of ``[c, c + max(d_list)]``. The bump's derivative is the
    piecewise closed form, so the form is integrated over ``[c, c + d]``.
    """
    if not d_list:
        raise ContractError("d_list must not be empty")
    if min(K1, K2, K3) <= 0:
        raise ContractError("K1, K2, K3 must be positive")
    grid = P.grid
    if Q.grid != grid or R.grid != grid:
        raise ContractError("P, Q, R must share one grid")

    widest = BumpSpec(c, max(d_list), alpha, grid).support_mask
    for name, f, ok in (
        ("P", P, lambda v: v <= -K1),
        ("Q", Q, lambda v: v <= K2),
        ("R", R, lambda v: v <= K3),
    ):
        bad = widest & ~ok(f.values)
        if bad.any():
            i = int(np.argmax(bad))
            raise HypothesisError(
                f"hypothesis on {name} violated at node {i} (x={float(grid.nodes[i])!r}, "
                f"{name}={float(f.values[i])!r})"
            )

    coeffs = Coefficients(P, Q, R)
    rows = []
    for d in d_list:
        spec = BumpSpec(c, d, alpha, grid)
        form = quadratic_form(
            coeffs, eta_tilde(spec).values, eta_tilde_frac_deriv(spec).values, grid.h
        )
        rows.append(
            LemmaRow(
                float(d),
                form,
                lemma_bound(d, alpha, K1, K2, K3),
                lemma_corrected_bound(d, alpha, K1, K2, K3),
            )
        )
    return rows

# }}}


# {{{ legendre condition

class Verdict(enum.Enum):
    NecessaryForMin = "NecessaryForMin"
    NecessaryForMax = "NecessaryForMax"
    NeitherSignCondition = "NeitherSignCondition"
    Indeterminate = "Indeterminate"


@dataclass(frozen=True)
class LegendreReport:
    """Sign scan of ``P = d^2 L / d(D^alpha y)^2`` along a candidate.

    ``sign_change_nodes`` holds the index ``i`` of the last node before each
    sign change; nodes with ``|P| <= tol`` are skipped when pairing signs,
    so a change through an exact zero is still reported. Nodes where ``P``
    is non-finite (singular derivative of the candidate) are listed in
    ``singular_nodes`` and excluded from the scan.
    """

    P: GridFunction
    min_P: float
    max_P: float
    verdict: Verdict
    sign_change_nodes: tuple[int, ...]
    tol: float
    singular_nodes: tuple[int, ...] = ()

    def sign_change_locations(self) -> list[float]:
        """Zero of the linear interpolant across each sign change."""
        x, v = self.P.x, self.P.values
        out = []
        for i in self.sign_change_nodes:
            j = _next_significant(v, i + 1, self.tol)
            out.append(float(x[i] - v[i] * (x[j] - x[i]) / (v[j] - v[i])))
        return out


def _next_significant(v: np.ndarray, start: int, tol: float) -> int:
    for j in range(start, v.size):
        if np.isfinite(v[j]) and abs(v[j]) > tol:
            return j
    return -1


def sign_changes(values: np.ndarray, tol: float) -> list[int]:
    """Indices ``i`` where the sign flips between ``values[i]`` and the next
    node with ``|value| > tol``."""
    significant = [i for i, v in enumerate(values) if np.isfinite(v) and abs(v) > tol]
    return [
        i for i, j in zip(significant, significant[1:])
        if np.sign(values[i]) != np.sign(values[j])
    ]


def legendre_check(p: Problem, y_star: GridFunction, tol: float | None = None) -> LegendreReport:
    """Check the necessary sign condition on ``P`` along *y_star*.

    The default tolerance is ``1e-9 (1 + max|P|)``; a ``P`` that is
    numerically zero everywhere is reported as ``Indeterminate``.
    """
    P = second_variation_coefficients(p, y_star).P
    v = P.values
    finite = np.isfinite(v)
    if not finite.any():
        raise NumericalError("P is non-finite at every node")
    singular = tuple(int(i) for i in np.flatnonzero(~finite))
    if singular and set(singular) - {0, v.size - 1}:
        raise NumericalError(f"P is non-finite at interior nodes {singular}")

    fv = v[finite]
    if tol is None:
        tol = 1e-9 * (1.0 + float(np.max(np.abs(fv))))
    elif not tol > 0:
        raise ContractError(f"tol must be positive, got {tol}")

    min_p, max_p = float(fv.min()), float(fv.max())
    if max(abs(min_p), abs(max_p)) <= tol:
        verdict = Verdict.Indeterminate
    elif min_p >= -tol:
        verdict = Verdict.NecessaryForMin
    elif max_p <= tol:
        verdict = Verdict.NecessaryForMax
    else:
        verdict = Verdict.NeitherSignCondition

    return LegendreReport(
        P=P,
        min_P=min_p,
        max_P=max_p,
        verdict=verdict,
        sign_change_nodes=tuple(sign_changes(v, tol)),
        tol=tol,
        singular_nodes=singular,
    )

# }}}
