"""Command-line front end.

Every subcommand reads a flat ``key = value`` config file::

    # the illustrative sign-changing example
    lagrangian    = x*sqrt(1+Dy^2)
    alpha         = 0.5
    interval      = -1, 1
    boundary      = 0, 0
    npoints       = 257
    scheme        = GrunwaldLetnikov
    operator_kind = RiemannLiouville
    candidate     = 0

and writes CSV (header row, LF endings) to ``--output`` / ``output`` or to
standard output, followed by a one-line summary where the command has one.

Exit codes: 0 success, 2 usage or validation error, 3 a mathematical
hypothesis is violated, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ContractError, DomainError, HypothesisError, NumericalError
from .exprlang import BinOp, Call, EvalError, Expr, Neg, Num, ParseError, Var, evaluate, parse
from .fracops import (
    Grid,
    GridFunction,
    Order,
    Scheme,
    Side,
    caputo_left_deriv_grid,
    caputo_right_deriv_grid,
    rl_constant_deriv_exact,
    rl_left_deriv_grid,
    rl_power_deriv_exact,
    rl_right_deriv_grid,
)
from .legendre import BumpSpec, eta_tilde, legendre_check, lemma_negativity_demo
from .variational import (
    OperatorKind,
    Problem,
    el_residual,
    interior_max_abs,
    second_difference_quotients,
    second_variation,
    second_variation_coefficients,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_HYPOTHESIS = 3
EXIT_NUMERICAL = 4


class ConfigError(ContractError):
    """Invalid or incomplete run configuration."""


# {{{ config

@dataclass(frozen=True)
class RunConfig:
    alpha: float
    interval: tuple[float, float]
    npoints: int = 257
    lagrangian: str | None = None
    boundary: tuple[float, float] | None = None
    scheme: Scheme = Scheme.GrunwaldLetnikov
    operator_kind: OperatorKind = OperatorKind.RiemannLiouville
    candidate: str | None = None
    candidate_file: Path | None = None
    output: Path | None = None

    @property
    def grid(self) -> Grid:
        return Grid(*self.interval, self.npoints)

    @property
    def order(self) -> Order:
        return Order(self.alpha)


_KEYS = {
    "lagrangian", "alpha", "interval", "boundary", "npoints", "scheme",
    "operator_kind", "candidate", "candidate_file", "output",
}


def _pair(key: str, text: str) -> tuple[float, float]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 2:
        raise ConfigError(f"{key}: expected two comma-separated numbers, got {text!r}")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError:
        raise ConfigError(f"{key}: not a number in {text!r}") from None


def _enum(cls, key: str, text: str):
    try:
        return cls(text)
    except ValueError:
        choices = ", ".join(m.value for m in cls)
        raise ConfigError(f"{key}: {text!r} is not one of {choices}") from None


def parse_config(text: str, base: Path | None = None) -> RunConfig:
    """Parse and validate the ``key = value`` config format."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value

    for key in ("alpha", "interval"):
        if key not in raw:
            raise ConfigError(f"missing required key {key!r}")

    try:
        alpha = float(raw["alpha"])
    except ValueError:
        raise ConfigError(f"alpha: not a number: {raw['alpha']!r}") from None
    if not 0 < alpha <= 1:
        raise ConfigError(f"alpha must lie in (0, 1], got {alpha}")

    interval = _pair("interval", raw["interval"])
    if not interval[0] < interval[1]:
        raise ConfigError(f"interval must have a < b, got {interval}")

    try:
        npoints = int(raw.get("npoints", "257"))
    except ValueError:
        raise ConfigError(f"npoints: not an integer: {raw['npoints']!r}") from None
    if npoints < 2:
        raise ConfigError(f"npoints must be >= 2, got {npoints}")

    lagrangian = raw.get("lagrangian")
    if lagrangian is not None:
        parse(lagrangian)

    candidate = raw.get("candidate")
    if candidate is not None:
        parse(candidate, allowed=("x",))
    candidate_file = raw.get("candidate_file")
    if candidate is not None and candidate_file is not None:
        raise ConfigError("give either candidate or candidate_file, not both")

    def path(v: str | None) -> Path | None:
        if v is None:
            return None
        p = Path(v)
        return p if p.is_absolute() or base is None else base / p

    return RunConfig(
        alpha=alpha,
        interval=interval,
        npoints=npoints,
        lagrangian=lagrangian,
        boundary=_pair("boundary", raw["boundary"]) if "boundary" in raw else None,
        scheme=_enum(Scheme, "scheme", raw.get("scheme", "GrunwaldLetnikov")),
        operator_kind=_enum(
            OperatorKind, "operator_kind", raw.get("operator_kind", "RiemannLiouville")
        ),
        candidate=candidate,
        candidate_file=path(candidate_file),
        output=path(raw.get("output")),
    )


def load_config(path: Path) -> RunConfig:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, base=path.parent)


def sample_expression(src: str, grid: Grid) -> GridFunction:
    """Sample an expression in ``x`` alone on every grid node."""
    node = parse(src, allowed=("x",))
    values = evaluate(node, x=grid.nodes)
    return GridFunction(grid, np.broadcast_to(np.asarray(values, dtype=float), grid.nodes.shape))


def read_samples(path: Path, grid: Grid) -> GridFunction:
    """Two-column ``x,y`` samples (optional header) that must match *grid*."""
    rows = []
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            for row in csv.reader(fh):
                if not row or not "".join(row).strip():
                    continue
                try:
                    rows.append((float(row[0]), float(row[1])))
                except (ValueError, IndexError):
                    if rows:
                        raise ConfigError(f"{path}: bad row {row!r}") from None
    except OSError as exc:
        raise ConfigError(f"cannot read samples {path}: {exc.strerror}") from None

    data = np.array(rows, dtype=float).reshape(-1, 2)
    if data.shape[0] != grid.npoints:
        raise ConfigError(f"{path}: {data.shape[0]} samples for a {grid.npoints}-node grid")
    if not np.allclose(data[:, 0], grid.nodes, rtol=0, atol=1e-9 * (grid.b - grid.a)):
        raise ConfigError(f"{path}: sample abscissae do not match the grid nodes")
    return GridFunction(grid, data[:, 1])


def candidate_of(cfg: RunConfig) -> GridFunction:
    if cfg.candidate is not None:
        return sample_expression(cfg.candidate, cfg.grid)
    if cfg.candidate_file is not None:
        return read_samples(cfg.candidate_file, cfg.grid)
    raise ConfigError("this command needs a candidate (candidate or candidate_file)")


def problem_of(cfg: RunConfig, y: GridFunction) -> Problem:
    if cfg.lagrangian is None:
        raise ConfigError("this command needs a lagrangian")
    boundary = cfg.boundary
    if boundary is None:
        boundary = (float(y.values[0]), float(y.values[-1]))
    return Problem(
        cfg.lagrangian, cfg.order, cfg.grid, boundary, cfg.operator_kind, cfg.scheme
    )

# }}}


# {{{ output

def fmt(v) -> str:
    """Round-trip decimal text for numbers; ``inf``/``-inf``/``nan`` literal."""
    if isinstance(v, (bool, np.bool_)):
        return "yes" if v else "no"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _csv_text(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _emit(cfg: RunConfig, out: Path | None, table: str, summary: str | None, stdout) -> None:
    target = out if out is not None else cfg.output
    if target is not None:
        with open(target, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(table)
    else:
        stdout.write(table)
    if summary is not None:
        stdout.write(summary + "\n")

# }}}


# {{{ commands

def _power_catalog(node: Expr, a: float, b: float) -> tuple[Side, float] | None:
    """Match ``(x - a)^beta`` (left) or ``(b - x)^beta`` (right)."""

    def base_side(n: Expr) -> Side | None:
        if isinstance(n, Var) and a == 0.0:
            return Side.Left
        if isinstance(n, BinOp) and n.op == "-":
            if isinstance(n.left, Var) and isinstance(n.right, Num) and n.right.value == a:
                return Side.Left
            if isinstance(n.left, Num) and n.left.value == b and isinstance(n.right, Var):
                return Side.Right
        return None

    def number(n: Expr) -> float | None:
        if isinstance(n, Num):
            return n.value
        if isinstance(n, Neg) and isinstance(n.operand, Num):
            return -n.operand.value
        return None

    side = base_side(node)
    if side is not None:
        return side, 1.0
    if isinstance(node, BinOp) and node.op == "^":
        base, exponent = node.left, node.right
    elif isinstance(node, Call) and node.func == "pow":
        base, exponent = node.args
    else:
        return None
    side, beta = base_side(base), number(exponent)
    if side is None or beta is None or beta < 0:
        return None
    return side, beta


def _exact_deriv(
    node: Expr, order: Order, grid: Grid, side: Side, kind: OperatorKind
) -> np.ndarray | None:
    x = grid.nodes
    if isinstance(node, Num) or (isinstance(node, Neg) and isinstance(node.operand, Num)):
        xi = float(evaluate(node))
        if kind is OperatorKind.Caputo:
            return np.zeros(x.size)
        return np.array(
            [rl_constant_deriv_exact(xi, order, grid.a, grid.b, side, xv) for xv in x]
        )

    match = _power_catalog(node, grid.a, grid.b)
    if match is None or match[0] is not side:
        return None
    _, beta = match
    if beta == 0.0:
        return _exact_deriv(Num(1.0), order, grid, side, kind)
    # f vanishes at the base point, so the Caputo and RL derivatives agree
    if side is Side.Left:
        return np.array([rl_power_deriv_exact(beta, order, grid.a, xv) for xv in x])
    return np.array([rl_power_deriv_exact(beta, order, grid.a, grid.a + grid.b - xv)
                     for xv in x])


def cmd_deriv(cfg: RunConfig, args) -> int:
    grid, order = cfg.grid, cfg.order
    node = parse(args.function, allowed=("x",))
    f = sample_expression(args.function, grid)
    side = Side.Left if args.side == "left" else Side.Right

    if cfg.operator_kind is OperatorKind.Caputo:
        op = caputo_left_deriv_grid if side is Side.Left else caputo_right_deriv_grid
    else:
        op = rl_left_deriv_grid if side is Side.Left else rl_right_deriv_grid
    numeric = op(f, order, cfg.scheme).values

    exact = _exact_deriv(node, order, grid, side, cfg.operator_kind)
    header = ["index", "x", "value", "deriv_numeric"]
    columns = [np.arange(grid.npoints), grid.nodes, f.values, numeric]
    if exact is not None:
        with np.errstate(invalid="ignore"):
            err = np.where(numeric == exact, 0.0, np.abs(numeric - exact))
        header += ["deriv_exact", "abs_error"]
        columns += [exact, err]

    _emit(cfg, args.output, _csv_text(header, zip(*columns)), None, args.stdout)
    return EXIT_OK


def cmd_el_residual(cfg: RunConfig, args) -> int:
    y = candidate_of(cfg)
    p = problem_of(cfg, y)
    res = el_residual(p, y)
    tol = args.tol if args.tol is not None else 10 * cfg.grid.h
    worst = interior_max_abs(res)

    rows = zip(range(cfg.npoints), cfg.grid.nodes, y.values, res.values)
    summary = f"max_abs_residual={fmt(worst)} extremal={fmt(worst <= tol)} tol={fmt(tol)}"
    _emit(cfg, args.output, _csv_text(["index", "x", "y", "residual"], rows), summary, args.stdout)
    return EXIT_OK


def cmd_legendre(cfg: RunConfig, args) -> int:
    y = candidate_of(cfg)
    p = problem_of(cfg, y)
    report = legendre_check(p, y, args.tol)

    rows = zip(range(cfg.npoints), cfg.grid.nodes, report.P.values)
    changes = ",".join(fmt(v) for v in report.sign_change_locations())
    summary = f"verdict={report.verdict.value} sign_changes=[{changes}]"
    _emit(cfg, args.output, _csv_text(["index", "x", "P"], rows), summary, args.stdout)
    return EXIT_OK


def _float_list(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"not a comma-separated list of numbers: {text!r}") from None
    return values


def cmd_lemma_demo(cfg: RunConfig, args) -> int:
    d_list = _float_list(args.d_list)
    if not d_list:
        raise ConfigError("--d-list must name at least one d")
    if any(d <= 0 for d in d_list):
        raise ConfigError("every d in --d-list must be positive")
    grid = cfg.grid

    given = [args.P, args.Q, args.R]
    if any(e is not None for e in given):
        if any(e is None for e in given):
            raise ConfigError("give all of --P, --Q, --R or none")
        P, Q, R = (sample_expression(e, grid) for e in given)
    else:
        y = candidate_of(cfg)
        coeffs = second_variation_coefficients(problem_of(cfg, y), y)
        P, Q, R = coeffs.P, coeffs.Q, coeffs.R

    rows = lemma_negativity_demo(
        P, Q, R, args.c, args.K1, args.K2, args.K3, cfg.alpha, d_list
    )
    table = _csv_text(
        ["d", "form_value", "bound", "corrected_bound"],
        [(r.d, r.form_value, r.bound_value, r.corrected_bound) for r in rows],
    )
    negative = all(r.form_value < 0 for r in rows if r.bound_value < 0)
    _emit(cfg, args.output, table, f"negative_where_bound_negative={fmt(negative)}", args.stdout)
    return EXIT_OK if negative else EXIT_NUMERICAL


def cmd_second_variation(cfg: RunConfig, args) -> int:
    y = candidate_of(cfg)
    p = problem_of(cfg, y)
    if args.bump is not None:
        c, d = args.bump
        eta = eta_tilde(BumpSpec(c, d, cfg.alpha, cfg.grid))
    else:
        eta = sample_expression(args.eta, cfg.grid)
    eps_list = _float_list(args.eps)
    if not eps_list:
        raise ConfigError("--eps must name at least one epsilon")

    value = second_variation(p, second_variation_coefficients(p, y), eta)
    quotients = second_difference_quotients(p, y, eta, eps_list)
    rows = [(e, q, abs(q - value)) for e, q in zip(eps_list, quotients)]
    table = _csv_text(["eps", "quotient", "abs_diff"], rows)
    _emit(cfg, args.output, table, f"second_variation={fmt(value)}", args.stdout)
    return EXIT_OK

# }}}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fraclegendre",
        description="Fractional calculus of variations: operators, Euler-Lagrange "
        "residuals, second variations and the fractional Legendre condition.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log to standard error")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, func, help: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help)
        p.add_argument("--config", type=Path, required=True)
        p.add_argument("--output", type=Path, default=None)
        p.set_defaults(func=func)
        return p

    p = add("deriv", cmd_deriv, "fractional derivative of a function of x")
    p.add_argument("--function", required=True, help="expression in x")
    p.add_argument("--side", choices=("left", "right"), default="left")

    p = add("el-residual", cmd_el_residual, "Euler-Lagrange residual of the candidate")
    p.add_argument("--tol", type=float, default=None, help="extremal tolerance (default 10h)")

    p = add("legendre", cmd_legendre, "Legendre sign condition along the candidate")
    p.add_argument("--tol", type=float, default=None)

    p = add("lemma-demo", cmd_lemma_demo, "bump quadratic form versus support length")
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--d-list", required=True, help="comma-separated support lengths")
    p.add_argument("--K1", type=float, required=True)
    p.add_argument("--K2", type=float, required=True)
    p.add_argument("--K3", type=float, required=True)
    p.add_argument("--P", default=None, help="expression in x (default: from the candidate)")
    p.add_argument("--Q", default=None)
    p.add_argument("--R", default=None)

    p = add("second-variation", cmd_second_variation, "second variation and epsilon sweep")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--bump", type=float, nargs=2, metavar=("C", "D"))
    group.add_argument("--eta", help="variation as an expression in x")
    p.add_argument("--eps", default="0.1,0.05,0.025")
    return parser


def main(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout if stdout is not None else sys.stdout
    stderr = stderr if stderr is not None else sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.stdout = stdout

    if args.verbose:
        logging.basicConfig(level=logging.INFO, stream=stderr, format="%(name)s: %(message)s")

    try:
        cfg = load_config(args.config)
        return args.func(cfg, args)
    except HypothesisError as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_HYPOTHESIS
    except (ParseError, ContractError, DomainError) as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_USAGE
    except (NumericalError, EvalError) as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_NUMERICAL


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
