"""A small expression language for Lagrangians ``L(x, y, Dy)``.

Grammar (whitespace is insignificant)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := primary ('^' unary)?          # right-associative
    primary := NUMBER | NAME | NAME '(' expr (',' expr)* ')' | '(' expr ')'

so ``-x^2`` is ``-(x^2)`` and ``2^-1`` is ``2^(-1)``. Variables are ``x``,
``y`` and ``Dy``; functions are ``sqrt sin cos exp log abs`` (one argument)
and ``pow`` (two arguments, sugar for ``^``).

Evaluation is generic over the value type: plain floats, numpy arrays, and
:class:`Jet2` second-order jets all go through the same tree walk.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Any, Iterable, Union

import numpy as np

from .errors import DomainError, FracError

__all__ = [
    "ParseError",
    "EvalError",
    "Num",
    "Var",
    "Neg",
    "BinOp",
    "Call",
    "Expr",
    "Jet2",
    "parse",
    "unparse",
    "variables",
    "evaluate",
    "eval_jet",
    "VARIABLES",
    "FUNCTIONS",
]

VARIABLES = ("x", "y", "Dy")
FUNCTIONS = {"sqrt": 1, "sin": 1, "cos": 1, "exp": 1, "log": 1, "abs": 1, "pow": 2}


class ParseError(FracError, ValueError):
    """Malformed expression source; ``offset`` is the byte offset of the problem."""

    def __init__(self, message: str, offset: int, source: str = "") -> None:
        self.message = message
        self.offset = offset
        self.source = source
        super().__init__(f"{message} at byte offset {offset}")


class EvalError(FracError, ArithmeticError):
    """An expression is undefined at the requested point."""

    def __init__(self, message: str, subexpr: str = "") -> None:
        self.subexpr = subexpr
        super().__init__(f"{message} in '{subexpr}'" if subexpr else message)


# {{{ ast

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple["Expr", ...]


Expr = Union[Num, Var, Neg, BinOp, Call]


def unparse(node: Expr) -> str:
    """Fully parenthesized source that re-parses to the same tree."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{unparse(node.operand)})"
    if isinstance(node, BinOp):
        return f"({unparse(node.left)} {node.op} {unparse(node.right)})"
    if isinstance(node, Call):
        return f"{node.func}({', '.join(unparse(a) for a in node.args)})"
    raise TypeError(f"not an expression node: {node!r}")


def variables(node: Expr) -> set[str]:
    """Names of the variables occurring in *node*."""
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Neg):
        return variables(node.operand)
    if isinstance(node, BinOp):
        return variables(node.left) | variables(node.right)
    if isinstance(node, Call):
        return set().union(*(variables(a) for a in node.args))
    return set()

# }}}


# {{{ parser

_TOKEN = re.compile(
    r"""\s*(?:
        (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
      | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
      | (?P<op>[-+*/^(),])
    )""",
    re.VERBOSE,
)


@dataclass
class _Token:
    kind: str
    text: str
    offset: int


class _Parser:
    def __init__(self, src: str, allowed: Iterable[str]) -> None:
        self.src = src
        self.allowed = tuple(allowed)
        self.tokens = self._tokenize(src)
        self.pos = 0

    def _byte_offset(self, i: int) -> int:
        return len(self.src[:i].encode("utf-8"))

    def _error(self, message: str, char_offset: int) -> ParseError:
        return ParseError(message, self._byte_offset(char_offset), self.src)

    def _tokenize(self, src: str) -> list[_Token]:
        tokens = []
        i = 0
        while True:
            while i < len(src) and src[i].isspace():
                i += 1
            if i == len(src):
                break
            m = _TOKEN.match(src, i)
            if m is None or m.end() == i:
                raise self._error(f"unexpected character {src[i]!r}", i)
            kind = m.lastgroup
            tokens.append(_Token(kind, m.group(kind), m.start(kind)))
            i = m.end()
        tokens.append(_Token("end", "", len(src)))
        return tokens

    @property
    def tok(self) -> _Token:
        return self.tokens[self.pos]

    def _accept(self, text: str) -> bool:
        if self.tok.kind == "op" and self.tok.text == text:
            self.pos += 1
            return True
        return False

    def _expect(self, text: str) -> None:
        if not self._accept(text):
            found = self.tok.text or "end of input"
            raise self._error(f"expected {text!r} but found {found!r}", self.tok.offset)

    def parse(self) -> Expr:
        node = self.expr()
        if self.tok.kind != "end":
            if self.tok.text == ")":
                raise self._error("unbalanced ')'", self.tok.offset)
            raise self._error(f"unexpected trailing token {self.tok.text!r}", self.tok.offset)
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.tok.text
            self.pos += 1
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.tok.text
            self.pos += 1
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        if self._accept("-"):
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.primary()
        if self._accept("^"):
            return BinOp("^", base, self.unary())
        return base

    def primary(self) -> Expr:
        tok = self.tok
        if tok.kind == "num":
            self.pos += 1
            return Num(float(tok.text))
        if tok.kind == "name":
            self.pos += 1
            if tok.text in FUNCTIONS:
                return self._call(tok)
            if tok.text in self.allowed:
                return Var(tok.text)
            raise self._error(f"unknown identifier {tok.text!r}", tok.offset)
        if self._accept("("):
            node = self.expr()
            if self.tok.kind == "end":
                raise self._error("unbalanced '(': missing ')'", self.tok.offset)
            self._expect(")")
            return node
        if tok.kind == "end":
            raise self._error("unexpected end of input", tok.offset)
        raise self._error(f"unexpected token {tok.text!r}", tok.offset)

    def _call(self, name: _Token) -> Expr:
        if not (self.tok.kind == "op" and self.tok.text == "("):
            raise self._error(f"function {name.text!r} must be called", name.offset)
        self.pos += 1
        args = [self.expr()]
        while self._accept(","):
            args.append(self.expr())
        if self.tok.kind == "end":
            raise self._error("unbalanced '(': missing ')'", self.tok.offset)
        self._expect(")")

        arity = FUNCTIONS[name.text]
        if len(args) != arity:
            raise self._error(
                f"{name.text}() takes {arity} argument(s), got {len(args)}", name.offset
            )
        return Call(name.text, tuple(args))


def parse(src: str, allowed: Iterable[str] = VARIABLES) -> Expr:
    """Parse *src* into an expression tree.

    *allowed* restricts the variable names, e.g. ``("x",)`` for candidate
    functions of ``x`` alone.
    """
    if not isinstance(src, str) or not src.strip():
        raise ParseError("empty expression", 0, src if isinstance(src, str) else "")
    return _Parser(src, allowed).parse()

# }}}


# {{{ second-order jets

def _is_plain(v: Any) -> bool:
    return isinstance(v, (int, float, np.ndarray, np.floating, np.integer))


class Jet2:
    """Second-order Taylor jet in the two active variables ``y`` and ``Dy``.

    Fields may be floats or equally-shaped numpy arrays; the latter evaluate a
    whole grid in one pass. The mixed partial is stored once, so its symmetry
    is structural.
    """

    __slots__ = ("value", "d_y", "d_Dy", "d_yy", "d_yDy", "d_DyDy")
    # make ndarray (op) Jet2 defer to the reflected Jet2 operators
    __array_ufunc__ = None

    def __init__(self, value, d_y=0.0, d_Dy=0.0, d_yy=0.0, d_yDy=0.0, d_DyDy=0.0):
        self.value = value
        self.d_y = d_y
        self.d_Dy = d_Dy
        self.d_yy = d_yy
        self.d_yDy = d_yDy
        self.d_DyDy = d_DyDy

    def __repr__(self) -> str:
        return (
            f"Jet2(value={self.value!r}, d_y={self.d_y!r}, d_Dy={self.d_Dy!r}, "
            f"d_yy={self.d_yy!r}, d_yDy={self.d_yDy!r}, d_DyDy={self.d_DyDy!r})"
        )

    @classmethod
    def variable(cls, value, wrt: str) -> Jet2:
        if wrt == "y":
            return cls(value, d_y=1.0)
        if wrt == "Dy":
            return cls(value, d_Dy=1.0)
        raise ValueError(f"jets are active only in y and Dy, not {wrt!r}")

    def _first(self) -> tuple:
        return (self.d_y, self.d_Dy)

    def _has_derivatives(self) -> bool:
        return any(np.any(np.asarray(d) != 0) for d in
                   (self.d_y, self.d_Dy, self.d_yy, self.d_yDy, self.d_DyDy))

    def _chain(self, f0, f1, f2) -> Jet2:
        # phi(u) with phi, phi', phi'' evaluated at u.value
        a, b = self.d_y, self.d_Dy
        return Jet2(
            f0,
            f1 * a,
            f1 * b,
            f2 * a * a + f1 * self.d_yy,
            f2 * a * b + f1 * self.d_yDy,
            f2 * b * b + f1 * self.d_DyDy,
        )

    @staticmethod
    def _lift(v) -> Jet2:
        return v if isinstance(v, Jet2) else Jet2(v)

    def __neg__(self) -> Jet2:
        return Jet2(-self.value, -self.d_y, -self.d_Dy, -self.d_yy, -self.d_yDy, -self.d_DyDy)

    def __add__(self, other) -> Jet2:
        o = Jet2._lift(other)
        return Jet2(
            self.value + o.value,
            self.d_y + o.d_y,
            self.d_Dy + o.d_Dy,
            self.d_yy + o.d_yy,
            self.d_yDy + o.d_yDy,
            self.d_DyDy + o.d_DyDy,
        )

    __radd__ = __add__

    def __sub__(self, other) -> Jet2:
        return self + (-Jet2._lift(other))

    def __rsub__(self, other) -> Jet2:
        return Jet2._lift(other) + (-self)

    def __mul__(self, other) -> Jet2:
        o = Jet2._lift(other)
        u, v = self, o
        return Jet2(
            u.value * v.value,
            u.d_y * v.value + u.value * v.d_y,
            u.d_Dy * v.value + u.value * v.d_Dy,
            u.d_yy * v.value + 2 * u.d_y * v.d_y + u.value * v.d_yy,
            u.d_yDy * v.value + u.d_y * v.d_Dy + u.d_Dy * v.d_y + u.value * v.d_yDy,
            u.d_DyDy * v.value + 2 * u.d_Dy * v.d_Dy + u.value * v.d_DyDy,
        )

    __rmul__ = __mul__

    def reciprocal(self) -> Jet2:
        if np.any(np.asarray(self.value) == 0):
            raise DomainError("division by zero")
        r = 1.0 / self.value
        return self._chain(r, -r * r, 2 * r * r * r)

    def __truediv__(self, other) -> Jet2:
        return self * Jet2._lift(other).reciprocal()

    def __rtruediv__(self, other) -> Jet2:
        return Jet2._lift(other) * self.reciprocal()

    def __pow__(self, other) -> Jet2:
        if isinstance(other, Jet2):
            if other._has_derivatives():
                if np.any(np.asarray(self.value) <= 0):
                    raise DomainError("variable exponent requires a positive base")
                return (other * self.log()).exp()
            other = other.value

        p = np.asarray(other, dtype=float)
        base = np.asarray(self.value, dtype=float)
        if np.any((base == 0) & (p < 0)):
            raise DomainError("zero raised to a negative power")
        if not np.all(p == np.floor(p)):
            if np.any(base < 0):
                raise DomainError("non-integer power of a negative base")
            if np.any((base == 0) & (p < 2)) and self._has_derivatives():
                raise DomainError("power not twice differentiable at a zero base")
        if np.all(p == 0):
            return Jet2(np.ones_like(base) if base.ndim else 1.0)
        if np.all(p == 1):
            return self
        f0 = self.value**other
        f1 = other * self.value ** (other - 1)
        f2 = other * (other - 1) * self.value ** (other - 2)
        return self._chain(f0, f1, f2)

    def __rpow__(self, other) -> Jet2:
        return Jet2._lift(other) ** self

    def sqrt(self) -> Jet2:
        if np.any(np.asarray(self.value) < 0):
            raise DomainError("square root of a negative number")
        if np.any(np.asarray(self.value) == 0) and self._has_derivatives():
            raise DomainError("square root not differentiable at zero")
        s = np.sqrt(self.value)
        return self._chain(s, 0.5 / s, -0.25 / (s * self.value))

    def exp(self) -> Jet2:
        e = np.exp(self.value)
        return self._chain(e, e, e)

    def log(self) -> Jet2:
        if np.any(np.asarray(self.value) <= 0):
            raise DomainError("logarithm of a non-positive number")
        r = 1.0 / self.value
        return self._chain(np.log(self.value), r, -r * r)

    def sin(self) -> Jet2:
        s, c = np.sin(self.value), np.cos(self.value)
        return self._chain(s, c, -s)

    def cos(self) -> Jet2:
        s, c = np.sin(self.value), np.cos(self.value)
        return self._chain(c, -s, -c)

    def abs(self) -> Jet2:
        if np.any(np.asarray(self.value) == 0) and self._has_derivatives():
            raise DomainError("abs not differentiable at zero")
        return self._chain(np.abs(self.value), np.sign(self.value), 0.0)

# }}}


# {{{ evaluation

def _plain_pow(base, p):
    # a zero base is accepted for positive exponents, e.g. x^0.5 at x = 0
    b, e = np.asarray(base, dtype=float), np.asarray(p, dtype=float)
    if np.any((b < 0) & (e != np.floor(e))):
        raise DomainError("non-integer power of a negative base")
    if np.any((b == 0) & (e < 0)):
        raise DomainError("zero raised to a negative power")
    return np.power(b, e) if (b.ndim or e.ndim) else float(b**e)


def _plain_call(name: str, v):
    arr = np.asarray(v, dtype=float)
    if name == "sqrt":
        if np.any(arr < 0):
            raise DomainError("square root of a negative number")
        r = np.sqrt(arr)
    elif name == "log":
        if np.any(arr <= 0):
            raise DomainError("logarithm of a non-positive number")
        r = np.log(arr)
    elif name == "exp":
        r = np.exp(arr)
    elif name == "sin":
        r = np.sin(arr)
    elif name == "cos":
        r = np.cos(arr)
    elif name == "abs":
        r = np.abs(arr)
    else:
        raise ValueError(f"unknown function {name!r}")
    return r if arr.ndim else float(r)


def _div(left, right):
    if _is_plain(right) and np.any(np.asarray(right) == 0):
        raise DomainError("division by zero")
    return left / right


def _eval(node: Expr, env: dict[str, Any]):
    try:
        if isinstance(node, Num):
            return node.value
        if isinstance(node, Var):
            return env[node.name]
        if isinstance(node, Neg):
            return -_eval(node.operand, env)
        if isinstance(node, BinOp):
            left = _eval(node.left, env)
            right = _eval(node.right, env)
            if node.op == "+":
                return left + right
            if node.op == "-":
                return left - right
            if node.op == "*":
                return left * right
            if node.op == "/":
                return _div(left, right)
            if _is_plain(left) and _is_plain(right):
                return _plain_pow(left, right)
            return left**right
        if isinstance(node, Call):
            args = [_eval(a, env) for a in node.args]
            if node.func == "pow":
                base, p = args
                if _is_plain(base) and _is_plain(p):
                    return _plain_pow(base, p)
                return base**p
            (arg,) = args
            if _is_plain(arg):
                return _plain_call(node.func, arg)
            return getattr(arg, node.func)()
    except EvalError:
        raise
    except (DomainError, ZeroDivisionError, OverflowError, ValueError) as exc:
        raise EvalError(str(exc), unparse(node)) from exc
    raise TypeError(f"not an expression node: {node!r}")


def evaluate(node: Expr, **env):
    """Evaluate *node* with variables bound from keyword arguments.

    Values may be floats, numpy arrays or any type implementing the
    arithmetic operators plus ``sqrt sin cos exp log abs`` methods.
    """
    missing = variables(node) - env.keys()
    if missing:
        raise EvalError(f"unbound variable(s) {sorted(missing)}")
    with np.errstate(all="ignore"):
        return _eval(node, env)


def eval_jet(node: Expr, x, y, Dy) -> Jet2:
    """Value and the five partials in ``(y, Dy)`` of *node* at a point.

    *x*, *y*, *Dy* may be scalars or equal-length arrays; the result fields
    follow. Partials are exact to rounding (forward-mode AD).
    """
    jet = evaluate(node, x=x, y=Jet2.variable(y, "y"), Dy=Jet2.variable(Dy, "Dy"))
    jet = Jet2._lift(jet)
    shape = np.broadcast(np.asarray(x), np.asarray(y), np.asarray(Dy)).shape
    fields = []
    for name in Jet2.__slots__:
        v = np.broadcast_to(np.asarray(getattr(jet, name), dtype=float), shape)
        fields.append(float(v) if not shape else np.array(v))
    return Jet2(*fields)

# }}}
