"""Time-dependent coefficient expressions.

A tiny infix language in the single variable ``t``::

    exp(-2*cos(t)) * (2 - sin(t))^2 / 4

Expressions are parsed into immutable trees that can be evaluated on scalars
or numpy arrays, differentiated exactly, and printed back to text that parses
to an identical tree.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

__all__ = [
    "Expr",
    "Const",
    "Var",
    "Unary",
    "Binary",
    "CoeffSet",
    "ExprError",
    "ExprSyntaxError",
    "DomainError",
    "parse",
    "evaluate",
    "diff",
    "render",
    "as_expr",
    "FUNCTIONS",
    "MAX_NODES",
]

MAX_NODES = 10_000

FUNCTIONS = (
    "sin", "cos", "tan", "sinh", "cosh", "tanh", "sech", "exp", "ln", "abs", "sqrt",
)
_CONSTANTS = {"pi": math.pi, "e": math.e}


class ExprError(ValueError):
    """Base class for expression errors."""


class ExprSyntaxError(ExprError):
    """Malformed expression text. ``offset`` is the byte offset of the problem."""

    def __init__(self, message: str, offset: int, text: str = ""):
        self.offset = offset
        self.text = text
        super().__init__(f"{message} (at offset {offset})")


class DomainError(ExprError, ArithmeticError):
    """An operation was evaluated outside its domain."""

    def __init__(self, node: "Expr", t, message: str):
        self.node = node
        self.t = t
        super().__init__(f"{message} in '{render(node)}' at t={_fmt_t(t)}")


def _fmt_t(t) -> str:
    arr = np.asarray(t)
    if arr.ndim == 0:
        return repr(float(arr))
    return f"array(shape={arr.shape})"


# ---------------------------------------------------------------------------
# tree nodes


class Expr:
    """Base class of expression nodes. Nodes are frozen and hashable."""

    __slots__ = ()

    def __call__(self, t):
        return evaluate(self, t)

    def eval(self, t):
        return evaluate(self, t)

    def diff(self) -> "Expr":
        return diff(self)

    def __str__(self) -> str:
        return render(self)

    @property
    def is_zero(self) -> bool:
        return isinstance(self, Const) and self.value == 0.0

    def node_count(self) -> int:
        return _node_count(self)

    # arithmetic sugar, used when building derivative trees
    def __add__(self, other): return _add(self, as_expr(other))
    def __radd__(self, other): return _add(as_expr(other), self)
    def __sub__(self, other): return _sub(self, as_expr(other))
    def __rsub__(self, other): return _sub(as_expr(other), self)
    def __mul__(self, other): return _mul(self, as_expr(other))
    def __rmul__(self, other): return _mul(as_expr(other), self)
    def __truediv__(self, other): return _div(self, as_expr(other))
    def __rtruediv__(self, other): return _div(as_expr(other), self)
    def __pow__(self, other): return _pow(self, as_expr(other))
    def __neg__(self): return _neg(self)


@dataclass(frozen=True, eq=True)
class Const(Expr):
    value: float

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))
        if not math.isfinite(self.value):
            raise ExprError(f"non-finite constant {self.value!r}")


@dataclass(frozen=True, eq=True)
class Var(Expr):
    name: str = "t"


@dataclass(frozen=True, eq=True)
class Unary(Expr):
    op: str  # "neg" or a name from FUNCTIONS
    arg: Expr


@dataclass(frozen=True, eq=True)
class Binary(Expr):
    op: str  # one of + - * / ^
    left: Expr
    right: Expr


T = Var()
ZERO = Const(0.0)
ONE = Const(1.0)


def as_expr(value) -> Expr:
    """Coerce numbers and strings to expressions."""
    if isinstance(value, Expr):
        return value
    if isinstance(value, str):
        return parse(value)
    if isinstance(value, (int, float, np.floating, np.integer)):
        return Const(float(value))
    raise TypeError(f"cannot convert {type(value).__name__} to an expression")


def _node_count(e: Expr) -> int:
    count = 0
    stack = [e]
    while stack:
        node = stack.pop()
        count += 1
        if isinstance(node, Unary):
            stack.append(node.arg)
        elif isinstance(node, Binary):
            stack.append(node.left)
            stack.append(node.right)
    return count


# ---------------------------------------------------------------------------
# constructors with constant folding


def _fold(op: str, *args: Expr) -> Expr | None:
    if all(isinstance(a, Const) for a in args):
        node = Unary(op, args[0]) if len(args) == 1 else Binary(op, args[0], args[1])
        try:
            value = evaluate(node, 0.0)
        except DomainError:
            return None
        return Const(value)
    return None


def _neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Unary) and a.op == "neg":
        return a.arg
    return Unary("neg", a)


def _add(a: Expr, b: Expr) -> Expr:
    if a.is_zero:
        return b
    if b.is_zero:
        return a
    return _fold("+", a, b) or Binary("+", a, b)


def _sub(a: Expr, b: Expr) -> Expr:
    if b.is_zero:
        return a
    if a.is_zero:
        return _neg(b)
    return _fold("-", a, b) or Binary("-", a, b)


def _mul(a: Expr, b: Expr) -> Expr:
    # 0*x folds to 0; x keeps no domain of its own in a derivative tree
    if a.is_zero or b.is_zero:
        return ZERO
    if a == ONE:
        return b
    if b == ONE:
        return a
    return _fold("*", a, b) or Binary("*", a, b)


def _div(a: Expr, b: Expr) -> Expr:
    if b == ONE:
        return a
    return _fold("/", a, b) or Binary("/", a, b)


def _pow(a: Expr, b: Expr) -> Expr:
    if b == ONE:
        return a
    return _fold("^", a, b) or Binary("^", a, b)


def _fn(name: str, a: Expr) -> Expr:
    return _fold(name, a) or Unary(name, a)


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^(),]))"
)


@dataclass
class _Tok:
    kind: str
    text: str
    offset: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        start = m.start(kind)
        toks.append(_Tok(kind, m.group(kind), start))
        pos = m.end()
    toks.append(_Tok("end", "", n))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.nodes = 0

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def take(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> _Tok:
        tok = self.take()
        if tok.text != text or tok.kind == "end":
            found = "end of input" if tok.kind == "end" else repr(tok.text)
            raise ExprSyntaxError(f"expected {text!r}, found {found}", tok.offset, self.text)
        return tok

    def count(self, node: Expr) -> Expr:
        self.nodes += 1
        if self.nodes > MAX_NODES:
            raise ExprSyntaxError(f"expression exceeds {MAX_NODES} nodes", self.peek().offset, self.text)
        return node

    # expr := term (('+'|'-') term)*
    def expr(self) -> Expr:
        left = self.term()
        while self.peek().text in ("+", "-") and self.peek().kind == "op":
            op = self.take().text
            left = self.count(Binary(op, left, self.term()))
        return left

    # term := unary (('*'|'/') unary)*
    def term(self) -> Expr:
        left = self.unary()
        while self.peek().text in ("*", "/") and self.peek().kind == "op":
            op = self.take().text
            left = self.count(Binary(op, left, self.unary()))
        return left

    # unary := ('-'|'+') unary | power
    def unary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            self.take()
            arg = self.unary()
            if isinstance(arg, Const):
                return Const(-arg.value)
            return self.count(Unary("neg", arg))
        if tok.kind == "op" and tok.text == "+":
            self.take()
            return self.unary()
        return self.power()

    # power := atom ('^' unary)?     (right associative, binds tighter than neg)
    def power(self) -> Expr:
        base = self.atom()
        if self.peek().kind == "op" and self.peek().text == "^":
            self.take()
            return self.count(Binary("^", base, self.unary()))
        return base

    def atom(self) -> Expr:
        tok = self.take()
        if tok.kind == "num":
            return self.count(Const(float(tok.text)))
        if tok.kind == "name":
            name = tok.text
            if self.peek().text == "(" and self.peek().kind == "op":
                if name not in FUNCTIONS:
                    raise ExprSyntaxError(f"unknown function {name!r}", tok.offset, self.text)
                self.take()
                args = [self.expr()]
                while self.peek().text == "," and self.peek().kind == "op":
                    self.take()
                    args.append(self.expr())
                self.expect(")")
                if len(args) != 1:
                    raise ExprSyntaxError(
                        f"{name}() takes 1 argument, got {len(args)}", tok.offset, self.text
                    )
                return self.count(Unary(name, args[0]))
            if name == "t":
                return self.count(Var())
            if name in _CONSTANTS:
                return self.count(Const(_CONSTANTS[name]))
            if name in FUNCTIONS:
                raise ExprSyntaxError(f"function {name!r} needs an argument list", tok.offset, self.text)
            raise ExprSyntaxError(f"unknown identifier {name!r}", tok.offset, self.text)
        if tok.kind == "op" and tok.text == "(":
            inner = self.expr()
            self.expect(")")
            return inner
        found = "end of input" if tok.kind == "end" else repr(tok.text)
        raise ExprSyntaxError(f"unexpected {found}", tok.offset, self.text)


def parse(text: str) -> Expr:
    """Parse infix text into an expression tree.

    Precedence, loosest first: ``+ -``, ``* /``, unary minus, ``^``. Binary
    ``+ - * /`` associate to the left; ``^`` associates to the right, so
    ``-t^2`` is ``-(t^2)`` and ``2^3^2`` is ``2^9``. Functions are applied as
    ``name(arg)``; ``pi`` and ``e`` are predefined constants.
    """
    if not isinstance(text, str):
        raise TypeError("expression text must be a string")
    if not text.strip():
        raise ExprSyntaxError("empty expression", 0, text)
    if not text.isascii():
        bad = next(i for i, ch in enumerate(text) if not ch.isascii())
        raise ExprSyntaxError("non-ASCII character", len(text[:bad].encode()), text)
    p = _Parser(text)
    e = p.expr()
    tok = p.peek()
    if tok.kind != "end":
        raise ExprSyntaxError(f"unexpected {tok.text!r}", tok.offset, text)
    return e


# ---------------------------------------------------------------------------
# evaluation


def _sech(x):
    return 1.0 / np.cosh(x)


_UNARY_IMPL = {
    "neg": np.negative,
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "sinh": np.sinh,
    "cosh": np.cosh,
    "tanh": np.tanh,
    "sech": _sech,
    "exp": np.exp,
    "ln": np.log,
    "abs": np.abs,
    "sqrt": np.sqrt,
}


def _check(node: Expr, t, value, message: str):
    if not np.all(np.isfinite(value)):
        raise DomainError(node, t, message)
    return value


def _eval(node: Expr, t):
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return t
    if isinstance(node, Unary):
        x = _eval(node.arg, t)
        if node.op == "ln" and np.any(np.asarray(x) <= 0.0):
            raise DomainError(node, t, "logarithm of a non-positive value")
        if node.op == "sqrt" and np.any(np.asarray(x) < 0.0):
            raise DomainError(node, t, "square root of a negative value")
        return _check(node, t, _UNARY_IMPL[node.op](x), f"{node.op} is not finite")
    if isinstance(node, Binary):
        x = _eval(node.left, t)
        y = _eval(node.right, t)
        op = node.op
        if op == "+":
            r = np.add(x, y)
        elif op == "-":
            r = np.subtract(x, y)
        elif op == "*":
            r = np.multiply(x, y)
        elif op == "/":
            if np.any(np.asarray(y) == 0.0):
                raise DomainError(node, t, "division by zero")
            r = np.divide(x, y)
        else:
            xa, ya = np.asarray(x), np.asarray(y)
            bad = (xa < 0.0) & (ya != np.round(ya))
            if np.any(bad):
                raise DomainError(node, t, "negative base with non-integer exponent")
            if np.any((xa == 0.0) & (ya < 0.0)):
                raise DomainError(node, t, "zero raised to a negative power")
            r = np.power(x, y)
        return _check(node, t, r, "result is not finite")
    raise TypeError(f"not an expression node: {node!r}")


def evaluate(e: Expr, t):
    """Evaluate ``e`` at ``t`` (scalar or array).

    Scalars give a Python float, arrays an ndarray of the same shape.
    Domain violations raise :class:`DomainError`; NaN or inf never leak out.
    """
    arr = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ExprError("t must be finite")
    with np.errstate(all="ignore"):
        value = _eval(e, arr)
    if arr.ndim == 0:
        return float(value)
    return np.broadcast_to(np.asarray(value, dtype=float), arr.shape).copy()


# ---------------------------------------------------------------------------
# differentiation


def diff(e: Expr) -> Expr:
    """Exact derivative of ``e`` with respect to ``t``."""
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE
    if isinstance(e, Unary):
        u = e.arg
        du = diff(u)
        if du.is_zero:
            return ZERO
        op = e.op
        if op == "neg":
            return _neg(du)
        if op == "sin":
            outer = _fn("cos", u)
        elif op == "cos":
            outer = _neg(_fn("sin", u))
        elif op == "tan":
            outer = _div(ONE, _pow(_fn("cos", u), Const(2.0)))
        elif op == "sinh":
            outer = _fn("cosh", u)
        elif op == "cosh":
            outer = _fn("sinh", u)
        elif op == "tanh":
            outer = _pow(_fn("sech", u), Const(2.0))
        elif op == "sech":
            outer = _neg(_mul(_fn("sech", u), _fn("tanh", u)))
        elif op == "exp":
            outer = e
        elif op == "ln":
            return _div(du, u)
        elif op == "abs":
            # sign(u); undefined (division by zero) where u = 0
            outer = _div(u, _fn("abs", u))
        elif op == "sqrt":
            return _div(du, _mul(Const(2.0), e))
        else:  # pragma: no cover
            raise ExprError(f"unknown function {op!r}")
        return _mul(outer, du)
    if isinstance(e, Binary):
        a, b = e.left, e.right
        da, db = diff(a), diff(b)
        op = e.op
        if op == "+":
            return _add(da, db)
        if op == "-":
            return _sub(da, db)
        if op == "*":
            return _add(_mul(da, b), _mul(a, db))
        if op == "/":
            if db.is_zero:
                return _div(da, b)
            return _div(_sub(_mul(da, b), _mul(a, db)), _pow(b, Const(2.0)))
        # power
        if db.is_zero:
            if da.is_zero:
                return ZERO
            # d/dt a^n = n a^(n-1) a'
            n = b
            return _mul(_mul(n, _pow(a, _sub(n, ONE))), da)
        # general case a^b = exp(b ln a)
        return _mul(e, _add(_mul(db, _fn("ln", a)), _div(_mul(b, da), a)))
    raise TypeError(f"not an expression node: {e!r}")


# ---------------------------------------------------------------------------
# printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def _const_text(value: float) -> str:
    text = repr(float(value))
    if "inf" in text or "nan" in text:  # pragma: no cover - Const rejects these
        raise ExprError("cannot render non-finite constant")
    return text


def _render(e: Expr) -> tuple[str, int]:
    """Return (text, precedence of the outermost operator)."""
    if isinstance(e, Const):
        if e.value < 0 or (e.value == 0 and math.copysign(1.0, e.value) < 0):
            return "(" + _const_text(e.value) + ")", 5
        return _const_text(e.value), 5
    if isinstance(e, Var):
        return "t", 5
    if isinstance(e, Unary):
        inner, _ = _render(e.arg)
        if e.op == "neg":
            arg_text, arg_prec = _render(e.arg)
            if arg_prec < _PREC["neg"]:
                arg_text = f"({arg_text})"
            return "-" + arg_text, _PREC["neg"]
        return f"{e.op}({inner})", 5
    if isinstance(e, Binary):
        prec = _PREC[e.op]
        lt, lp = _render(e.left)
        rt, rp = _render(e.right)
        if e.op == "^":
            # right associative; base needs parens unless atomic
            if lp <= prec:
                lt = f"({lt})"
            if rp < _PREC["neg"]:
                rt = f"({rt})"
            return f"{lt}^{rt}", prec
        if lp < prec:
            lt = f"({lt})"
        # left associative: equal precedence on the right needs parens
        if rp <= prec:
            rt = f"({rt})"
        return f"{lt} {e.op} {rt}", prec
    raise TypeError(f"not an expression node: {e!r}")


def render(e: Expr) -> str:
    """Canonical text for ``e``; ``parse(render(e)) == e``."""
    return _render(e)[0]


# ---------------------------------------------------------------------------
# coefficient sets


def _default_zero() -> Expr:
    return ZERO


@dataclass(frozen=True)
class CoeffSet:
    """The six time-dependent coefficients of the variable-coefficient operator

    ``a psi_xx - b x^2 psi + c x psi_x + d psi + f x psi - g psi_x``.

    ``a`` is mandatory; the rest default to zero. Pass ``interval`` to have
    ``a`` checked for zeros on a sample grid at construction.
    """

    a: Expr
    b: Expr = field(default_factory=_default_zero)
    c: Expr = field(default_factory=_default_zero)
    d: Expr = field(default_factory=_default_zero)
    f: Expr = field(default_factory=_default_zero)
    g: Expr = field(default_factory=_default_zero)
    interval: tuple[float, float] | None = None
    samples: int = 2001

    NAMES = ("a", "b", "c", "d", "f", "g")

    def __post_init__(self):
        for name in self.NAMES:
            object.__setattr__(self, name, as_expr(getattr(self, name)))
        if self.interval is not None:
            lo, hi = map(float, self.interval)
            object.__setattr__(self, "interval", (lo, hi))
            self.check_a(lo, hi, self.samples)

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, object], interval=None) -> "CoeffSet":
        unknown = set(mapping) - set(cls.NAMES)
        if unknown:
            raise ExprError(f"unknown coefficient(s): {', '.join(sorted(unknown))}")
        if "a" not in mapping:
            raise ExprError("coefficient 'a' is required")
        return cls(**{k: as_expr(v) for k, v in mapping.items()}, interval=interval)

    def check_a(self, lo: float, hi: float, samples: int = 2001) -> None:
        """Raise if a(t) vanishes or changes sign on [lo, hi] (sampled)."""
        ts = np.linspace(lo, hi, max(int(samples), 2))
        values = evaluate(self.a, ts)
        if np.any(values == 0.0) or np.any(np.sign(values) != np.sign(values[0])):
            idx = int(np.argmax((values == 0.0) | (np.sign(values) != np.sign(values[0]))))
            raise ExprError(f"diffusion coefficient a(t) vanishes near t={ts[idx]:.6g}")

    def derivative(self, name: str) -> Expr:
        return _derivative_cache(getattr(self, name))

    def to_strings(self) -> dict[str, str]:
        return {name: render(getattr(self, name)) for name in self.NAMES}

    def scaled(self, name: str, factor: float) -> "CoeffSet":
        values = {n: getattr(self, n) for n in self.NAMES}
        values[name] = _mul(Const(factor), values[name])
        return CoeffSet(**values)

    def is_zero(self, name: str) -> bool:
        return getattr(self, name).is_zero


_DIFF_CACHE: dict[Expr, Expr] = {}


def _derivative_cache(e: Expr) -> Expr:
    d = _DIFF_CACHE.get(e)
    if d is None:
        d = diff(e)
        _DIFF_CACHE[e] = d
    return d
