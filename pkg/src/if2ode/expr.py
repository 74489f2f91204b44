"""Single-variable expression language for ODE coefficients.

Expressions are immutable trees built from :class:`Constant`, :class:`Variable`,
the arithmetic nodes and :class:`Func`.  They are parsed from text with
:func:`parse`, evaluated with complex semantics by :func:`evaluate` (scalars or
numpy arrays) and differentiated symbolically by :func:`differentiate`.

Grammar::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := '-' factor | base ('^' factor)?
    base   := NUMBER | 'x' | IDENT '(' expr ')' | '(' expr ')'

There is no implicit multiplication: ``3x`` is rejected.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from numbers import Number

import numpy as np

from .errors import DomainError, ParseError

__all__ = [
    "Expr", "Constant", "Variable", "Neg", "Add", "Sub", "Mul", "Div", "Pow", "Func",
    "FUNCTIONS", "X", "parse", "evaluate", "as_function", "differentiate", "simplify",
    "detect_constant", "chebyshev_points", "is_constant_tree", "to_string",
]

FUNCTIONS = ("exp", "ln", "sin", "cos", "tan", "sinh", "cosh", "tanh", "sqrt", "abs")


# ---------------------------------------------------------------------------
# nodes
# ---------------------------------------------------------------------------

class Expr:
    """Base class of all expression nodes."""

    __slots__ = ()

    def __str__(self) -> str:
        return to_string(self)

    def __call__(self, x):
        return evaluate(self, x)

    def __add__(self, other):
        return Add(self, _coerce(other))

    def __radd__(self, other):
        return Add(_coerce(other), self)

    def __sub__(self, other):
        return Sub(self, _coerce(other))

    def __rsub__(self, other):
        return Sub(_coerce(other), self)

    def __mul__(self, other):
        return Mul(self, _coerce(other))

    def __rmul__(self, other):
        return Mul(_coerce(other), self)

    def __truediv__(self, other):
        return Div(self, _coerce(other))

    def __rtruediv__(self, other):
        return Div(_coerce(other), self)

    def __pow__(self, other):
        return Pow(self, _coerce(other))

    def __neg__(self):
        return Neg(self)


def _coerce(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, Number) and not isinstance(value, complex):
        return Constant(float(value))
    raise TypeError(f"cannot use {value!r} as an expression")


@dataclass(frozen=True, repr=False)
class Constant(Expr):
    value: float

    def __repr__(self):
        return f"Constant({self.value!r})"


@dataclass(frozen=True, repr=False)
class Variable(Expr):
    def __repr__(self):
        return "Variable()"


@dataclass(frozen=True, repr=False)
class Neg(Expr):
    arg: Expr

    def __repr__(self):
        return f"Neg({self.arg!r})"


@dataclass(frozen=True, repr=False)
class _Binary(Expr):
    left: Expr
    right: Expr

    def __repr__(self):
        return f"{type(self).__name__}({self.left!r}, {self.right!r})"


class Add(_Binary):
    pass


class Sub(_Binary):
    pass


class Mul(_Binary):
    pass


class Div(_Binary):
    pass


class Pow(_Binary):
    pass


@dataclass(frozen=True, repr=False)
class Func(Expr):
    name: str
    arg: Expr

    def __post_init__(self):
        if self.name not in FUNCTIONS:
            raise ValueError(f"unknown function {self.name!r}")

    def __repr__(self):
        return f"Func({self.name!r}, {self.arg!r})"


X = Variable()
ZERO = Constant(0.0)
ONE = Constant(1.0)


def is_constant_tree(e: Expr) -> bool:
    """True when ``e`` contains no occurrence of the variable."""
    if isinstance(e, Constant):
        return True
    if isinstance(e, Variable):
        return False
    if isinstance(e, (Neg, Func)):
        return is_constant_tree(e.arg)
    return is_constant_tree(e.left) and is_constant_tree(e.right)


# ---------------------------------------------------------------------------
# printing
# ---------------------------------------------------------------------------

_PREC = {Add: 1, Sub: 1, Mul: 2, Div: 2, Neg: 3, Pow: 4}
_SYMBOL = {Add: " + ", Sub: " - ", Mul: "*", Div: "/", Pow: "^"}


def _prec(e: Expr) -> int:
    if isinstance(e, Constant) and (e.value < 0 or math.copysign(1.0, e.value) < 0):
        return 0  # printed as "(-c)"
    return _PREC.get(type(e), 5)


def _fmt_number(v: float) -> str:
    if v.is_integer() and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def to_string(e: Expr) -> str:
    """Render ``e`` in the input grammar with minimal parentheses.

    Parse-produced trees round trip exactly.  Negative constants (which the
    parser never creates) are printed parenthesised and reparse as ``Neg``.
    """
    if isinstance(e, Constant):
        v = e.value
        if math.isnan(v) or math.isinf(v):
            raise ValueError(f"cannot print non-finite constant {v!r}")
        if math.copysign(1.0, v) < 0:
            return f"(-{_fmt_number(-v)})"
        return _fmt_number(v)
    if isinstance(e, Variable):
        return "x"
    if isinstance(e, Func):
        return f"{e.name}({to_string(e.arg)})"
    if isinstance(e, Neg):
        return "-" + _wrap(e.arg, _prec(e.arg) < 3)
    prec = _PREC[type(e)]
    if isinstance(e, Pow):
        left = _wrap(e.left, _prec(e.left) < 5)
        right = _wrap(e.right, _prec(e.right) < 3)
    else:
        left = _wrap(e.left, _prec(e.left) < prec)
        right = _wrap(e.right, _prec(e.right) <= prec)
    return left + _SYMBOL[type(e)] + right


def _wrap(e: Expr, paren: bool) -> str:
    s = to_string(e)
    return f"({s})" if paren else s


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^(),]))"
)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens: list[tuple[str, str, int]] = []
        pos = 0
        n = len(text)
        while True:
            while pos < n and text[pos].isspace():
                pos += 1
            if pos >= n:
                break
            m = _TOKEN.match(text, pos)
            if m is None or m.end() == pos:
                raise ParseError(self._offset(pos), "a number, 'x', a function or an operator",
                                 repr(text[pos]))
            kind = m.lastgroup
            start = m.start(kind)
            self.tokens.append((kind, m.group(kind), start))
            pos = m.end()
        self.tokens.append(("eof", "", n))
        self.i = 0

    def _offset(self, char_index: int) -> int:
        return len(self.text[:char_index].encode("utf-8"))

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, expected: str):
        kind, value, pos = self.peek()
        found = "end of input" if kind == "eof" else repr(value)
        raise ParseError(self._offset(pos), expected, found)

    def expect_op(self, op: str):
        kind, value, _ = self.peek()
        if kind == "op" and value == op:
            return self.advance()
        self.fail(repr(op))

    def parse(self) -> Expr:
        if self.peek()[0] == "eof":
            self.fail("an expression")
        e = self.expr()
        if self.peek()[0] != "eof":
            self.fail("an operator or end of input")
        return e

    def expr(self) -> Expr:
        left = self.term()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "+-":
                self.advance()
                right = self.term()
                left = Add(left, right) if value == "+" else Sub(left, right)
            else:
                return left

    def term(self) -> Expr:
        left = self.factor()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "*/":
                self.advance()
                right = self.factor()
                left = Mul(left, right) if value == "*" else Div(left, right)
            else:
                return left

    def factor(self) -> Expr:
        kind, value, _ = self.peek()
        if kind == "op" and value == "-":
            self.advance()
            return Neg(self.factor())
        base = self.base()
        kind, value, _ = self.peek()
        if kind == "op" and value == "^":
            self.advance()
            return Pow(base, self.factor())
        return base

    def base(self) -> Expr:
        kind, value, _ = self.peek()
        if kind == "num":
            self.advance()
            return Constant(float(value))
        if kind == "ident":
            if value == "x":
                self.advance()
                return X
            if value not in FUNCTIONS:
                self.fail("'x' or one of " + ", ".join(FUNCTIONS))
            self.advance()
            self.expect_op("(")
            if self.peek()[:2] == ("op", ")"):
                self.fail(f"an argument for {value}")
            arg = self.expr()
            self.expect_op(")")
            return Func(value, arg)
        if kind == "op" and value == "(":
            self.advance()
            e = self.expr()
            self.expect_op(")")
            return e
        self.fail("a number, 'x', a function call or '('")


def parse(text: str) -> Expr:
    """Parse ``text`` into an expression tree.

    >>> parse("2*x + 1")
    Add(Mul(Constant(2.0), Variable()), Constant(1.0))
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

_NUMPY_FUNCS = {
    "exp": np.exp, "sin": np.sin, "cos": np.cos, "tan": np.tan,
    "sinh": np.sinh, "cosh": np.cosh, "tanh": np.tanh, "sqrt": np.sqrt,
}


def evaluate(e: Expr, x):
    """Evaluate ``e`` at ``x`` with complex arithmetic.

    ``x`` may be a scalar (returns ``complex``) or an array (returns a complex
    array of the same shape).  Division by zero, ``ln(0)`` and non-finite
    results raise :class:`DomainError` naming the offending abscissa.
    """
    scalar = np.ndim(x) == 0
    z = np.asarray(x, dtype=complex)
    with np.errstate(all="ignore"):
        out = _eval(e, z)
    out = np.broadcast_to(out, z.shape)
    if not np.all(np.isfinite(out)):
        bad = ~np.isfinite(out)
        _raise_domain("non-finite value", z, bad)
    if scalar:
        return complex(out)
    return np.array(out, dtype=complex)


def as_function(e: Expr):
    """Return a vectorised callable ``f(x) -> complex`` for ``e``."""
    def f(x):
        return evaluate(e, x)
    f.expr = e
    return f


def _raise_domain(what: str, z, mask):
    z = np.broadcast_to(z, np.shape(mask))
    bad = z[mask]
    xval = bad.flat[0] if bad.size else None
    if xval is not None and xval.imag == 0:
        xval = xval.real
    raise DomainError(what, x=xval)


def _eval(e: Expr, z):
    if isinstance(e, Constant):
        return complex(e.value)
    if isinstance(e, Variable):
        return z
    if isinstance(e, Neg):
        return -_eval(e.arg, z)
    if isinstance(e, Func):
        # adding +0j turns a -0 imaginary part into +0, so real negatives sit
        # on the principal side of the branch cut however they were produced
        a = _eval(e.arg, z) + 0j
        if e.name == "ln":
            zero = np.asarray(a) == 0
            if np.any(zero):
                _raise_domain("ln of zero", z, np.broadcast_to(zero, np.shape(z)))
            return np.log(a)
        if e.name == "abs":
            return np.abs(a).astype(complex)
        return _NUMPY_FUNCS[e.name](a)
    left = _eval(e.left, z)
    if isinstance(e, Pow) and isinstance(e.right, Constant) and e.right.value.is_integer() \
            and abs(e.right.value) <= 64:
        n = int(e.right.value)
        if n < 0:
            zero = np.asarray(left) == 0
            if np.any(zero):
                _raise_domain("zero raised to a negative power", z,
                              np.broadcast_to(zero, np.shape(z)))
            return 1.0 / np.asarray(left) ** (-n)
        return np.asarray(left) ** n
    right = _eval(e.right, z)
    if isinstance(e, Add):
        return left + right
    if isinstance(e, Sub):
        return left - right
    if isinstance(e, Mul):
        return left * right
    if isinstance(e, Div):
        zero = np.asarray(right) == 0
        if np.any(zero):
            _raise_domain("division by zero", z, np.broadcast_to(zero, np.shape(z)))
        return left / right
    # general power: principal branch of exp(right * ln(left))
    left, right = np.broadcast_arrays(np.asarray(left) + 0j, np.asarray(right))
    zero = left == 0
    if np.any(zero & (right.real <= 0)):
        _raise_domain("zero raised to a non-positive power", z, zero & (right.real <= 0))
    out = np.power(np.where(zero, 1.0, left), right)
    return np.where(zero, 0.0, out)


# ---------------------------------------------------------------------------
# differentiation
# ---------------------------------------------------------------------------

def differentiate(e: Expr) -> Expr:
    """Symbolic d/dx of ``e``, lightly simplified.

    Powers with a non-constant exponent are differentiated through the
    ``exp(g*ln(f))`` rewrite, so the result is only meaningful where the base
    is positive.  Singular points (e.g. ``abs`` at 0) surface as
    :class:`DomainError` when the derivative is evaluated.
    """
    return simplify(_d(e))


def _d(e: Expr) -> Expr:
    if isinstance(e, Constant):
        return ZERO
    if isinstance(e, Variable):
        return ONE
    if isinstance(e, Neg):
        return Neg(_d(e.arg))
    if isinstance(e, Add):
        return Add(_d(e.left), _d(e.right))
    if isinstance(e, Sub):
        return Sub(_d(e.left), _d(e.right))
    if isinstance(e, Mul):
        u, v = e.left, e.right
        if is_constant_tree(u):
            return Mul(u, _d(v))
        if is_constant_tree(v):
            return Mul(_d(u), v)
        return Add(Mul(_d(u), v), Mul(u, _d(v)))
    if isinstance(e, Div):
        u, v = e.left, e.right
        if is_constant_tree(v):
            return Div(_d(u), v)
        return Div(Sub(Mul(_d(u), v), Mul(u, _d(v))), Pow(v, Constant(2.0)))
    if isinstance(e, Pow):
        f, g = e.left, e.right
        if is_constant_tree(g):
            return Mul(Mul(g, Pow(f, Sub(g, ONE))), _d(f))
        if is_constant_tree(f):
            return Mul(Mul(e, Func("ln", f)), _d(g))
        return Mul(e, Add(Mul(_d(g), Func("ln", f)), Div(Mul(g, _d(f)), f)))
    if isinstance(e, Func):
        u = e.arg
        du = _d(u)
        name = e.name
        if name == "exp":
            outer = e
        elif name == "ln":
            return Div(du, u)
        elif name == "sin":
            outer = Func("cos", u)
        elif name == "cos":
            outer = Neg(Func("sin", u))
        elif name == "tan":
            return Div(du, Pow(Func("cos", u), Constant(2.0)))
        elif name == "sinh":
            outer = Func("cosh", u)
        elif name == "cosh":
            outer = Func("sinh", u)
        elif name == "tanh":
            return Div(du, Pow(Func("cosh", u), Constant(2.0)))
        elif name == "sqrt":
            return Div(du, Mul(Constant(2.0), e))
        else:  # abs
            return Div(Mul(u, du), e)
        return Mul(outer, du)
    raise TypeError(f"not an expression node: {e!r}")


# ---------------------------------------------------------------------------
# simplification
# ---------------------------------------------------------------------------

def simplify(e: Expr) -> Expr:
    """Constant folding, 0/1 identities and sign cleanup.

    Trees that are Laurent polynomials in x are expanded with exact rational
    arithmetic; the expanded form replaces the tree when it is smaller (in
    particular when everything cancels to a constant).
    """
    s = _simp(e)
    if not isinstance(s, Constant):
        poly = _laurent(s)
        if poly is not None:
            nonzero = {k: c for k, c in poly.items() if c != 0}
            if not nonzero:
                return ZERO
            if set(nonzero) == {0}:
                return Constant(float(nonzero[0]))
            expanded = _from_laurent(nonzero)
            if _size(expanded) < _size(s):
                return expanded
    return s


def _size(e: Expr) -> int:
    if isinstance(e, (Constant, Variable)):
        return 1
    if isinstance(e, (Neg, Func)):
        return 1 + _size(e.arg)
    return 1 + _size(e.left) + _size(e.right)


def _from_laurent(poly: dict[int, Fraction]) -> Expr:
    """``c_k x^k + ...`` with descending powers; negative coefficients subtract."""
    out = None
    for k in sorted(poly, reverse=True):
        c = float(poly[k])
        mag = abs(c)
        if k == 0:
            term = Constant(mag)
        else:
            power = X if k == 1 else Pow(X, Constant(float(k)) if k > 0 else Neg(Constant(float(-k))))
            term = power if mag == 1 else Mul(Constant(mag), power)
        if out is None:
            out = Neg(term) if c < 0 else term
        else:
            out = Sub(out, term) if c < 0 else Add(out, term)
    return out


def _is(e: Expr, v: float) -> bool:
    return isinstance(e, Constant) and e.value == v


def _fold(e: Expr) -> Expr:
    try:
        with np.errstate(all="ignore"):
            val = _eval(e, np.zeros((), dtype=complex))
    except DomainError:
        return e
    val = complex(val)
    if val.imag != 0 or not math.isfinite(val.real):
        return e
    return Constant(val.real + 0.0)


def _simp(e: Expr) -> Expr:
    if isinstance(e, (Constant, Variable)):
        return e
    if isinstance(e, Neg):
        return _neg(_simp(e.arg))
    if isinstance(e, Func):
        a = _simp(e.arg)
        out = Func(e.name, a)
        return _fold(out) if isinstance(a, Constant) else out

    l, r = _simp(e.left), _simp(e.right)
    if isinstance(l, Constant) and isinstance(r, Constant):
        folded = _fold(type(e)(l, r))
        if isinstance(folded, Constant):
            return folded

    if isinstance(e, Add):
        if _is(l, 0):
            return r
        if _is(r, 0):
            return l
        if isinstance(r, Neg):
            return _simp_sub(l, r.arg)
        if isinstance(l, Neg):
            return _simp_sub(r, l.arg)
        return Add(l, r)
    if isinstance(e, Sub):
        return _simp_sub(l, r)
    if isinstance(e, Mul):
        if _is(l, 0) or _is(r, 0):
            return ZERO
        if _is(l, 1):
            return r
        if _is(r, 1):
            return l
        if _is(l, -1):
            return _simp(Neg(r))
        if _is(r, -1):
            return _simp(Neg(l))
        if isinstance(l, Neg) and isinstance(r, Neg):
            return _simp(Mul(l.arg, r.arg))
        if isinstance(l, Neg):
            return _neg(_simp(Mul(l.arg, r)))
        if isinstance(r, Neg):
            return _neg(_simp(Mul(l, r.arg)))
        if isinstance(l, Constant) and isinstance(r, Mul) and isinstance(r.left, Constant):
            return _simp(Mul(Constant(l.value * r.left.value), r.right))
        if isinstance(r, Constant) and not isinstance(l, Constant):
            return _simp(Mul(r, l))
        return Mul(l, r)
    if isinstance(e, Div):
        if _is(r, 1):
            return l
        if _is(l, 0) and not _is(r, 0):
            return ZERO
        if _is(r, -1):
            return _simp(Neg(l))
        if l == r and not _is(r, 0):
            return ONE
        if isinstance(l, Neg):
            return _neg(_simp(Div(l.arg, r)))
        return Div(l, r)
    # Pow
    if _is(r, 0):
        return ONE
    if _is(r, 1):
        return l
    if _is(l, 1):
        return ONE
    if _is(l, 0) and isinstance(r, Constant) and r.value > 0:
        return ZERO
    if isinstance(l, Pow) and isinstance(l.right, Constant) and isinstance(r, Constant) \
            and l.right.value.is_integer() and r.value.is_integer():
        return Pow(l.left, Constant(l.right.value * r.value))
    return Pow(l, r)


def _neg(a: Expr) -> Expr:
    if isinstance(a, Constant):
        return Constant(-a.value + 0.0)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def _simp_sub(l: Expr, r: Expr) -> Expr:
    if isinstance(l, Constant) and isinstance(r, Constant):
        return Constant(l.value - r.value + 0.0)
    if _is(r, 0):
        return l
    if l == r:
        return ZERO
    if _is(l, 0):
        return _simp(Neg(r))
    if isinstance(r, Neg):
        return Add(l, r.arg)
    return Sub(l, r)


_MAX_DEGREE = 32
_MAX_TERMS = 200


def _laurent(e: Expr) -> dict[int, Fraction] | None:
    """Exact expansion into {power: coefficient}, or None if not a Laurent polynomial."""
    if isinstance(e, Constant):
        if not math.isfinite(e.value):
            return None
        return {0: Fraction(e.value)}
    if isinstance(e, Variable):
        return {1: Fraction(1)}
    if isinstance(e, Neg):
        a = _laurent(e.arg)
        return None if a is None else {k: -c for k, c in a.items()}
    if isinstance(e, Func):
        return None
    a = _laurent(e.left)
    if a is None:
        return None
    if isinstance(e, Pow):
        if not (isinstance(e.right, Constant) and e.right.value.is_integer()):
            return None
        n = int(e.right.value)
        if n < 0:
            if len(a) != 1:
                return None
            (k, c), = a.items()
            if c == 0 or abs(k * n) > _MAX_DEGREE:
                return None
            return {k * n: c ** n}
        if n * max(abs(k) for k in a) > _MAX_DEGREE:
            return None
        out = {0: Fraction(1)}
        for _ in range(n):
            out = _poly_mul(out, a)
            if out is None:
                return None
        return out
    b = _laurent(e.right)
    if b is None:
        return None
    if isinstance(e, Add):
        return _poly_add(a, b, 1)
    if isinstance(e, Sub):
        return _poly_add(a, b, -1)
    if isinstance(e, Mul):
        return _poly_mul(a, b)
    # Div only by a single monomial
    b = {k: c for k, c in b.items() if c != 0}
    if len(b) != 1:
        return None
    (k, c), = b.items()
    return {p - k: v / c for p, v in a.items()}


def _poly_add(a, b, sign):
    out = dict(a)
    for k, c in b.items():
        out[k] = out.get(k, Fraction(0)) + sign * c
    return out


def _poly_mul(a, b):
    out: dict[int, Fraction] = {}
    for ka, ca in a.items():
        for kb, cb in b.items():
            k = ka + kb
            if abs(k) > _MAX_DEGREE:
                return None
            out[k] = out.get(k, Fraction(0)) + ca * cb
    if len(out) > _MAX_TERMS:
        return None
    return out


# ---------------------------------------------------------------------------
# constancy
# ---------------------------------------------------------------------------

def chebyshev_points(a: float, b: float, n: int = 64) -> np.ndarray:
    """Chebyshev points of the first kind mapped to [a, b], ascending."""
    j = np.arange(n)
    t = np.cos(np.pi * (j + 0.5) / n)[::-1]
    return 0.5 * (a + b) + 0.5 * (b - a) * t


def detect_constant(e: Expr, interval, tol: float = 1e-9) -> float | None:
    """Return the constant value of ``e`` on ``interval`` or None.

    A literal constant after :func:`simplify` is returned exactly.  Otherwise
    ``e`` is sampled at 64 Chebyshev points and accepted as constant when the
    spread satisfies ``max - min <= tol * (1 + |mean|)``.
    """
    s = simplify(e)
    if isinstance(s, Constant):
        return s.value
    a, b = interval
    vals = evaluate(s, chebyshev_points(a, b, 64))
    mean = vals.mean()
    spread = np.ptp(vals.real) + np.ptp(vals.imag)
    limit = tol * (1.0 + abs(mean))
    if spread > limit or abs(mean.imag) > limit:
        return None
    return float(mean.real)
