"""Integrating-factor pairs (g, h) and the split B = P + Q for every route.

Every indefinite integral is taken from the base point ``x0``, so
``g(x) h(x) = exp(int_{x0}^{x} B)`` holds on all routes.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import IntervalTooLong, SingularityDetected, ZeroOnInterval
from .expr import Expr, as_function, differentiate
from .quadrature import DEFAULT_GRID, DEFAULT_TOL, GridFunction, antiderivative, make_grid
from .stepper import integrate_to_nodes

__all__ = [
    "FactorPair", "RiccatiConfig", "riccati_rhs", "factors_constant",
    "factors_discriminant_zero", "factors_discriminant_const", "factors_from_complementary",
    "factors_riccati",
]


@dataclass(frozen=True)
class FactorPair:
    """Integrating factors and the split P + Q = B on a grid.

    ``g``, ``h``, ``P``, ``Q`` are vectorised callables returning complex
    values.  ``shift`` is the intermediate ``Q - B/2`` of the discriminant
    routes, ``c`` their free constant, ``q_grid`` the Riccati solution.
    """

    route: str
    g: object
    h: object
    P: object
    Q: object
    x0: float
    grid: np.ndarray = field(repr=False)
    c: float | None = None
    k: float | None = None
    shift: object | None = field(default=None, repr=False)
    q_grid: GridFunction | None = field(default=None, repr=False)
    q0: complex | None = None

    @property
    def interval(self) -> tuple[float, float]:
        return float(self.grid[0]), float(self.grid[-1])

    def corrupted(self, h_factor) -> "FactorPair":
        """Copy with ``h`` multiplied by ``h_factor(x)`` (negative controls)."""
        h = self.h
        return FactorPair(self.route + "+corrupted", self.g, lambda x: h(x) * h_factor(x),
                          self.P, self.Q, self.x0, self.grid, self.c, self.k, self.shift,
                          self.q_grid, self.q0)


@dataclass(frozen=True)
class RiccatiConfig:
    q0: complex = 0.0
    blowup: float = 1e6
    tol: float = 1e-10

    def __post_init__(self):
        if not self.blowup > 0:
            raise ValueError("blow-up threshold must be positive")


def riccati_rhs(q, Bx, Cx):
    """Right-hand side of ``Q' = Q^2 - B Q + C``."""
    return q * q - Bx * q + Cx


def _grid(x0, interval, n, grid):
    if grid is not None:
        return np.asarray(grid, dtype=float)
    a, b = interval
    return make_grid(a, b, n, x0)


def factors_constant(B: float, C: float, x0: float = 0.0, interval=None,
                     n: int = DEFAULT_GRID, grid=None) -> FactorPair:
    """Exponential factors for constant coefficients.

    P and Q are the roots of ``r^2 - B r + C`` (principal square root), so
    complex roots are allowed; g and h are anchored to 1 at ``x0``.
    """
    root = cmath.sqrt(complex(B) * B - 4 * complex(C))
    P = (B + root) / 2
    Q = (B - root) / 2
    if interval is None:
        interval = (x0, x0 + 1.0)
    grid = _grid(x0, interval, n, grid)

    def g(x):
        return np.exp(P * (np.asarray(x, dtype=float) - x0))

    def h(x):
        return np.exp(Q * (np.asarray(x, dtype=float) - x0))

    def const(v):
        return lambda x: np.full(np.shape(x), v, dtype=complex) if np.ndim(x) else complex(v)

    return FactorPair("constant-coefficients", g, h, const(P), const(Q), x0, grid)


def _half_b_exponential(B: Expr, x0, interval, n, tol, grid):
    """``E(x) = exp(int_{x0}^{x} B/2)`` as a callable, and B as a callable."""
    Bf = as_function(B)
    A = antiderivative(lambda t: 0.5 * Bf(t), x0, interval, n, tol, grid=grid)
    return (lambda x: np.exp(A(x))), Bf


def factors_discriminant_zero(B: Expr, x0: float, interval, n: int = DEFAULT_GRID,
                              tol: float = DEFAULT_TOL, grid=None) -> FactorPair:
    """Factors when ``B^2 + 2B' - 4C`` vanishes.

    The shift solves ``f' = f^2`` as ``f = -1/(x + c)`` with ``c = 1 - a``,
    which puts the pole one unit left of the interval.
    """
    a, _ = interval
    grid = _grid(x0, interval, n, grid)
    c = 1.0 - a
    E, Bf = _half_b_exponential(B, x0, interval, n, tol, grid)

    def g(x):
        return (np.asarray(x) + c) * E(x)

    def h(x):
        return E(x) / (np.asarray(x) + c)

    def shift(x):
        return -1.0 / (np.asarray(x) + c)

    return FactorPair("discriminant-zero", g, h,
                      lambda x: 0.5 * Bf(x) - shift(x),
                      lambda x: 0.5 * Bf(x) + shift(x),
                      x0, grid, c=c, shift=shift)


def factors_discriminant_const(B: Expr, k: float, x0: float, interval, n: int = DEFAULT_GRID,
                               tol: float = DEFAULT_TOL, grid=None) -> FactorPair:
    """Factors when ``(B^2 + 2B' - 4C)/4`` equals a nonzero constant ``k``.

    With ``s = sqrt(k)`` and ``w = e^{s(x+c)} - e^{-s(x+c)}``: ``g = E w``,
    ``h = E / w``.  For ``k < 0`` the factor is ``2i sin(|s|(x+c))`` and ``c``
    centres the interval between two of its zeros; this needs
    ``b - a < pi/|s|`` and raises :class:`IntervalTooLong` otherwise.
    """
    if k == 0:
        raise ValueError("k must be nonzero")
    a, b = interval
    s = cmath.sqrt(k)
    if k > 0:
        c = 1.0 - a
    else:
        period = math.pi / abs(s)
        if b - a >= period:
            raise IntervalTooLong(b - a, period)
        c = -a + 0.5 * (period - (b - a))
    grid = _grid(x0, interval, n, grid)
    E, Bf = _half_b_exponential(B, x0, interval, n, tol, grid)

    # w rescaled by the constant e^{-s(x0+c)} to keep exponents near zero;
    # g h and the ratio w'/w are unchanged.
    decay = cmath.exp(-2 * s * (x0 + c))

    def w(x):
        t = np.asarray(x, dtype=float) - x0
        return np.exp(s * t) - np.exp(-s * t) * decay

    def wsum(x):
        t = np.asarray(x, dtype=float) - x0
        return np.exp(s * t) + np.exp(-s * t) * decay

    def shift(x):
        return -s * wsum(x) / w(x)

    return FactorPair("discriminant-constant", lambda x: E(x) * w(x), lambda x: E(x) / w(x),
                      lambda x: 0.5 * Bf(x) - shift(x),
                      lambda x: 0.5 * Bf(x) + shift(x),
                      x0, grid, c=c, k=k, shift=shift)


def _find_zero(x: np.ndarray, v: np.ndarray) -> float | None:
    exact = np.flatnonzero(v == 0)
    if exact.size:
        return float(x[exact[0]])
    if np.all(np.abs(v.imag) <= 1e-12 * np.abs(v)):
        r = v.real
        flips = np.flatnonzero(np.sign(r[:-1]) != np.sign(r[1:]))
        if flips.size:
            i = flips[0]
            return float(x[i] - r[i] * (x[i + 1] - x[i]) / (r[i + 1] - r[i]))
    mag = np.abs(v)
    if mag.min() <= 1e-12 * mag.max():
        return float(x[np.argmin(mag)])
    return None


def factors_from_complementary(f: Expr, B: Expr, x0: float, interval, n: int = DEFAULT_GRID,
                               tol: float = DEFAULT_TOL, grid=None) -> FactorPair:
    """Factors from a known homogeneous solution ``f``: ``h = 1/f``, ``g = f e^{int B}``."""
    grid = _grid(x0, interval, n, grid)
    ff = as_function(f)
    zero = _find_zero(grid, ff(grid))
    if zero is not None:
        raise ZeroOnInterval(zero)
    dff = as_function(differentiate(f))
    Bf = as_function(B)
    AB = antiderivative(Bf, x0, interval, n, tol, grid=grid)

    def Q(x):
        return -dff(x) / ff(x)

    return FactorPair("known-complementary",
                      lambda x: ff(x) * np.exp(AB(x)),
                      lambda x: 1.0 / ff(x),
                      lambda x: Bf(x) - Q(x), Q, x0, grid)


def solve_riccati(B: Expr, C: Expr, cfg: RiccatiConfig, x0: float, grid) -> GridFunction:
    """Solve ``Q' = Q^2 - B Q + C`` with ``Q(x0) = q0`` onto every node of ``grid``."""
    Bf, Cf = as_function(B), as_function(C)
    grid = np.asarray(grid, dtype=float)
    i0 = int(np.flatnonzero(grid == x0)[0])

    def rhs(x, q):
        return riccati_rhs(q, Bf(x), Cf(x))

    values = np.empty(grid.size, dtype=complex)
    q0 = complex(cfg.q0)
    try:
        values[i0:] = integrate_to_nodes(rhs, grid[i0:], q0, cfg.tol, cfg.tol, cfg.blowup)
        values[:i0 + 1] = integrate_to_nodes(rhs, grid[i0::-1], q0, cfg.tol, cfg.tol,
                                             cfg.blowup)[::-1]
    except SingularityDetected as exc:
        raise SingularityDetected(exc.x_sing, q0=cfg.q0) from None
    slopes = riccati_rhs(values, Bf(grid), Cf(grid))
    return GridFunction(grid, values, slopes)


def factors_riccati(B: Expr, C: Expr, cfg: RiccatiConfig | None = None, x0: float = 0.0,
                    interval=(0.0, 1.0), n: int = DEFAULT_GRID, tol: float = DEFAULT_TOL,
                    grid=None) -> FactorPair:
    """General route: integrate the Riccati equation for Q numerically.

    ``h = e^{A}``, ``g = e^{int B - A}`` with ``A = int_{x0}^{x} Q``.  A pole
    of Q inside the interval raises :class:`SingularityDetected`.
    """
    cfg = cfg or RiccatiConfig()
    grid = _grid(x0, interval, n, grid)
    qg = solve_riccati(B, C, cfg, x0, grid)
    A = antiderivative(qg, x0, interval, n, tol, grid=grid)
    Bf = as_function(B)
    AB = antiderivative(Bf, x0, interval, n, tol, grid=grid)
    return FactorPair("riccati",
                      lambda x: np.exp(AB(x) - A(x)),
                      lambda x: np.exp(A(x)),
                      lambda x: Bf(x) - qg(x), qg, x0, grid, q_grid=qg, q0=complex(cfg.q0))
