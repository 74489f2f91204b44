"""Problem definition and route selection via the discriminant B^2 + 2B' - 4C."""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields, replace
from enum import Enum

import numpy as np

from .errors import InvalidComplementary
from .expr import Expr, chebyshev_points, detect_constant, differentiate, evaluate, parse, simplify
from .quadrature import DEFAULT_GRID, DEFAULT_TOL, make_grid

__all__ = [
    "Tolerances", "OdeProblem", "Route", "RouteVerdict", "discriminant", "classify",
    "complementary_residual",
]

TOL_ENV = "IF2ODE_TOL"


@dataclass(frozen=True)
class Tolerances:
    """Numerical knobs shared by the whole pipeline."""

    quad: float = DEFAULT_TOL  # quadrature, per antiderivative
    const: float = 1e-9  # constancy / zero tests
    residual: float = 1e-8  # check of a user-supplied complementary solution
    ode: float = 1e-10  # Riccati stepper and reference integrator (abs and rel)
    blowup: float = 1e6  # |Q| threshold for Riccati pole detection
    grid: int = DEFAULT_GRID

    @classmethod
    def parse(cls, text: str, base: "Tolerances | None" = None) -> "Tolerances":
        """Read ``"1e-9"`` (quad and ode) or ``"quad=1e-9,const=1e-8,grid=257"``."""
        base = base or cls()
        text = text.strip()
        if not text:
            return base
        if "=" not in text:
            v = float(text)
            return replace(base, quad=v, ode=v)
        names = {f.name: f.type for f in fields(cls)}
        updates = {}
        for item in text.split(","):
            key, _, value = item.partition("=")
            key = key.strip()
            if key not in names:
                raise ValueError(f"unknown tolerance {key!r}; known: {', '.join(names)}")
            updates[key] = int(value) if key == "grid" else float(value)
        return replace(base, **updates)

    @classmethod
    def from_env(cls) -> "Tolerances":
        return cls.parse(os.environ.get(TOL_ENV, ""))


def _as_expr(e) -> Expr:
    if isinstance(e, Expr):
        return e
    if isinstance(e, (int, float)):
        return parse(repr(float(e))) if e >= 0 else parse(f"-{-float(e)!r}")
    return parse(e)


@dataclass(frozen=True)
class OdeProblem:
    """``y'' + B(x) y' + C(x) y = R(x)`` on ``interval`` with base point ``x0``.

    Coefficients may be given as expressions or strings.  ``ic`` holds
    ``(y(x0), y'(x0))``; ``f`` is an optional known complementary solution.
    """

    B: Expr
    C: Expr
    R: Expr = field(default_factory=lambda: parse("0"))
    interval: tuple[float, float] = (0.0, 1.0)
    x0: float | None = None
    ic: tuple[complex, complex] | None = None
    f: Expr | None = None
    tol: Tolerances = field(default_factory=Tolerances)

    def __post_init__(self):
        set_ = object.__setattr__
        set_(self, "B", _as_expr(self.B))
        set_(self, "C", _as_expr(self.C))
        set_(self, "R", _as_expr(self.R))
        if self.f is not None:
            set_(self, "f", _as_expr(self.f))
        a, b = (float(v) for v in self.interval)
        if not a < b:
            raise ValueError(f"interval must satisfy a < b, got [{a}, {b}]")
        set_(self, "interval", (a, b))
        x0 = a if self.x0 is None else float(self.x0)
        if not a <= x0 <= b:
            raise ValueError(f"base point {x0} outside [{a}, {b}]")
        set_(self, "x0", x0)
        if self.ic is not None:
            y0, yp0 = self.ic
            set_(self, "ic", (complex(y0), complex(yp0)))
        if self.tol.grid < 33:
            raise ValueError("grid size must be at least 33")
        grid = self.grid
        for name in ("B", "C", "R"):
            evaluate(getattr(self, name), grid)

    @property
    def grid(self) -> np.ndarray:
        a, b = self.interval
        return make_grid(a, b, self.tol.grid, self.x0)

    @property
    def is_real(self) -> bool:
        return self.ic is None or all(v.imag == 0 for v in self.ic)


class Route(str, Enum):
    CONSTANT = "constant-coefficients"
    COMPLEMENTARY = "known-complementary"
    DISCRIMINANT_ZERO = "discriminant-zero"
    DISCRIMINANT_CONST = "discriminant-constant"
    RICCATI = "riccati"


@dataclass(frozen=True)
class RouteVerdict:
    """Which construction applies, with its parameters and D diagnostics.

    ``k`` is D/4 for the constant-discriminant route.
    """

    route: Route
    B: float | None = None
    C: float | None = None
    f: Expr | None = None
    k: float | None = None
    D: Expr | None = None
    D_value: float | None = None
    D_samples: np.ndarray | None = field(default=None, compare=False)


def discriminant(B: Expr, C: Expr) -> Expr:
    """``simplify(B^2 + 2 B' - 4 C)``."""
    two, four = parse("2"), parse("4")
    return simplify(B * B + two * differentiate(B) - four * C)


def complementary_residual(p: OdeProblem, f: Expr | None = None) -> tuple[float, float]:
    """Max of ``|f'' + B f' + C f|`` on the grid and the scale it is judged against."""
    f = p.f if f is None else f
    df = differentiate(f)
    ddf = differentiate(df)
    x = p.grid
    fv, dfv, ddfv = evaluate(f, x), evaluate(df, x), evaluate(ddf, x)
    Bv, Cv = evaluate(p.B, x), evaluate(p.C, x)
    res = ddfv + Bv * dfv + Cv * fv
    scale = 1.0 + float(np.max(np.abs(ddfv) + np.abs(Bv * dfv) + np.abs(Cv * fv)))
    return float(np.max(np.abs(res))), scale


def classify(p: OdeProblem) -> RouteVerdict:
    """Pick the route for ``p``.

    Precedence: constant coefficients, known complementary solution, D == 0,
    D == const != 0, general Riccati.
    """
    tol = p.tol.const
    Bc = detect_constant(p.B, p.interval, tol)
    Cc = detect_constant(p.C, p.interval, tol) if Bc is not None else None
    D = discriminant(p.B, p.C)
    if Bc is not None and Cc is not None:
        return RouteVerdict(Route.CONSTANT, B=Bc, C=Cc, D=D, D_value=Bc * Bc - 4 * Cc)

    if p.f is not None:
        worst, scale = complementary_residual(p)
        if worst > p.tol.residual * scale:
            raise InvalidComplementary(worst, p.tol.residual * scale)
        return RouteVerdict(Route.COMPLEMENTARY, f=p.f, D=D)

    pts = chebyshev_points(*p.interval, 64)
    samples = evaluate(D, pts)
    d_val = detect_constant(D, p.interval, tol)
    if d_val is not None:
        if abs(d_val) <= tol * (1.0 + discriminant_scale(p.B, p.C, pts)):
            return RouteVerdict(Route.DISCRIMINANT_ZERO, D=D, D_value=0.0, D_samples=samples)
        k = d_val / 4.0
        if abs(k) > tol:
            return RouteVerdict(Route.DISCRIMINANT_CONST, k=k, D=D, D_value=d_val,
                                D_samples=samples)
    return RouteVerdict(Route.RICCATI, D=D, D_samples=samples)


def discriminant_scale(B: Expr, C: Expr, x) -> float:
    """Largest term magnitude in D on ``x``; zero tests are relative to it."""
    Bv = evaluate(B, x)
    dBv = evaluate(differentiate(B), x)
    Cv = evaluate(C, x)
    return float(np.max(np.abs(Bv) ** 2 + 2 * np.abs(dBv) + 4 * np.abs(Cv)))
