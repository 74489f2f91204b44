"""General solution from an integrating-factor pair, initial conditions, and the pipeline.

With ``I_R = int_{x0}^{x} g R`` and ``J = int_{x0}^{x} h/g``::

    y  = (1/h) int_{x0}^{x} (h/g) I_R  +  C1 J/h  +  C2/h
    y' = (I_R + C1)/g - Q y
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .classify import OdeProblem, Route, RouteVerdict, classify, discriminant
from .errors import If2OdeError, IntervalTooLong, SingularSystem
from .expr import Constant, Expr, as_function, detect_constant, simplify
from .factors import (
    FactorPair, RiccatiConfig, factors_constant, factors_discriminant_const,
    factors_discriminant_zero, factors_from_complementary, factors_riccati,
)
from .quadrature import DEFAULT_TOL, GridFunction, antiderivative

__all__ = [
    "Solution", "SolveConfig", "SolveReport", "assemble_general", "derivative_of_solution",
    "apply_initial_conditions", "build_factors", "solve", "FORCE_ROUTES",
]

IMAG_TOL = 1e-8

FORCE_ROUTES = {
    "constant": Route.CONSTANT,
    "cor1": Route.DISCRIMINANT_ZERO,
    "cor2": Route.DISCRIMINANT_CONST,
    "complementary": Route.COMPLEMENTARY,
    "riccati": Route.RICCATI,
}


def _labelled(exc: If2OdeError, stage: str) -> If2OdeError:
    if exc.stage is None:
        exc.stage = stage
    return exc


@dataclass
class Solution:
    """Particular part and complementary basis sampled on the shared grid.

    ``C1`` and ``C2`` stay ``None`` until initial conditions are fitted; the
    evaluation methods then default to them (and to zero before that).
    """

    fp: FactorPair
    particular: GridFunction
    basis_u: GridFunction
    I_R: GridFunction
    J: GridFunction
    C1: complex | None = None
    C2: complex | None = None
    real: bool = False

    @property
    def grid(self) -> np.ndarray:
        return self.fp.grid

    @property
    def x0(self) -> float:
        return self.fp.x0

    @property
    def route(self) -> str:
        return self.fp.route

    def basis_v(self, x):
        return 1.0 / self.fp.h(x)

    def _constants(self, C1, C2):
        C1 = (self.C1 if self.C1 is not None else 0j) if C1 is None else C1
        C2 = (self.C2 if self.C2 is not None else 0j) if C2 is None else C2
        return C1, C2

    def _out(self, v):
        return v.real if self.real else v

    def y(self, x, C1=None, C2=None):
        C1, C2 = self._constants(C1, C2)
        return self._out(self.particular(x) + C1 * self.basis_u(x) + C2 * self.basis_v(x))

    def yprime(self, x, C1=None, C2=None):
        C1, C2 = self._constants(C1, C2)
        y = self.particular(x) + C1 * self.basis_u(x) + C2 * self.basis_v(x)
        return self._out((self.I_R(x) + C1) / self.fp.g(x) - self.fp.Q(x) * y)

    def fundamental(self, x):
        """Homogeneous solutions with (y, y') = (1, 0) and (0, 1) at ``x0``."""
        out = []
        for y0, yp0 in ((1.0, 0.0), (0.0, 1.0)):
            C1, C2 = _solve_constants(self, y0, yp0, homogeneous=True)
            v = C1 * self.basis_u(x) + C2 * self.basis_v(x)
            out.append(v.real if self.real else v)
        return tuple(out)


def assemble_general(fp: FactorPair, R: Expr, x0: float | None = None, interval=None,
                     tol: float = DEFAULT_TOL) -> Solution:
    """Evaluate the solution formula for ``fp`` on its grid (three cumulative passes)."""
    x0 = fp.x0 if x0 is None else x0
    interval = fp.interval if interval is None else interval
    grid = fp.grid
    g, h, Q = fp.g, fp.h, fp.Q

    def ratio(x):
        return h(x) / g(x)

    stage = "assemble"
    try:
        stage = "assemble: int h/g"
        J = antiderivative(ratio, x0, interval, tol=tol, grid=grid)
        R_s = simplify(R)
        if isinstance(R_s, Constant) and R_s.value == 0:
            zeros = np.zeros(grid.size, dtype=complex)
            I_R = GridFunction(grid, zeros, zeros)
            K_vals = zeros
        else:
            Rf = as_function(R_s)
            stage = "assemble: int g R"
            I_R = antiderivative(lambda x: g(x) * Rf(x), x0, interval, tol=tol, grid=grid)
            stage = "assemble: int (h/g) int g R"
            K_vals = antiderivative(lambda x: ratio(x) * I_R(x), x0, interval, tol=tol,
                                    grid=grid).values
        stage = "assemble: factors on grid"
        hg, gg, Qg = h(grid), g(grid), Q(grid)
    except If2OdeError as exc:
        raise _labelled(exc, stage)

    part = K_vals / hg
    particular = GridFunction(grid, part, I_R.values / gg - Qg * part)
    u = J.values / hg
    basis_u = GridFunction(grid, u, 1.0 / gg - Qg * u)
    return Solution(fp, particular, basis_u, I_R, J)


def derivative_of_solution(s: Solution, fp: FactorPair, R: Expr, x, C1, C2):
    """``y'(x) = (I_R(x) + C1)/g(x) - Q(x) y(x)``; no numerical differentiation."""
    y = s.particular(x) + C1 * s.basis_u(x) + C2 * s.basis_v(x)
    return (s.I_R(x) + C1) / fp.g(x) - fp.Q(x) * y


def _solve_constants(s: Solution, y0, yp0, homogeneous=False):
    fp, x0 = s.fp, s.x0
    u0 = s.basis_u(x0)
    v0 = 1.0 / fp.h(x0)
    g0, Q0 = fp.g(x0), fp.Q(x0)
    du0 = 1.0 / g0 - Q0 * u0
    dv0 = -Q0 * v0
    if homogeneous:
        p0 = dp0 = 0.0
    else:
        p0 = s.particular(x0)
        dp0 = s.I_R(x0) / g0 - Q0 * p0
    ry, rp = y0 - p0, yp0 - dp0
    det = u0 * dv0 - v0 * du0
    scale = (abs(u0) + abs(v0)) * (abs(du0) + abs(dv0))
    if not abs(det) > 1e-12 * scale:
        raise SingularSystem(f"initial-condition system is singular (det={abs(det):.3g})")
    if u0 == 0:
        # x0-anchored integrals make the system triangular
        C2 = ry / v0
        C1 = (rp - C2 * dv0) / du0
    else:
        C1 = (ry * dv0 - v0 * rp) / det
        C2 = (u0 * rp - du0 * ry) / det
    return complex(C1), complex(C2)


def apply_initial_conditions(s: Solution, fp: FactorPair | None, y0, yp0, x0=None):
    """Fit ``(C1, C2)`` so that ``y(x0) = y0`` and ``y'(x0) = yp0``; stores them on ``s``."""
    if fp is not None and fp is not s.fp:
        raise ValueError("solution was assembled from a different factor pair")
    if x0 is not None and x0 != s.x0:
        raise ValueError("initial conditions must be imposed at the base point")
    C1, C2 = _solve_constants(s, complex(y0), complex(yp0))
    s.C1, s.C2 = C1, C2
    return C1, C2


@dataclass(frozen=True)
class SolveConfig:
    q0: complex = 0.0
    force_route: str | None = None
    verify: bool = True


@dataclass
class SolveReport:
    solution: Solution
    verdict: RouteVerdict
    factors: FactorPair
    route_used: Route
    routes_attempted: list[Route]
    metrics: object | None = None
    warnings: list[str] = field(default_factory=list)

    def samples(self, x=None):
        x = self.solution.grid if x is None else np.asarray(x, dtype=float)
        return x, self.solution.y(x), self.solution.yprime(x)


def _forced_verdict(p: OdeProblem, route: Route) -> RouteVerdict:
    tol = p.tol.const
    D = discriminant(p.B, p.C)
    if route is Route.CONSTANT:
        Bc = detect_constant(p.B, p.interval, tol)
        Cc = detect_constant(p.C, p.interval, tol)
        if Bc is None or Cc is None:
            raise If2OdeError("constant route forced but B or C is not constant")
        return RouteVerdict(route, B=Bc, C=Cc, D=D, D_value=Bc * Bc - 4 * Cc)
    if route is Route.COMPLEMENTARY:
        if p.f is None:
            raise If2OdeError("complementary route forced but no f supplied")
        return RouteVerdict(route, f=p.f, D=D)
    if route is Route.DISCRIMINANT_CONST:
        d = detect_constant(D, p.interval, tol)
        if d is None or abs(d) <= tol:
            raise If2OdeError("constant-discriminant route forced but D is not a nonzero constant")
        return RouteVerdict(route, k=d / 4.0, D=D, D_value=d)
    return RouteVerdict(route, D=D)


def build_factors(p: OdeProblem, verdict: RouteVerdict, q0=0.0) -> FactorPair:
    """Route-specific factor construction on the problem grid."""
    grid = p.grid
    a, b = p.interval
    t = p.tol
    r = verdict.route
    if r is Route.CONSTANT:
        return factors_constant(verdict.B, verdict.C, p.x0, p.interval, grid=grid)
    if r is Route.COMPLEMENTARY:
        return factors_from_complementary(verdict.f, p.B, p.x0, p.interval, tol=t.quad,
                                          grid=grid)
    if r is Route.DISCRIMINANT_ZERO:
        return factors_discriminant_zero(p.B, p.x0, p.interval, tol=t.quad, grid=grid)
    if r is Route.DISCRIMINANT_CONST:
        return factors_discriminant_const(p.B, verdict.k, p.x0, p.interval, tol=t.quad,
                                          grid=grid)
    cfg = RiccatiConfig(q0=q0, blowup=t.blowup, tol=t.ode)
    return factors_riccati(p.B, p.C, cfg, p.x0, p.interval, tol=t.quad, grid=grid)


def solve(p: OdeProblem, cfg: SolveConfig | None = None) -> SolveReport:
    """Classify, build factors (with fallbacks), assemble, fit ICs, verify."""
    from .verify import verify_solution

    cfg = cfg or SolveConfig()
    warnings: list[str] = []
    try:
        if cfg.force_route:
            verdict = _forced_verdict(p, FORCE_ROUTES[cfg.force_route])
        else:
            verdict = classify(p)
    except If2OdeError as exc:
        raise _labelled(exc, "classify")

    attempted = [verdict.route]
    try:
        fp = build_factors(p, verdict, cfg.q0)
    except IntervalTooLong as exc:
        if cfg.force_route:
            raise _labelled(exc, "factors")
        warnings.append(f"fallback {verdict.route.value} -> riccati: {exc}")
        attempted.append(Route.RICCATI)
        try:
            fp = build_factors(p, RouteVerdict(Route.RICCATI, D=verdict.D), cfg.q0)
        except If2OdeError as exc2:
            raise _labelled(exc2, "factors")
    except If2OdeError as exc:
        raise _labelled(exc, "factors")

    sol = assemble_general(fp, p.R, p.x0, p.interval, tol=p.tol.quad)
    if p.ic is not None:
        try:
            apply_initial_conditions(sol, fp, *p.ic)
        except If2OdeError as exc:
            raise _labelled(exc, "initial-conditions")

    report = SolveReport(sol, verdict, fp, attempted[-1], attempted, warnings=warnings)

    yv = sol.y(sol.grid)
    scale = 1.0 + float(np.max(np.abs(yv)))
    imag = float(np.max(np.abs(np.imag(yv))))
    if p.is_real:
        if imag <= IMAG_TOL * scale:
            sol.real = True
        else:
            warnings.append(f"solution keeps an imaginary part of {imag:.3g}")

    if cfg.verify:
        try:
            report.metrics = verify_solution(p, sol, imag_residue=imag)
        except If2OdeError as exc:
            raise _labelled(exc, "verify")
    return report
