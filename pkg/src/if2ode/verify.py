"""Independent checks: reference integration, residuals and factor conditions.

The reference integrator is scipy's RK45 on the first-order system, a code
path that shares nothing with the factor construction or the solution formula.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .classify import OdeProblem
from .errors import StepFailure
from .expr import as_function
from .factors import FactorPair
from .quadrature import GridFunction, antiderivative, finite_diff

__all__ = [
    "VerificationMetrics", "reference_solve", "residual", "compare", "check_factor_conditions",
    "check_gh_invariant", "verify_solution", "FACTOR_TOL", "ORACLE_TOL", "RESIDUAL_TOL",
]

FACTOR_TOL = 1e-6
ORACLE_TOL = 1e-5
RESIDUAL_TOL = 1e-5


@dataclass
class VerificationMetrics:
    """Metrics are ``None`` when the corresponding check was not run."""

    max_abs_error: float | None = None
    max_rel_error: float | None = None
    max_residual: float | None = None
    factor_defects: tuple[float, float, float] | None = None
    gh_defect: float | None = None
    imag_residue: float | None = None
    y_scale: float | None = None
    grid_size: int | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["factor_defects"] is not None:
            d["factor_defects"] = list(d["factor_defects"])
        return d

    def failures(self) -> list[str]:
        """Names of metrics that exceed the acceptance thresholds."""
        scale = 1.0 + (self.y_scale or 0.0)
        bad = []
        if self.max_abs_error is not None and self.max_abs_error > ORACLE_TOL * scale:
            bad.append("max_abs_error")
        if self.max_residual is not None and self.max_residual > RESIDUAL_TOL * scale:
            bad.append("max_residual")
        if self.factor_defects is not None and max(self.factor_defects) > FACTOR_TOL:
            bad.append("factor_defects")
        return bad


def reference_solve(p: OdeProblem, y0=None, yp0=None, tol: float | None = None) -> GridFunction:
    """RK45 solution of ``(y, y')' = (y', R - B y' - C y)`` sampled on the problem grid.

    The returned grid function carries y' as slopes (cubic Hermite dense output).
    """
    if y0 is None or yp0 is None:
        if p.ic is None:
            raise ValueError("reference_solve needs initial conditions")
        y0, yp0 = p.ic
    tol = p.tol.ode if tol is None else tol
    Bf, Cf, Rf = as_function(p.B), as_function(p.C), as_function(p.R)
    real = complex(y0).imag == 0 and complex(yp0).imag == 0
    dtype = float if real else complex

    def rhs(x, z):
        Bx, Cx, Rx = Bf(x), Cf(x), Rf(x)
        acc = Rx - Bx * z[1] - Cx * z[0]
        if real:
            acc = acc.real
        return np.array([z[1], acc], dtype=dtype)

    grid = p.grid
    i0 = int(np.flatnonzero(grid == p.x0)[0])
    start = np.array([complex(y0), complex(yp0)])
    if real:
        start = start.real
    ys = np.empty(grid.size, dtype=complex)
    dys = np.empty(grid.size, dtype=complex)
    ys[i0], dys[i0] = start
    for seg in (grid[i0:], grid[i0::-1]):
        if seg.size < 2:
            continue
        sol = solve_ivp(rhs, (seg[0], seg[-1]), start, method="RK45", t_eval=seg,
                        rtol=tol, atol=tol)
        if sol.status != 0:
            x_fail = float(sol.t[-1]) if sol.t.size else float(seg[0])
            raise StepFailure(f"reference integrator failed: {sol.message}", x_fail)
        if seg[0] < seg[-1]:
            ys[i0:], dys[i0:] = sol.y[0], sol.y[1]
        else:
            ys[:i0 + 1], dys[:i0 + 1] = sol.y[0][::-1], sol.y[1][::-1]
    return GridFunction(grid, ys, dys)


def _interior(grid: np.ndarray) -> np.ndarray:
    return grid[2:-2]


def residual(y, yprime, p: OdeProblem) -> GridFunction:
    """``y'' + B y' + C y - R`` at interior grid nodes, y'' by finite differences of y'."""
    grid = p.grid
    yp_grid = yprime if isinstance(yprime, GridFunction) else GridFunction(grid, yprime(grid))
    xs = _interior(grid)
    ypp = finite_diff(yp_grid, xs)
    r = ypp + as_function(p.B)(xs) * yp_grid(xs) + as_function(p.C)(xs) * np.asarray(y(xs)) \
        - as_function(p.R)(xs)
    return GridFunction(xs, r)


def compare(formula, reference: GridFunction) -> VerificationMetrics:
    """Max absolute and norm-wise relative difference on the reference grid.

    ``formula`` is a fitted :class:`~if2ode.solver.Solution` or any callable y(x).
    """
    x = reference.x
    yf = formula.y(x) if hasattr(formula, "y") else formula(x)
    diff = np.abs(np.asarray(yf) - reference.values)
    ref_max = float(np.max(np.abs(reference.values)))
    max_abs = float(np.max(diff))
    rel = max_abs / ref_max if ref_max > 0 else (0.0 if max_abs == 0 else float("inf"))
    return VerificationMetrics(max_abs_error=max_abs, max_rel_error=rel, y_scale=ref_max,
                               grid_size=int(x.size))


def check_factor_conditions(fp: FactorPair, p: OdeProblem) -> tuple[float, float, float]:
    """Normalised maxima of ``g' - gP``, ``(gQ)' - gC`` and ``h' - hQ`` at interior nodes.

    Each defect is divided by ``1 +`` the magnitude of the terms it balances.
    Derivatives are extrapolated differences of the node samples, so exact
    factors score near rounding level rather than at the stencil's truncation
    error.
    """
    grid = fp.grid
    sl = slice(4, -4)
    xs = grid[sl]
    g, h, P, Q = fp.g(grid), fp.h(grid), fp.P(grid), fp.Q(grid)
    dg = finite_diff(GridFunction(grid, g), xs, extrapolate=True)
    dgq = finite_diff(GridFunction(grid, g * Q), xs, extrapolate=True)
    dh = finite_diff(GridFunction(grid, h), xs, extrapolate=True)
    Cv = as_function(p.C)(xs)
    g, h, P, Q = g[sl], h[sl], P[sl], Q[sl]
    d1 = np.abs(dg - g * P) / (1 + np.abs(g) * np.abs(P))
    d2 = np.abs(dgq - g * Cv) / (1 + np.abs(g) * (np.abs(Cv) + np.abs(P) * np.abs(Q)))
    d3 = np.abs(dh - h * Q) / (1 + np.abs(h) * np.abs(Q))
    return float(d1.max()), float(d2.max()), float(d3.max())


def check_gh_invariant(fp: FactorPair, p: OdeProblem) -> float:
    """Max relative deviation of ``g h`` from ``exp(int_{x0}^{x} B)`` on the grid."""
    grid = fp.grid
    AB = antiderivative(as_function(p.B), fp.x0, fp.interval, tol=p.tol.quad, grid=grid)
    target = np.exp(AB.values)
    return float(np.max(np.abs(fp.g(grid) * fp.h(grid) - target) / np.abs(target)))


def verify_solution(p: OdeProblem, sol, imag_residue: float | None = None) -> VerificationMetrics:
    """All metrics for a solved problem; the reference comparison needs ICs."""
    grid = sol.grid
    yv = np.asarray(sol.y(grid))
    if p.ic is not None:
        m = compare(sol, reference_solve(p))
    else:
        m = VerificationMetrics(grid_size=int(grid.size))
    m.y_scale = float(np.max(np.abs(yv)))
    r = residual(sol.y, GridFunction(grid, sol.yprime(grid)), p)
    m.max_residual = float(np.max(np.abs(r.values)))
    m.factor_defects = check_factor_conditions(sol.fp, p)
    m.gh_defect = check_gh_invariant(sol.fp, p)
    m.imag_residue = imag_residue
    return m
