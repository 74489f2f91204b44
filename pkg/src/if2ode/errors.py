"""Exception types shared across the package."""

from __future__ import annotations


class If2OdeError(Exception):
    """Base class for every library error.

    ``stage`` is filled in by :func:`if2ode.solver.solve` with the name of the
    pipeline stage that failed (``classify``, ``factors``, ``assemble``, ...).
    """

    stage: str | None = None


class ParseError(If2OdeError):
    def __init__(self, offset: int, expected: str, found: str):
        self.offset = offset
        self.expected = expected
        self.found = found
        super().__init__(f"at offset {offset}: expected {expected}, found {found}")


class DomainError(If2OdeError, ArithmeticError):
    def __init__(self, message: str, x=None):
        self.x = x
        if x is not None:
            message = f"{message} at x={_fmt(x)}"
        super().__init__(message)


class ToleranceNotMet(If2OdeError):
    def __init__(self, achieved: float, requested: float):
        self.achieved = achieved
        self.requested = requested
        super().__init__(
            f"quadrature tolerance not met: estimated error {achieved:.3g} > {requested:.3g}"
        )


class OutOfRange(If2OdeError, ValueError):
    pass


class InvalidComplementary(If2OdeError, ValueError):
    def __init__(self, max_residual: float, limit: float):
        self.max_residual = max_residual
        self.limit = limit
        super().__init__(
            f"supplied complementary solution fails the homogeneous equation: "
            f"max residual {max_residual:.3g} > {limit:.3g}"
        )


class IntervalTooLong(If2OdeError):
    def __init__(self, length: float, limit: float):
        self.length = length
        self.limit = limit
        super().__init__(
            f"interval length {length:.6g} >= {limit:.6g}: the oscillatory factor "
            f"must vanish inside the interval"
        )


class ZeroOnInterval(If2OdeError):
    def __init__(self, x_zero: float):
        self.x_zero = x_zero
        super().__init__(
            f"complementary solution vanishes near x={x_zero:.6g}; shrink the interval"
        )


class SingularityDetected(If2OdeError):
    def __init__(self, x_sing: float, q0=None):
        self.x_sing = x_sing
        self.q0 = q0
        super().__init__(
            f"SingularityDetected near x={x_sing:.5g}; try --riccati-q0 <other>"
        )


class SingularSystem(If2OdeError):
    pass


class StepFailure(If2OdeError):
    def __init__(self, message: str, x=None):
        self.x = x
        if x is not None:
            message = f"{message} near x={x:.6g}"
        super().__init__(message)


def _fmt(x) -> str:
    try:
        z = complex(x)
    except TypeError:
        return str(x)
    if z.imag == 0:
        return f"{z.real:.6g}"
    return f"{z:.6g}"
