"""Second-order linear ODE solver built on a pair of integrating factors."""

from .classify import OdeProblem, Route, RouteVerdict, Tolerances, classify, discriminant
from .errors import (
    DomainError, If2OdeError, IntervalTooLong, InvalidComplementary, OutOfRange, ParseError,
    SingularityDetected, SingularSystem, StepFailure, ToleranceNotMet, ZeroOnInterval,
)
from .expr import Expr, detect_constant, differentiate, evaluate, parse, simplify
from .factors import (
    FactorPair, RiccatiConfig, factors_constant, factors_discriminant_const,
    factors_discriminant_zero, factors_from_complementary, factors_riccati, riccati_rhs,
)
from .quadrature import GridFunction, antiderivative, finite_diff, integrate
from .solver import (
    Solution, SolveConfig, SolveReport, apply_initial_conditions, assemble_general,
    derivative_of_solution, solve,
)
from .verify import (
    VerificationMetrics, check_factor_conditions, check_gh_invariant, compare, reference_solve,
    residual,
)

__version__ = "0.1.0"
