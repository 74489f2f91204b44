"""Random expression trees for property tests."""

from __future__ import annotations

import numpy as np

from if2ode.expr import FUNCTIONS, Add, Constant, Div, Func, Mul, Neg, Pow, Sub, X

_CONSTANTS = [0.0, 1.0, 2.0, 3.0, 0.5, 0.25, 1.5, 10.0, 1e-3, 2.5e10, 1e16, 123.456]


SMALL_CONSTANTS = [0.0, 1.0, 2.0, 3.0, 0.5, 0.25, 1.5]


def random_tree(rng: np.random.Generator, depth: int = 4, constants=_CONSTANTS):
    """Any tree the parser can produce (non-negative literals only)."""
    if depth == 0 or rng.random() < 0.2:
        return X if rng.random() < 0.5 else Constant(float(rng.choice(constants)))
    kind = rng.integers(0, 8)
    if kind == 0:
        return Neg(random_tree(rng, depth - 1, constants))
    if kind == 1:
        return Func(str(rng.choice(FUNCTIONS)), random_tree(rng, depth - 1, constants))
    op = (Add, Sub, Mul, Div, Pow, Add)[kind - 2]
    return op(random_tree(rng, depth - 1, constants), random_tree(rng, depth - 1, constants))


def random_smooth(rng: np.random.Generator, depth: int = 3):
    """Trees that are smooth and moderately sized on [-2, 2]."""
    if depth == 0 or rng.random() < 0.15:
        if rng.random() < 0.6:
            return X
        return Constant(round(float(rng.uniform(0.5, 2.0)), 3))
    kind = rng.integers(0, 11)
    a = random_smooth(rng, depth - 1)
    if kind == 0:
        return Add(a, random_smooth(rng, depth - 1))
    if kind == 1:
        return Sub(a, random_smooth(rng, depth - 1))
    if kind == 2:
        return Mul(a, random_smooth(rng, depth - 1))
    if kind == 3:
        return Div(a, Add(Constant(2.0), Pow(random_smooth(rng, depth - 1), Constant(2.0))))
    if kind == 4:
        return Neg(a)
    if kind == 5:
        return Func(str(rng.choice(["sin", "cos", "tanh"])), a)
    if kind == 6:
        return Func("exp", Func("sin", a))
    if kind == 7:
        return Func("ln", Add(Constant(2.0), Pow(a, Constant(2.0))))
    if kind == 8:
        return Func("sqrt", Add(Constant(1.0), Pow(a, Constant(2.0))))
    if kind == 9:
        return Pow(Add(Constant(2.0), Func("sin", a)), Func("cos", X))
    return Pow(a, Constant(float(rng.integers(2, 4))))
