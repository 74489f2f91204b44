"""Embedded Dormand-Prince 5(4) stepper that lands on prescribed nodes."""

from __future__ import annotations

import numpy as np

from .errors import SingularityDetected, StepFailure

__all__ = ["integrate_to_nodes"]

_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
# 5th-order weights equal the last row of _A (FSAL); _E is b5 - b4.
_B5 = _A[6] + (0.0,)
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0


def integrate_to_nodes(rhs, nodes, y0: complex, rtol: float = 1e-10, atol: float = 1e-10,
                       blowup: float | None = None, max_steps: int = 1_000_000) -> np.ndarray:
    """Integrate the scalar ODE ``y' = rhs(x, y)`` through ``nodes``.

    ``nodes`` is monotone (either direction) and starts at the initial point.
    Steps are clipped so every node is hit exactly; values at the nodes are
    returned.  If ``|y|`` exceeds ``blowup`` (or the step size collapses while
    ``|y|`` is growing) :class:`SingularityDetected` is raised at the current
    abscissa.
    """
    nodes = np.asarray(nodes, dtype=float)
    out = np.empty(nodes.size, dtype=complex)
    x = float(nodes[0])
    y = complex(y0)
    out[0] = y
    if nodes.size == 1:
        return out
    h = (nodes[1] - nodes[0])
    k1 = complex(rhs(x, y))
    steps = 0
    for i in range(1, nodes.size):
        target = float(nodes[i])
        while x != target:
            steps += 1
            if steps > max_steps:
                raise StepFailure("too many steps", x)
            remaining = target - x
            last = abs(h) >= abs(remaining)
            step = remaining if last else h
            ks = [k1]
            for s in range(1, 7):
                yi = y + step * sum(a * k for a, k in zip(_A[s], ks))
                ks.append(complex(rhs(x + _C[s] * step, yi)))
            y_new = y + step * sum(b * k for b, k in zip(_B5, ks))
            err = abs(step * sum(e * k for e, k in zip(_E, ks)))
            scale = atol + rtol * max(abs(y), abs(y_new))
            ratio = err / scale if np.isfinite(err) and np.isfinite(abs(y_new)) else np.inf
            if ratio <= 1.0:
                x = target if last else x + step
                y = y_new
                k1 = ks[6]
                if blowup is not None and abs(y) > blowup:
                    raise SingularityDetected(x)
                factor = _MAX_FACTOR if ratio == 0 else min(_MAX_FACTOR,
                                                            _SAFETY * ratio ** -0.2)
                if not last or factor < 1.0:
                    h = step * factor
            else:
                factor = _MIN_FACTOR if not np.isfinite(ratio) else max(
                    _MIN_FACTOR, _SAFETY * ratio ** -0.2)
                h = step * factor
                if abs(h) < 1e-14 * max(1.0, abs(x)):
                    if blowup is not None:
                        raise SingularityDetected(x)
                    raise StepFailure("step size underflow", x)
        out[i] = y
    return out
