"""
ODE Integrators
Fixed-step classic Runge-Kutta used by the oracles and the stage-2 search
"""

from typing import Callable, Tuple

import numpy as np


def rk4_step(rhs: Callable[[float, np.ndarray], np.ndarray], t: float, x: np.ndarray, h: float) -> np.ndarray:
    """One classic 4th-order Runge-Kutta step"""

    k1 = rhs(t, x)
    k2 = rhs(t + h / 2, x + h / 2 * k1)
    k3 = rhs(t + h / 2, x + h / 2 * k2)
    k4 = rhs(t + h, x + h * k3)
    return x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def rk4_integrate(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    x0: np.ndarray,
    t0: float,
    t1: float,
    step: float,
    sample_every: int = 1,
) -> Tuple[np.ndarray, np.ndarray]:
    """Integrate x' = rhs(t, x) from t0 to t1 with a fixed step.

    The step is shrunk so that an integer number of steps lands exactly on
    t1. Returns (times, states) sampled every ``sample_every`` steps; the
    first and last samples are always t0 and t1. States may carry leading
    batch dimensions; the rhs must accept them.
    """

    if step <= 0:
        raise ValueError(f"Integration step must be positive, got {step}")
    if t1 < t0:
        raise ValueError(f"Integration span is reversed: [{t0}, {t1}]")

    n_steps = max(int(np.ceil((t1 - t0) / step - 1e-9)), 1) if t1 > t0 else 0
    h = (t1 - t0) / n_steps if n_steps else 0.0

    x = np.asarray(x0)
    x = x.astype(np.result_type(x.dtype, np.float64))
    times = [t0]
    states = [x.copy()]

    for j in range(1, n_steps + 1):
        x = rk4_step(rhs, t0 + (j - 1) * h, x, h)
        if j % sample_every == 0 or j == n_steps:
            times.append(t0 + j * h)
            states.append(x.copy())

    return np.array(times), np.array(states)
