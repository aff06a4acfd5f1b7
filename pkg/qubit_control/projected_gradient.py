"""
Projected Gradient
One-step and two-step (momentum) gradient projection methods over box
constraints, the duration-augmented variant and the external penalty on
successive-amplitude variation
"""

from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from .errors import ConfigError, InvalidStateError, NonFiniteGradientError
from .reports import OptimizerReport

# g(a) -> (value, gradient)
Objective = Callable[[np.ndarray], Tuple[float, np.ndarray]]
# g(t_hat, a) -> (value, d/dt_hat, gradient in a)
TimedObjective = Callable[[float, np.ndarray], Tuple[float, float, np.ndarray]]

GPM_VARIANTS = ("GPM-1", "GPM-2")


@dataclass(frozen=True)
class BoxInterval:
    """Closed interval [lo, hi]; hi may be +inf"""

    lo: float = 0.0
    hi: float = np.inf

    def __post_init__(self):
        if np.isnan(self.lo) or np.isnan(self.hi) or self.lo > self.hi:
            raise ConfigError(f"Invalid interval [{self.lo}, {self.hi}]")

    @classmethod
    def nonnegative(cls) -> "BoxInterval":
        """Q = [0, inf)"""
        return cls(0.0, np.inf)

    @classmethod
    def capped(cls, n_max: float) -> "BoxInterval":
        """Q = [0, n_max]"""
        return cls(0.0, float(n_max))

    def contains(self, a) -> bool:
        arr = np.asarray(a, dtype=float)
        return bool(np.all(arr >= self.lo) and np.all(arr <= self.hi))


def project_box(z, Q: BoxInterval):
    """Nearest point of Q, elementwise for arrays"""

    if np.ndim(z) == 0:
        return float(min(max(float(z), Q.lo), Q.hi))
    return np.clip(np.asarray(z, dtype=float), Q.lo, Q.hi)


@dataclass(frozen=True)
class GpmConfig:
    """Step size, momentum, iteration cap and stopping threshold.

    ``threshold`` is compared with the objective itself (epsilon^2 for the
    squared distance g_1). GPM-1 ignores ``lam``. ``t_min``/``t_max`` bound
    the duration iterate of the time-augmented scheme; ``beta_time`` is its
    step size and defaults to ``beta``.
    """

    beta: float = 10.0
    lam: float = 0.999
    max_iters: int = 1000
    threshold: float = 1e-6
    variant: str = "GPM-2"
    t_min: Optional[float] = None
    t_max: Optional[float] = None
    beta_time: Optional[float] = None
    guard_window: int = 50
    guard_factor: float = 10.0
    beta_schedule: Optional[Callable[[int], float]] = None

    def __post_init__(self):
        if self.beta <= 0:
            raise ConfigError(f"Step size beta must be positive, got {self.beta}")
        if not 0 <= self.lam < 1:
            raise ConfigError(f"Momentum lambda must lie in [0, 1), got {self.lam}")
        if self.max_iters < 0:
            raise ConfigError(f"max_iters must be nonnegative, got {self.max_iters}")
        if self.variant not in GPM_VARIANTS:
            raise ConfigError(f"GPM variant must be one of {GPM_VARIANTS}, got '{self.variant}'")
        if (self.t_min is None) != (self.t_max is None):
            raise ConfigError("Time box needs both t_min and t_max")
        if self.t_min is not None and not 0 < self.t_min < self.t_max:
            raise ConfigError(f"Time box needs 0 < t_min < t_max, got [{self.t_min}, {self.t_max}]")
        if self.beta_time is not None and self.beta_time <= 0:
            raise ConfigError(f"Duration step size must be positive, got {self.beta_time}")
        if self.guard_window < 1 or self.guard_factor <= 1:
            raise ConfigError("Divergence guard needs window >= 1 and factor > 1")

    @property
    def momentum(self) -> float:
        return 0.0 if self.variant == "GPM-1" else self.lam

    def step_factor(self, iteration: int) -> float:
        """Multiplier applied to beta at iteration m (1 without a schedule)"""

        if self.beta_schedule is None:
            return 1.0
        return float(self.beta_schedule(iteration))


@dataclass(frozen=True)
class PenaltyConfig:
    """R^alpha weight and the cap delta_a on squared amplitude jumps"""

    alpha: float
    delta_a: float

    def __post_init__(self):
        if self.alpha <= 0:
            raise ConfigError(f"Penalty weight alpha must be positive, got {self.alpha}")
        if self.delta_a <= 0:
            raise ConfigError(f"Variation cap delta_a must be positive, got {self.delta_a}")


def _check_finite(value: float, grad: np.ndarray, iteration: int):
    if not np.isfinite(value) or not np.all(np.isfinite(grad)):
        raise NonFiniteGradientError(
            f"Non-finite objective or gradient at iteration {iteration} (value {value})"
        )


def _diverged(history, value: float, cfg: GpmConfig, since: int) -> bool:
    """g grew more than guard_factor x against the value guard_window iterates back.

    The window never reaches back past ``since`` (the last restart).
    """

    start = max(since, len(history) - cfg.guard_window)
    return value > cfg.guard_factor * history[start]


def gpm_minimize(
    g: Objective,
    a0,
    Q: BoxInterval,
    cfg: GpmConfig,
    keep_iterates: bool = False,
) -> OptimizerReport:
    """a^(m+1) = Pr_Q(a^(m) - beta grad g + lambda (a^(m) - a^(m-1))).

    The first step (and the first step after a divergence-guard restart) has
    no momentum term. ``history[m]`` is g(a^(m)); the run stops as soon as
    g < cfg.threshold or after cfg.max_iters steps.
    """

    a = np.array(a0, dtype=float)
    if not Q.contains(a):
        raise InvalidStateError(f"Starting control is outside [{Q.lo}, {Q.hi}]")

    a_prev = a.copy()
    beta = cfg.beta
    lam = cfg.momentum
    value, grad = g(a)
    _check_finite(value, grad, 0)

    history = [float(value)]
    iterates = [a.copy()] if keep_iterates else []
    restarts = 0
    restarted_at = 0
    iteration = 0

    while iteration < cfg.max_iters and value >= cfg.threshold:
        step = beta * cfg.step_factor(iteration)
        a_next = project_box(a - step * grad + lam * (a - a_prev), Q)
        a_prev, a = a, a_next
        iteration += 1

        value, grad = g(a)
        _check_finite(value, grad, iteration)
        if _diverged(history, value, cfg, restarted_at):
            beta /= 2
            a_prev = a.copy()
            restarts += 1
            restarted_at = len(history)
            print(f"⚠️  GPM divergence at iteration {iteration}: beta halved to {beta:g}, momentum restarted")

        history.append(float(value))
        if keep_iterates:
            iterates.append(a.copy())

    return OptimizerReport(
        x=a,
        fun=float(value),
        history=history,
        stop_reason="threshold" if value < cfg.threshold else "max_iters",
        n_iterations=iteration,
        n_evaluations=iteration + 1,
        iterates=iterates,
        extra={"beta_final": beta, "guard_restarts": restarts},
    )


def gpm_minimize_with_time(
    g_phi: TimedObjective,
    t0: float,
    a0,
    Q: BoxInterval,
    cfg: GpmConfig,
    keep_iterates: bool = False,
) -> OptimizerReport:
    """Simultaneous projected momentum steps in (t_hat, a).

    Gradients are taken at the current pair; t_hat is projected onto
    [cfg.t_min, cfg.t_max]. ``duration_history[m]`` is the m-th t_hat.
    """

    if cfg.t_min is None:
        raise ConfigError("Time-augmented GPM needs t_min and t_max")
    time_box = BoxInterval(cfg.t_min, cfg.t_max)
    if not time_box.contains(t0):
        raise InvalidStateError(f"Starting duration {t0} is outside [{cfg.t_min}, {cfg.t_max}]")

    a = np.array(a0, dtype=float)
    if not Q.contains(a):
        raise InvalidStateError(f"Starting control is outside [{Q.lo}, {Q.hi}]")

    t, t_prev = float(t0), float(t0)
    a_prev = a.copy()
    beta = cfg.beta
    beta_t = cfg.beta_time if cfg.beta_time is not None else cfg.beta
    lam = cfg.momentum

    value, dt_grad, grad = g_phi(t, a)
    _check_finite(value, np.append(grad, dt_grad), 0)

    history = [float(value)]
    durations = [t]
    iterates = [a.copy()] if keep_iterates else []
    restarts = 0
    restarted_at = 0
    iteration = 0

    while iteration < cfg.max_iters and value >= cfg.threshold:
        factor = cfg.step_factor(iteration)
        t_next = project_box(t - beta_t * factor * dt_grad + lam * (t - t_prev), time_box)
        a_next = project_box(a - beta * factor * grad + lam * (a - a_prev), Q)
        t_prev, t = t, t_next
        a_prev, a = a, a_next
        iteration += 1

        value, dt_grad, grad = g_phi(t, a)
        _check_finite(value, np.append(grad, dt_grad), iteration)
        if _diverged(history, value, cfg, restarted_at):
            beta /= 2
            beta_t /= 2
            a_prev, t_prev = a.copy(), t
            restarts += 1
            restarted_at = len(history)
            print(f"⚠️  GPM divergence at iteration {iteration}: beta halved to {beta:g}, momentum restarted")

        history.append(float(value))
        durations.append(t)
        if keep_iterates:
            iterates.append(a.copy())

    return OptimizerReport(
        x=a,
        fun=float(value),
        history=history,
        stop_reason="threshold" if value < cfg.threshold else "max_iters",
        n_iterations=iteration,
        n_evaluations=iteration + 1,
        iterates=iterates,
        duration=t,
        duration_history=durations,
        extra={"beta_final": beta, "guard_restarts": restarts},
    )


def penalty_value_and_gradient(a, cfg: PenaltyConfig) -> Tuple[float, np.ndarray]:
    """R^alpha(a) = alpha sum_k max((a_{k+1} - a_k)^2 - delta_a, 0)^2 and its gradient"""

    a = np.asarray(a, dtype=float)
    if a.size < 2:
        raise InvalidStateError(f"Penalty needs at least two amplitudes, got {a.size}")

    jumps = np.diff(a)
    excess = np.maximum(jumps ** 2 - cfg.delta_a, 0.0)
    value = cfg.alpha * float(np.sum(excess ** 2))

    # d/d(jump_k) of alpha * excess_k^2
    slope = 4 * cfg.alpha * excess * jumps
    grad = np.zeros(a.size)
    grad[:-1] -= slope
    grad[1:] += slope
    return value, grad


def penalized(objective: Objective, cfg: PenaltyConfig) -> Objective:
    """g(a) + R^alpha(a)"""

    def combined(a: np.ndarray) -> Tuple[float, np.ndarray]:
        value, grad = objective(a)
        r_value, r_grad = penalty_value_and_gradient(a, cfg)
        return value + r_value, grad + r_grad

    return combined
