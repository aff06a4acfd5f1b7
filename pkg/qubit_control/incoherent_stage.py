"""
Incoherent Stage
First stage of the two-stage method: exact final state and gradients of the
Bloch system under piecewise constant incoherent control n with v = 0, the
objectives g_1 and g_Phi, and the duration of the unmodified (constant
control) first stage.

x' = (A + B^n n) x + d, with A = [[-g/2, w, 0], [-w, -g/2, 0], [0, 0, -g]],
B^n = -g diag(1, 1, 2), d = (0, 0, g).
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import AccuracyUnreachableError, InvalidStateError
from .quantum_core import BlochState, OpenSystemParams


@dataclass(frozen=True)
class Stage1Problem:
    """Data of the first-stage problem.

    ``t_hat`` is the fixed duration for g_1 (None when the duration is a
    variable). ``P_prime`` = P / 2 weights the distance term of g_Phi.
    g_1 is the squared Bloch distance, twice the squared Hilbert-Schmidt
    distance J_1 of the density matrices, so an accuracy eps on the Bloch
    2-norm means g_1 <= eps^2.
    """

    params: OpenSystemParams
    x0: BlochState
    x_tilde: BlochState
    N: int
    t_hat: Optional[float] = None
    P_prime: float = 0.0

    def __post_init__(self):
        if self.N < 1:
            raise InvalidStateError(f"N must be at least 1, got {self.N}")
        if self.t_hat is not None and self.t_hat <= 0:
            raise InvalidStateError(f"t_hat must be positive, got {self.t_hat}")
        if self.P_prime < 0:
            raise InvalidStateError(f"Penalty weight P' must be nonnegative, got {self.P_prime}")
        self.x0.check()
        self.x_tilde.check()

    def fixed_duration(self) -> float:
        if self.t_hat is None:
            raise InvalidStateError("Problem has no fixed duration t_hat")
        return self.t_hat


@dataclass
class Stage1Gradient:
    """Partial derivatives of x(t_hat, a) and of both objectives"""

    dx_da: np.ndarray  # (3, N)
    dx_dt: np.ndarray  # (3,)
    dg1_da: np.ndarray
    dgphi_da: np.ndarray
    dgphi_dt: float


def _validate(t_hat: float, a) -> np.ndarray:
    amps = np.asarray(a, dtype=float).ravel()
    if t_hat <= 0:
        raise InvalidStateError(f"t_hat must be positive, got {t_hat}")
    if amps.size < 1:
        raise InvalidStateError("Incoherent control needs at least one amplitude")
    if not np.all(np.isfinite(amps)):
        raise InvalidStateError("Incoherent control amplitudes must be finite")
    if np.any(amps < 0):
        raise InvalidStateError("Incoherent control amplitudes must be nonnegative")
    return amps


class _ClosedForm:
    """Shared pieces of the final-state formulas for one (t_hat, a)"""

    def __init__(self, params: OpenSystemParams, x0: BlochState, t_hat: float, amps: np.ndarray):
        N = amps.size
        g, w = params.gamma, params.omega

        self.N = N
        self.gamma = g
        self.omega = w
        self.t_hat = t_hat
        self.x0 = x0
        self.amps = amps
        self.b = 1 + 2 * amps
        self.k = g * t_hat / N
        self.c = self.k * self.b
        self.S = float(np.sum(amps))

        # tail_s = sum_{m > s} c_m, accumulated in the exponent
        reversed_cumsum = np.cumsum(self.c[::-1])[::-1]
        self.tail = np.append(reversed_cumsum[1:], 0.0)
        self.total = float(reversed_cumsum[0])

        self.Z = np.exp(-g * t_hat * (0.5 + self.S / N))
        cos_t, sin_t = np.cos(w * t_hat), np.sin(w * t_hat)
        self.cos_t, self.sin_t = cos_t, sin_t
        self.r1 = x0.x1 * cos_t + x0.x2 * sin_t
        self.r2 = x0.x2 * cos_t - x0.x1 * sin_t

        self.decay3 = np.exp(-self.total)
        self.one_minus = -np.expm1(-self.c)
        self.terms = self.one_minus / self.b * np.exp(-self.tail)

    def state(self) -> np.ndarray:
        x3 = self.x0.x3 * self.decay3 + float(np.sum(self.terms))
        return np.array([self.Z * self.r1, self.Z * self.r2, x3])

    def dx_da(self) -> np.ndarray:
        N, k = self.N, self.k
        jac = np.empty((3, N))
        jac[0, :] = -self.gamma * self.t_hat / N * self.Z * self.r1
        jac[1, :] = -self.gamma * self.t_hat / N * self.Z * self.r2

        e = np.exp(-self.c)
        D = -2 * self.one_minus / self.b ** 2 + 2 * k * e / self.b
        # H(q) = -2k sum_{s < q} terms_s
        H = -2 * k * np.concatenate(([0.0], np.cumsum(self.terms)[:-1]))
        jac[2, :] = -2 * k * self.x0.x3 * self.decay3 + D * np.exp(-self.tail) + H
        return jac

    def dx_dt(self) -> np.ndarray:
        g, w, N = self.gamma, self.omega, self.N
        rate = g * (0.5 + self.S / N)
        dr1 = w * (-self.x0.x1 * self.sin_t + self.x0.x2 * self.cos_t)
        dr2 = w * (-self.x0.x2 * self.sin_t - self.x0.x1 * self.cos_t)

        e = np.exp(-self.c)
        B_tail = self.tail / self.k
        terms_dt = g / (N * self.b) * np.exp(-self.tail) * (self.b * e - self.one_minus * B_tail)
        dx3 = -g * (1 + 2 * self.S / N) * self.x0.x3 * self.decay3 + float(np.sum(terms_dt))

        return np.array([
            self.Z * (-rate * self.r1 + dr1),
            self.Z * (-rate * self.r2 + dr2),
            dx3,
        ])


def stage1_state(prob: Stage1Problem, t_hat: float, a) -> BlochState:
    """x(t_hat, a) from the closed form; no ODE integration"""

    amps = _validate(t_hat, a)
    return BlochState(*_ClosedForm(prob.params, prob.x0, t_hat, amps).state())


def stage1_gradient(prob: Stage1Problem, t_hat: float, a) -> Stage1Gradient:
    """Exact Jacobian of x(t_hat, a) and the gradients of g_1 and g_Phi"""

    amps = _validate(t_hat, a)
    form = _ClosedForm(prob.params, prob.x0, t_hat, amps)
    residual = form.state() - prob.x_tilde.as_array()
    dx_da = form.dx_da()
    dx_dt = form.dx_dt()

    dg1_da = 2 * residual @ dx_da
    return Stage1Gradient(
        dx_da=dx_da,
        dx_dt=dx_dt,
        dg1_da=dg1_da,
        dgphi_da=prob.P_prime * dg1_da,
        dgphi_dt=1.0 + 2 * prob.P_prime * float(residual @ dx_dt),
    )


def stage1_objective_g1(prob: Stage1Problem, a) -> float:
    """g_1(a) = ||x(t_hat, a) - x_tilde||^2 at the problem's fixed t_hat"""

    x = stage1_state(prob, prob.fixed_duration(), a)
    return float(np.sum((x.as_array() - prob.x_tilde.as_array()) ** 2))


def stage1_g1_and_gradient(prob: Stage1Problem, a) -> Tuple[float, np.ndarray]:
    """(g_1, dg_1/da) at the fixed t_hat, in the form the GPM drivers take"""

    t_hat = prob.fixed_duration()
    amps = _validate(t_hat, a)
    form = _ClosedForm(prob.params, prob.x0, t_hat, amps)
    residual = form.state() - prob.x_tilde.as_array()
    return float(residual @ residual), 2 * residual @ form.dx_da()


def stage1_objective_gphi(prob: Stage1Problem, t_hat: float, a) -> float:
    """g_Phi(t_hat, a) = t_hat + P' ||x(t_hat, a) - x_tilde||^2"""

    x = stage1_state(prob, t_hat, a)
    return float(t_hat + prob.P_prime * np.sum((x.as_array() - prob.x_tilde.as_array()) ** 2))


def stage1_gphi_and_gradient(prob: Stage1Problem, t_hat: float, a) -> Tuple[float, float, np.ndarray]:
    """(g_Phi, dg_Phi/dt_hat, dg_Phi/da) for the time-augmented GPM"""

    amps = _validate(t_hat, a)
    form = _ClosedForm(prob.params, prob.x0, t_hat, amps)
    residual = form.state() - prob.x_tilde.as_array()
    value = t_hat + prob.P_prime * float(residual @ residual)
    dt = 1.0 + 2 * prob.P_prime * float(residual @ form.dx_dt())
    return value, dt, 2 * prob.P_prime * residual @ form.dx_da()


def stage1_state_by_recurrence(prob: Stage1Problem, t_hat: float, a) -> BlochState:
    """Interval-by-interval stepping with E^I = exp(-g t_hat b_k / 2N), E^II = (E^I)^2"""

    amps = _validate(t_hat, a)
    N = amps.size
    g, w = prob.params.gamma, prob.params.omega
    dt = t_hat / N
    cos_d, sin_d = np.cos(w * dt), np.sin(w * dt)

    x1, x2, x3 = prob.x0.x1, prob.x0.x2, prob.x0.x3
    for a_k in amps:
        b = 1 + 2 * a_k
        e1 = np.exp(-g * t_hat * b / (2 * N))
        e2 = np.exp(-g * t_hat * b / N)
        x1, x2 = e1 * (x1 * cos_d + x2 * sin_d), e1 * (x2 * cos_d - x1 * sin_d)
        x3 = e2 * x3 + (1 - e2) / b
    return BlochState(float(x1), float(x2), float(x3))


def stage1_trajectory(
    prob: Stage1Problem, t_hat: float, a, samples_per_interval: int = 10
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Dense (times, states, n values) from the exact per-interval solution"""

    amps = _validate(t_hat, a)
    if samples_per_interval < 1:
        raise InvalidStateError(f"samples_per_interval must be at least 1, got {samples_per_interval}")

    N = amps.size
    g, w = prob.params.gamma, prob.params.omega
    dt = t_hat / N
    offsets = np.linspace(0.0, dt, samples_per_interval + 1)[1:]

    times = [0.0]
    states = [prob.x0.as_array()]
    controls = [float(amps[0])]
    x = prob.x0.as_array()

    for k, a_k in enumerate(amps):
        b = 1 + 2 * a_k
        for tau in offsets:
            e1 = np.exp(-g * b * tau / 2)
            e2 = np.exp(-g * b * tau)
            c, s = np.cos(w * tau), np.sin(w * tau)
            states.append(np.array([
                e1 * (x[0] * c + x[1] * s),
                e1 * (x[1] * c - x[0] * s),
                e2 * x[2] + (1 - e2) / b,
            ]))
            times.append(k * dt + tau)
            controls.append(float(a_k))
        x = states[-1]

    return np.array(times), np.array(states), np.array(controls)


def constant_control_state(params: OpenSystemParams, x0: BlochState, p: float, t: float) -> BlochState:
    """Closed form under n == p over [0, t]"""

    if p < 0:
        raise InvalidStateError(f"Constant incoherent control must be nonnegative, got {p}")
    if t < 0:
        raise InvalidStateError(f"Time must be nonnegative, got {t}")

    g, w = params.gamma, params.omega
    b = 1 + 2 * p
    Z = np.exp(-g * t * (0.5 + p))
    E = np.exp(-g * t * b)
    return BlochState(
        float(Z * (x0.x1 * np.cos(w * t) + x0.x2 * np.sin(w * t))),
        float(Z * (x0.x2 * np.cos(w * t) - x0.x1 * np.sin(w * t))),
        float(x0.x3 * E - np.expm1(-g * t * b) / b),
    )


def _constant_control_distance(params: OpenSystemParams, x0: BlochState, x_tilde: BlochState, n_bar: float):
    target = x_tilde.as_array()

    def distance(t: float) -> float:
        return float(np.linalg.norm(constant_control_state(params, x0, n_bar, t).as_array() - target))

    return distance


def unmodified_stage_duration(
    params: OpenSystemParams,
    x0: BlochState,
    x_tilde: BlochState,
    n_bar: float,
    eps: float,
    horizon: Optional[float] = None,
    xtol: float = 1e-6,
) -> float:
    """Smallest t_hat with ||x_bar(t_hat) - x_tilde|| = eps under n == n_bar.

    Scans [0, horizon] (default 10 / gamma) with step 1 / (100 gamma). A
    grid cell qualifies when the distance drops to eps at its right end or
    when a local minimum inside it dips below eps. The crossing is refined
    with brentq to xtol.
    """

    distance = _constant_control_distance(params, x0, x_tilde, n_bar)
    start = distance(0.0)
    if not 0 < eps < start:
        raise InvalidStateError(f"eps must lie in (0, {start:.6g}), got {eps}")

    horizon = horizon if horizon is not None else 10.0 / params.gamma
    step = 1.0 / (100.0 * params.gamma)
    grid = np.arange(0.0, horizon + step / 2, step)
    f = np.array([distance(t) - eps for t in grid])

    for j in range(1, grid.size):
        if f[j] <= 0:
            return float(brentq(lambda t: distance(t) - eps, grid[j - 1], grid[j], xtol=xtol))

        if j + 1 < grid.size and f[j] < f[j - 1] and f[j] <= f[j + 1]:
            dip = minimize_scalar(
                distance, bounds=(grid[j - 1], grid[j + 1]), method="bounded", options={"xatol": xtol}
            )
            if dip.fun <= eps:
                return float(brentq(lambda t: distance(t) - eps, grid[j - 1], dip.x, xtol=xtol))

    raise AccuracyUnreachableError("accuracy unreachable by constant control")


def speedup_ratio(t_unmodified: float, t_modified: float) -> float:
    """How many times shorter the modified first stage is"""

    if t_unmodified <= 0 or t_modified <= 0:
        raise InvalidStateError("Stage durations must be positive")
    return t_unmodified / t_modified
