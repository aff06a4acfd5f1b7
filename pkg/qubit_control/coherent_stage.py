"""
Coherent Stage
Second stage of the two-stage method: RK4 integration of the Bloch system
with harmonic coherent control and n = 0, the amplitude / stopping-time grid
search for the cos and zero-endpoint sin families, and the adjoint gradient
of the regularized objective J_2^alpha
"""

from concurrent.futures import Executor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.integrate import trapezoid

from .errors import AccuracyUnreachableError, ConfigError, InvalidStateError
from .integrators import rk4_integrate, rk4_step
from .quantum_core import BlochState, OpenSystemParams

ControlFn = Callable[[float], object]

FAMILIES = ("cos", "sin")


def bloch_matrices(params: OpenSystemParams) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """A, B^v, B^n, d of x' = (A + B^v v + B^n n) x + d"""

    g, w, mu = params.gamma, params.omega, params.mu
    A = np.array([[-g / 2, w, 0.0], [-w, -g / 2, 0.0], [0.0, 0.0, -g]])
    Bv = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, -2 * mu], [0.0, 2 * mu, 0.0]])
    Bn = -g * np.diag([1.0, 1.0, 2.0])
    d = np.array([0.0, 0.0, g])
    return A, Bv, Bn, d


def bloch_rhs(params: OpenSystemParams, v: Optional[ControlFn] = None, n: Optional[ControlFn] = None):
    """Right-hand side for states of shape (..., 3).

    v and n map t to a scalar or to an array broadcastable against the
    leading batch dimensions of the state.
    """

    g, w, mu = params.gamma, params.omega, params.mu

    def rhs(t: float, x: np.ndarray) -> np.ndarray:
        v_t = 0.0 if v is None else v(t)
        n_t = 0.0 if n is None else n(t)
        if not (np.all(np.isfinite(v_t)) and np.all(np.isfinite(n_t))):
            raise InvalidStateError(f"Control is not finite at t = {t}")

        x1, x2, x3 = x[..., 0], x[..., 1], x[..., 2]
        damp = g / 2 * (1 + 2 * n_t)
        out = np.empty_like(x)
        out[..., 0] = -damp * x1 + w * x2
        out[..., 1] = -w * x1 - damp * x2 - 2 * mu * v_t * x3
        out[..., 2] = 2 * mu * v_t * x2 - g * (1 + 2 * n_t) * x3 + g
        return out

    return rhs


def integrate_bloch(
    params: OpenSystemParams,
    x_init: BlochState,
    v: Optional[ControlFn],
    n: Optional[ControlFn],
    span: Tuple[float, float],
    step: float,
    sample_every: int = 1,
) -> Tuple[np.ndarray, np.ndarray]:
    """Classic RK4 trajectory (times, states) of the Bloch system over span"""

    if step <= 0:
        raise InvalidStateError(f"Integration step must be positive, got {step}")
    t0, t1 = span
    return rk4_integrate(bloch_rhs(params, v, n), x_init.as_array(), t0, t1, step, sample_every)


@dataclass(frozen=True)
class HarmonicControl:
    """v(t) = A cos(Omega t) or v(t) = A sin(pi d (t - t_start) / (t_end - t_start))"""

    family: str
    amplitude: float
    omega: float = 1.0
    d: int = 1
    t_start: float = 0.0
    t_end: Optional[float] = None
    bound: Optional[float] = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidStateError(f"Control family must be one of {FAMILIES}, got '{self.family}'")
        if self.bound is not None and abs(self.amplitude) > self.bound:
            raise InvalidStateError(f"Amplitude {self.amplitude} exceeds bound {self.bound}")
        if self.family == "sin":
            if self.d < 1:
                raise InvalidStateError(f"Harmonic index d must be at least 1, got {self.d}")
            if self.t_end is None or self.t_end <= self.t_start:
                raise InvalidStateError("sin family needs a window with t_end > t_start")

    def __call__(self, t):
        if self.family == "cos":
            return self.amplitude * np.cos(self.omega * t)
        window = self.t_end - self.t_start
        return self.amplitude * np.sin(np.pi * self.d * (t - self.t_start) / window)


@dataclass(frozen=True)
class Stage2SearchSpec:
    """Amplitude grid dA * {-m..m} (m = round(nu / dA)), stopping times t_hat + k dt up to t_hat + horizon"""

    family: str = "cos"
    t_hat: float = 450.0
    horizon: float = 40.0
    nu: float = 100.0
    dA: float = 0.05
    dt: float = 0.01
    eps: float = 1e-2
    omega: float = 1.0
    d_max: int = 3
    integration_step: float = 1e-3

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"Stage-2 family must be one of {FAMILIES}, got '{self.family}'")
        if self.dA <= 0 or self.dt <= 0 or self.integration_step <= 0:
            raise ConfigError("dA, dt and integration_step must be positive")
        if self.horizon <= 0:
            raise ConfigError(f"Search horizon must be positive, got {self.horizon}")
        if self.eps <= 0:
            raise ConfigError(f"eps must be positive, got {self.eps}")
        if self.nu < 0:
            raise ConfigError(f"Amplitude bound must be nonnegative, got {self.nu}")
        if self.d_max < 1:
            raise ConfigError(f"d_max must be at least 1, got {self.d_max}")

    def amplitudes(self) -> np.ndarray:
        m = int(round(self.nu / self.dA))
        return self.dA * np.arange(-m, m + 1)

    def n_time_nodes(self) -> int:
        return int(round(self.horizon / self.dt))

    def substeps(self) -> int:
        """RK4 steps per time node"""
        return max(int(np.ceil(self.dt / self.integration_step - 1e-9)), 1)


@dataclass
class Stage2Result:
    """Selected (A*, T*) with the sampled trajectory of the winning control"""

    family: str
    amplitude: float
    T: float
    distance: float
    d: Optional[int] = None
    omega: Optional[float] = None
    times: np.ndarray = field(default_factory=lambda: np.empty(0))
    states: np.ndarray = field(default_factory=lambda: np.empty((0, 3)))
    controls: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def v_start(self) -> float:
        return float(self.controls[0]) if self.controls.size else 0.0

    @property
    def v_end(self) -> float:
        return float(self.controls[-1]) if self.controls.size else 0.0

    def to_dict(self) -> dict:
        summary = {
            "family": self.family,
            "amplitude": float(self.amplitude),
            "T": float(self.T),
            "distance": float(self.distance),
            "v_start": self.v_start,
            "v_end": self.v_end,
        }
        if self.d is not None:
            summary["d"] = int(self.d)
        if self.omega is not None:
            summary["omega"] = float(self.omega)
        return summary


# (time node, |A|, A, d, distance); tuple order is the selection order
_Hit = Tuple[int, float, float, int, float]


def _scan_cos_chunk(params, x_init, x_target, spec: Stage2SearchSpec, amps: np.ndarray) -> Optional[_Hit]:
    """First time node at which any amplitude of the chunk is within eps"""

    rhs = bloch_rhs(params, v=lambda t: amps * np.cos(spec.omega * t))
    x = np.tile(x_init.as_array(), (amps.size, 1))
    substeps = spec.substeps()
    h = spec.dt / substeps
    target = x_target.as_array()

    for k in range(1, spec.n_time_nodes() + 1):
        t = spec.t_hat + (k - 1) * spec.dt
        for j in range(substeps):
            x = rk4_step(rhs, t + j * h, x, h)
        dist = np.linalg.norm(x - target, axis=1)
        passing = np.flatnonzero(dist <= spec.eps)
        if passing.size:
            j = min(passing, key=lambda idx: (abs(amps[idx]), amps[idx]))
            return (k, abs(float(amps[j])), float(amps[j]), 1, float(dist[j]))
    return None


def _scan_sin_node(params, x_init, x_target, spec: Stage2SearchSpec, k: int, amps: np.ndarray) -> Optional[_Hit]:
    """All (d, A) for the single stopping time t_hat + k dt"""

    window = k * spec.dt
    d_values = np.arange(1, spec.d_max + 1)
    # batch layout (d, A)
    A_grid = np.broadcast_to(amps, (d_values.size, amps.size))
    D_grid = np.broadcast_to(d_values[:, None], A_grid.shape)

    def v(t):
        return A_grid * np.sin(np.pi * D_grid * (t - spec.t_hat) / window)

    x0 = np.broadcast_to(x_init.as_array(), A_grid.shape + (3,))
    _, states = rk4_integrate(
        bloch_rhs(params, v=v), x0, spec.t_hat, spec.t_hat + window, spec.integration_step, sample_every=10 ** 9
    )
    dist = np.linalg.norm(states[-1] - x_target.as_array(), axis=-1)
    passing = np.argwhere(dist <= spec.eps)
    if not passing.size:
        return None
    di, ai = min(passing, key=lambda idx: (abs(amps[idx[1]]), amps[idx[1]], d_values[idx[0]]))
    return (k, abs(float(amps[ai])), float(amps[ai]), int(d_values[di]), float(dist[di, ai]))


def _chunks(amps: np.ndarray, count: int) -> List[np.ndarray]:
    return [c for c in np.array_split(amps, max(count, 1)) if c.size]


def stage2_grid_search(
    params: OpenSystemParams,
    x_init: BlochState,
    x_target: BlochState,
    spec: Stage2SearchSpec,
    executor: Optional[Executor] = None,
    chunks: int = 1,
) -> Stage2Result:
    """Smallest stopping time t_k with ||x(t_k) - x_target|| <= eps over the amplitude grid.

    n = 0 throughout. Ties at equal t_k go to the smallest |A| (negative
    first) and then the smallest d. Raises AccuracyUnreachableError when no
    node passes.
    """

    amps = spec.amplitudes()
    start_distance = float(np.linalg.norm(x_init.as_array() - x_target.as_array()))

    if start_distance <= spec.eps:
        hit: Optional[_Hit] = (0, 0.0, 0.0, 1, start_distance)
    elif spec.family == "cos":
        parts = _chunks(amps, chunks)
        if executor is None:
            hits = [_scan_cos_chunk(params, x_init, x_target, spec, p) for p in parts]
        else:
            hits = list(executor.map(lambda p: _scan_cos_chunk(params, x_init, x_target, spec, p), parts))
        found = [h for h in hits if h is not None]
        hit = min(found) if found else None
    else:
        hit = None
        parts = _chunks(amps, chunks)
        for k in range(1, spec.n_time_nodes() + 1):
            if executor is None:
                hits = [_scan_sin_node(params, x_init, x_target, spec, k, p) for p in parts]
            else:
                hits = list(executor.map(lambda p: _scan_sin_node(params, x_init, x_target, spec, k, p), parts))
            found = [h for h in hits if h is not None]
            if found:
                hit = min(found)
                break

    if hit is None:
        raise AccuracyUnreachableError(
            f"accuracy unreachable on grid: no node within eps = {spec.eps} up to t = {spec.t_hat + spec.horizon}"
        )

    k, _, amplitude, d, distance = hit
    T = spec.t_hat + k * spec.dt
    result = Stage2Result(
        family=spec.family,
        amplitude=amplitude,
        T=T,
        distance=distance,
        d=d if spec.family == "sin" else None,
        omega=spec.omega if spec.family == "cos" else None,
    )
    if k == 0:
        result.times = np.array([spec.t_hat])
        result.states = x_init.as_array()[None, :]
        result.controls = np.array([0.0])
        return result

    if spec.family == "cos":
        control = HarmonicControl("cos", amplitude, omega=spec.omega)
    else:
        control = HarmonicControl("sin", amplitude, d=d, t_start=spec.t_hat, t_end=T)
    result.times, result.states = integrate_bloch(
        params, x_init, control, None, (spec.t_hat, T), spec.dt / spec.substeps(), sample_every=spec.substeps()
    )
    result.controls = np.array([control(t) for t in result.times])
    result.distance = float(np.linalg.norm(result.states[-1] - x_target.as_array()))
    return result


@dataclass(frozen=True)
class AdjointConfig:
    """J_2^alpha weight alpha, shape b of S(t) and the window [t_hat, T]"""

    alpha: float
    b: float
    t_hat: float
    T: float

    def __post_init__(self):
        if self.alpha < 0:
            raise ConfigError(f"alpha must be nonnegative, got {self.alpha}")
        if self.b <= 0:
            raise ConfigError(f"b must be positive, got {self.b}")
        if self.T <= self.t_hat:
            raise ConfigError(f"Final time {self.T} must exceed t_hat {self.t_hat}")

    def sample_times(self, count: int) -> np.ndarray:
        return np.linspace(self.t_hat, self.T, count)


def control_energy_weight(t, cfg: AdjointConfig):
    """S(t) = exp(-b ((t - t_hat) / (T - t_hat) - 1/2)^2)"""

    s = (np.asarray(t, dtype=float) - cfg.t_hat) / (cfg.T - cfg.t_hat)
    return np.exp(-cfg.b * (s - 0.5) ** 2)


def _sampled(v, cfg: AdjointConfig) -> Tuple[np.ndarray, np.ndarray]:
    v = np.asarray(v, dtype=float).ravel()
    if v.size < 2:
        raise InvalidStateError("Sampled control needs at least two samples")
    if not np.all(np.isfinite(v)):
        raise InvalidStateError("Sampled control must be finite")
    return cfg.sample_times(v.size), v


def _forward(params, x_init: BlochState, times: np.ndarray, v: np.ndarray) -> np.ndarray:
    h = (times[-1] - times[0]) / (times.size - 1)
    _, states = rk4_integrate(
        bloch_rhs(params, v=lambda t: np.interp(t, times, v)), x_init.as_array(), times[0], times[-1], h
    )
    return states


def objective_j2alpha(
    params: OpenSystemParams, x_init: BlochState, x_target: BlochState, v, cfg: AdjointConfig
) -> float:
    """||x(T) - x_target||^2 + alpha * trapz(v^2 / S) for v sampled uniformly on [t_hat, T]"""

    times, v = _sampled(v, cfg)
    states = _forward(params, x_init, times, v)
    terminal = float(np.sum((states[-1] - x_target.as_array()) ** 2))
    return terminal + cfg.alpha * float(trapezoid(v ** 2 / control_energy_weight(times, cfg), times))


def adjoint_gradient_j2alpha(
    params: OpenSystemParams, x_init: BlochState, x_target: BlochState, v, cfg: AdjointConfig
) -> np.ndarray:
    """delta J / delta v at the samples: -2 mu (p3 x2 - p2 x3) + 2 alpha v / S.

    p solves p' = -(A^T + (B^v)^T v) p backward from p(T) = -2 (x(T) - x_target).
    The step v <- v - beta * gradient decreases J_2^alpha for small beta.
    """

    times, v = _sampled(v, cfg)
    states = _forward(params, x_init, times, v)
    A, Bv, _, _ = bloch_matrices(params)
    T = times[-1]

    def reversed_rhs(tau: float, p: np.ndarray) -> np.ndarray:
        return (A.T + Bv.T * np.interp(T - tau, times, v)) @ p

    pT = -2 * (states[-1] - x_target.as_array())
    _, p_reversed = rk4_integrate(reversed_rhs, pT, 0.0, T - times[0], (T - times[0]) / (times.size - 1))
    p = p_reversed[::-1]

    mu = params.mu
    coherent = -2 * mu * (p[:, 2] * states[:, 1] - p[:, 1] * states[:, 2])
    return coherent + 2 * cfg.alpha * v / control_energy_weight(times, cfg)
