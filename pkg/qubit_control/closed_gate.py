"""
Closed Gate
Phase shift gate generation for the closed qubit: exact piecewise constant
propagators, the objective J_W, its gradient, a multistart GRAPE driver and
the stationarity / Pontryagin diagnostics at zero control

H(t) = sigma_z + v(t) sigma_x, W = exp(i phi_W sigma_z).
"""

from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.linalg import expm
from scipy.optimize import minimize

from .errors import InvalidStateError
from .quantum_core import IDENTITY, SIGMA_X, SIGMA_Z, PiecewiseConstantControl
from .random_streams import make_rng
from .reports import OptimizerReport

# 2x2 complex arrays; aliases document intent at call sites
UnitaryMatrix = np.ndarray
RealifiedState = np.ndarray

_A2 = np.array([[0.0, 1.0], [-1.0, 0.0]])
_B2 = np.array([[0.0, 1.0], [1.0, 0.0]])
_Z2 = np.zeros((2, 2))


@dataclass(frozen=True)
class ClosedGateProblem:
    """(phi_W, T, N, nu) instance of the gate generation problem"""

    phi_w: float
    T: float
    N: int
    nu: Optional[float] = None

    def __post_init__(self):
        if not 0 < self.phi_w < np.pi / 2:
            raise InvalidStateError(f"phi_w must lie in (0, pi/2), got {self.phi_w}")
        if not 0 < self.T <= np.pi / 2 + 1e-15:
            raise InvalidStateError(f"T must lie in (0, pi/2], got {self.T}")
        if self.N < 1:
            raise InvalidStateError(f"N must be at least 1, got {self.N}")
        if self.nu is not None and self.nu <= 0:
            raise InvalidStateError(f"Amplitude bound nu must be positive, got {self.nu}")

    @property
    def dt(self) -> float:
        return self.T / self.N

    def target_gate(self) -> UnitaryMatrix:
        """W = exp(i phi_W sigma_z)"""
        return np.diag([np.exp(1j * self.phi_w), np.exp(-1j * self.phi_w)])

    def control(self, amplitudes) -> PiecewiseConstantControl:
        return PiecewiseConstantControl(self.T, amplitudes, kind="coherent", bound=self.nu)

    def zero_control(self) -> PiecewiseConstantControl:
        return self.control(np.zeros(self.N))

    def zero_control_value(self) -> float:
        """J_W(v = 0) = cos^2(phi_W + T)"""
        return float(np.cos(self.phi_w + self.T) ** 2)


def gate_grid_node(phi_index: int, time_index: int, divisions: int = 20, n_intervals: Optional[int] = None) -> ClosedGateProblem:
    """Node (phi_W^j, T_i) = (pi j / divisions, pi i / divisions) with N = 4 + i by default"""

    N = n_intervals if n_intervals is not None else 4 + time_index
    return ClosedGateProblem(np.pi * phi_index / divisions, np.pi * time_index / divisions, N)


def step_propagator(a_k: float, dt: float) -> UnitaryMatrix:
    """U_k = cos(alpha) I - i dt (sigma_z + a sigma_x) sin(alpha)/alpha, alpha = dt sqrt(1 + a^2)"""

    if dt <= 0:
        raise InvalidStateError(f"Interval width must be positive, got {dt}")
    return _step_propagators(np.array([a_k], dtype=float), dt)[0]


def _step_propagators(amps: np.ndarray, dt: float) -> np.ndarray:
    alpha = dt * np.sqrt(1 + amps ** 2)
    c = np.cos(alpha)
    s = np.sin(alpha) / alpha
    H = SIGMA_Z[None, :, :] + amps[:, None, None] * SIGMA_X[None, :, :]
    return c[:, None, None] * IDENTITY[None, :, :] - 1j * dt * s[:, None, None] * H


def _step_derivatives(amps: np.ndarray, dt: float) -> np.ndarray:
    """dU_k/da_k of the closed-form step propagator"""

    r = np.sqrt(1 + amps ** 2)
    alpha = dt * r
    dalpha = dt * amps / r
    sin_a, cos_a = np.sin(alpha), np.cos(alpha)
    s = sin_a / alpha
    dc = -sin_a * dalpha
    ds = (alpha * cos_a - sin_a) / alpha ** 2 * dalpha
    H = SIGMA_Z[None, :, :] + amps[:, None, None] * SIGMA_X[None, :, :]
    return (
        dc[:, None, None] * IDENTITY[None, :, :]
        - 1j * dt * (ds[:, None, None] * H + s[:, None, None] * SIGMA_X[None, :, :])
    )


def _check_control(prob: ClosedGateProblem, ctrl: PiecewiseConstantControl):
    if ctrl.n_intervals != prob.N:
        raise InvalidStateError(f"Control has {ctrl.n_intervals} intervals, problem expects {prob.N}")
    if abs(ctrl.duration - prob.T) > 1e-12 * max(1.0, prob.T):
        raise InvalidStateError(f"Control duration {ctrl.duration} differs from T = {prob.T}")


def _forward_products(steps: np.ndarray) -> np.ndarray:
    """F_k = U_k ... U_1 for k = 0..N (F_0 = I)"""

    products = np.empty((steps.shape[0] + 1, 2, 2), dtype=complex)
    products[0] = IDENTITY
    for k, U in enumerate(steps):
        products[k + 1] = U @ products[k]
    return products


def propagate_gate(prob: ClosedGateProblem, ctrl: PiecewiseConstantControl) -> UnitaryMatrix:
    """U_T = U_N ... U_1"""

    _check_control(prob, ctrl)
    return _forward_products(_step_propagators(ctrl.amplitudes, prob.dt))[-1]


def objective_jw(prob: ClosedGateProblem, ctrl: PiecewiseConstantControl) -> float:
    """J_W = |Tr(W^dagger U(T))|^2 / 4"""

    U = propagate_gate(prob, ctrl)
    tau = np.trace(prob.target_gate().conj().T @ U)
    return float(abs(tau) ** 2 / 4)


def objective_jw_realified(prob: ClosedGateProblem, ctrl: PiecewiseConstantControl) -> float:
    """J_W = <x(T), L x(T)> = (x1 cos phi_W + x2 sin phi_W)^2"""

    x = realify(propagate_gate(prob, ctrl))
    return float(x @ cost_matrix(prob.phi_w) @ x)


def objective_and_gradient_jw(prob: ClosedGateProblem, amplitudes: np.ndarray) -> Tuple[float, np.ndarray]:
    """J_W and its exact gradient in one forward/backward sweep"""

    amps = np.asarray(amplitudes, dtype=float)
    steps = _step_propagators(amps, prob.dt)
    dsteps = _step_derivatives(amps, prob.dt)
    forward = _forward_products(steps)
    Wd = prob.target_gate().conj().T

    tau = np.trace(Wd @ forward[-1])
    grad = np.empty(amps.size)
    # backward = W^dagger U_N ... U_{k+1}
    backward = Wd.copy()
    for k in range(amps.size - 1, -1, -1):
        dtau = np.trace(backward @ dsteps[k] @ forward[k])
        grad[k] = 0.5 * np.real(np.conj(tau) * dtau)
        backward = backward @ steps[k]

    return float(abs(tau) ** 2 / 4), grad


def gradient_jw(prob: ClosedGateProblem, ctrl: PiecewiseConstantControl) -> np.ndarray:
    """Exact dJ_W/da_k, including the a-dependence of each step's rotation axis and angle"""

    _check_control(prob, ctrl)
    return objective_and_gradient_jw(prob, ctrl.amplitudes)[1]


def gradient_jw_first_order(prob: ClosedGateProblem, ctrl: PiecewiseConstantControl) -> np.ndarray:
    """GRAPE form (dt/2) Im[Tr(Y^dagger) Tr(Y V_k)], with Y = W^dagger U_T and
    V_k the interaction picture of sigma_x after k steps.

    Exact to first order in dt; use gradient_jw for optimization.
    """

    _check_control(prob, ctrl)
    forward = _forward_products(_step_propagators(ctrl.amplitudes, prob.dt))
    Y = prob.target_gate().conj().T @ forward[-1]
    trace_y_dag = np.trace(Y).conj()

    grad = np.empty(prob.N)
    for k in range(1, prob.N + 1):
        F = forward[k]
        V_k = F.conj().T @ SIGMA_X @ F
        grad[k - 1] = 0.5 * prob.dt * np.imag(trace_y_dag * np.trace(Y @ V_k))
    return grad


def check_unitary(U: UnitaryMatrix, tol: float = 1e-10) -> bool:
    """U^dagger U = I and |det U| = 1 within tol"""

    return bool(
        np.max(np.abs(U.conj().T @ U - IDENTITY)) <= tol and abs(abs(np.linalg.det(U)) - 1) <= tol
    )


def realified_matrices() -> Tuple[np.ndarray, np.ndarray]:
    """A and B of x' = (A + B v) x"""

    A = np.block([[_A2, _Z2], [_Z2, _A2]])
    B = np.block([[_Z2, _B2], [-_B2, _Z2]])
    return A, B


def cost_matrix(phi_w: float) -> np.ndarray:
    """L with J_W = <x, L x>"""

    c, s = np.cos(phi_w), np.sin(phi_w)
    L = np.zeros((4, 4))
    L[:2, :2] = [[c * c, c * s], [c * s, s * s]]
    return L


def realify(U: UnitaryMatrix) -> RealifiedState:
    """U = [[x1 + i x2, x3 + i x4], [-x3 + i x4, x1 - i x2]] -> x"""

    return np.array([U[0, 0].real, U[0, 0].imag, U[0, 1].real, U[0, 1].imag])


def unrealify(x: RealifiedState) -> UnitaryMatrix:
    x1, x2, x3, x4 = x
    return np.array([[x1 + 1j * x2, x3 + 1j * x4], [-x3 + 1j * x4, x1 - 1j * x2]])


def realified_rhs(a_k: float) -> Callable[[float, np.ndarray], np.ndarray]:
    """Right-hand side (A + B a_k) x on one control interval"""

    A, B = realified_matrices()
    M = A + B * a_k

    def rhs(t: float, x: np.ndarray) -> np.ndarray:
        return M @ x

    return rhs


def realified_trajectory(prob: ClosedGateProblem, ctrl: PiecewiseConstantControl) -> Tuple[np.ndarray, np.ndarray]:
    """x(t_k) at the N + 1 interval boundaries, from the exact partial products"""

    _check_control(prob, ctrl)
    forward = _forward_products(_step_propagators(ctrl.amplitudes, prob.dt))
    times = np.linspace(0.0, prob.T, prob.N + 1)
    return times, np.array([realify(F) for F in forward])


def _zero_control_processes(prob: ClosedGateProblem, samples: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """x^0(t) forward and p^0(t) backward (p(T) = 2 L x(T)) for v = 0"""

    if samples < 2:
        raise InvalidStateError(f"Need at least 2 samples, got {samples}")

    A, _ = realified_matrices()
    x0 = np.array([1.0, 0.0, 0.0, 0.0])
    times = np.linspace(0.0, prob.T, samples)

    xT = expm(A * prob.T) @ x0
    pT = 2 * cost_matrix(prob.phi_w) @ xT

    xs = np.array([expm(A * t) @ x0 for t in times])
    ps = np.array([expm(A.T * (prob.T - t)) @ pT for t in times])
    return times, xs, ps


def pmp_residual_at_zero(prob: ClosedGateProblem, samples: int) -> float:
    """max_t |<p^0(t), B x^0(t)>|, the coefficient of v in the Pontryagin function"""

    _, B = realified_matrices()
    _, xs, ps = _zero_control_processes(prob, samples)
    return float(np.max(np.abs(np.einsum("ti,ij,tj->t", ps, B, xs))))


def pontryagin_spread_at_zero(prob: ClosedGateProblem, samples: int, nu: float = 1.0) -> float:
    """max_t of [max - min] of H(p^0, x^0, v) over |v| <= nu; zero means v = 0 attains the maximum"""

    A, B = realified_matrices()
    _, xs, ps = _zero_control_processes(prob, samples)

    spread = 0.0
    for x, p in zip(xs, ps):
        values = [p @ (A + B * v) @ x for v in (-nu, 0.0, nu)]
        spread = max(spread, max(values) - min(values))
    return float(spread)


def grape_maximize(
    prob: ClosedGateProblem,
    starts: int,
    rng_seed: int,
    node_index: int = 0,
    init_range: float = 1.0,
    max_iters: int = 10 ** 6,
    gtol: float = 1e-8,
) -> OptimizerReport:
    """Multistart L-BFGS-B ascent of J_W with the exact gradient.

    Start s draws a_k uniformly from [-init_range, init_range] with the
    Philox stream (rng_seed, node_index, s). The zero control is kept as the
    baseline candidate, so the result never falls below cos^2(phi_W + T).
    ``history[s]`` is the best J_W after s + 1 starts.
    """

    if starts < 1:
        raise InvalidStateError(f"Need at least one start, got {starts}")

    bounds = [(-prob.nu, prob.nu)] * prob.N if prob.nu is not None else None
    best_x = np.zeros(prob.N)
    best_value = prob.zero_control_value()
    best_reason = "zero_control"
    history = []
    total_iters = 0
    total_evals = 0

    for start in range(starts):
        rng = make_rng(rng_seed, node_index, start)
        a0 = rng.uniform(-init_range, init_range, prob.N)
        if prob.nu is not None:
            a0 = np.clip(a0, -prob.nu, prob.nu)

        def negative(a):
            value, grad = objective_and_gradient_jw(prob, a)
            return -value, -grad

        result = minimize(
            negative,
            a0,
            jac=True,
            method="L-BFGS-B",
            bounds=bounds,
            options={"maxiter": max_iters, "maxfun": max_iters, "gtol": gtol, "ftol": 1e-15},
        )
        total_iters += int(result.nit)
        total_evals += int(result.nfev)

        value = -float(result.fun)
        if value > best_value:
            best_value = value
            best_x = np.array(result.x)
            best_reason = str(result.message)
        history.append(best_value)

    return OptimizerReport(
        x=best_x,
        fun=best_value,
        history=history,
        stop_reason=best_reason,
        n_iterations=total_iters,
        n_evaluations=total_evals,
        extra={"starts": starts, "jw_zero": prob.zero_control_value()},
    )
