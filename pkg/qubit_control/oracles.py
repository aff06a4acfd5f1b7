"""
Verification Oracles
Independent cross-checks of the closed forms, gradients and integrators:
matrix exponentials, Runge-Kutta integration, interval recurrences and
central finite differences
"""

from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from scipy.integrate import trapezoid
from scipy.linalg import expm

from . import closed_gate as cg
from . import coherent_stage as cs
from . import incoherent_stage as inc
from .errors import ConfigError
from .integrators import rk4_step
from .projected_gradient import PenaltyConfig, penalty_value_and_gradient
from .quantum_core import SIGMA_X, SIGMA_Z, BlochState, OpenSystemParams, bloch_to_density, density_to_bloch
from .random_streams import make_rng


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ""

    def to_dict(self) -> Dict[str, object]:
        return {
            "name": self.name,
            "passed": self.passed,
            "value": float(self.value),
            "tolerance": float(self.tolerance),
            "detail": self.detail,
        }


def _result(name: str, value: float, tolerance: float, detail: str = "") -> CheckResult:
    return CheckResult(name, bool(value <= tolerance), float(value), tolerance, detail)


def _relative(approx: np.ndarray, reference: np.ndarray) -> float:
    """max-norm error relative to the reference"""

    approx, reference = np.atleast_1d(approx), np.atleast_1d(reference)
    return float(np.max(np.abs(approx - reference)) / max(np.max(np.abs(reference)), 1e-12))


def central_difference(f: Callable[[np.ndarray], float], x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Componentwise (f(x + h e_k) - f(x - h e_k)) / 2h"""

    x = np.asarray(x, dtype=float)
    grad = np.empty(x.size)
    for k in range(x.size):
        e = np.zeros(x.size)
        e[k] = h
        grad[k] = (f(x + e) - f(x - e)) / (2 * h)
    return grad


_GATE_NODES = ((np.pi / 4, np.pi / 4), (np.pi / 20, np.pi / 2), (np.pi / 5, 3 * np.pi / 10), (np.pi / 20, np.pi / 20))


def check_zero_control_identity(seed: int) -> CheckResult:
    worst = 0.0
    for phi, T in _GATE_NODES:
        prob = cg.ClosedGateProblem(phi, T, 8)
        worst = max(worst, abs(cg.objective_jw(prob, prob.zero_control()) - np.cos(phi + T) ** 2))
    return _result("zero_control_identity", worst, 1e-12, "J_W(0) vs cos^2(phi_W + T)")


def check_stationarity(seed: int) -> CheckResult:
    worst = 0.0
    for phi, T in _GATE_NODES:
        prob = cg.ClosedGateProblem(phi, T, 8)
        worst = max(worst, float(np.max(np.abs(cg.gradient_jw(prob, prob.zero_control())))))
    return _result("stationarity", worst, 1e-12, "max |dJ_W/da_k| at a = 0")


def check_pmp_residual(seed: int) -> CheckResult:
    worst = 0.0
    for phi, T in _GATE_NODES[:2]:
        prob = cg.ClosedGateProblem(phi, T, 8)
        worst = max(worst, cg.pmp_residual_at_zero(prob, 100), cg.pontryagin_spread_at_zero(prob, 100))
    return _result("pmp_residual", worst, 1e-10, "switching function and Pontryagin spread at v = 0")


def check_propagator_vs_expm(seed: int) -> CheckResult:
    rng = make_rng(seed, 0)
    worst = 0.0
    for _ in range(100):
        a = rng.uniform(-5, 5)
        dt = rng.uniform(1e-3, 1.0)
        reference = expm(-1j * dt * (SIGMA_Z + a * SIGMA_X))
        worst = max(worst, float(np.max(np.abs(cg.step_propagator(a, dt) - reference))))
    return _result("propagator_vs_expm", worst, 1e-12, "closed-form step vs scaling-and-squaring")


def check_gradient_jw_fd(seed: int) -> CheckResult:
    rng = make_rng(seed, 1)
    prob = cg.ClosedGateProblem(np.pi / 5, 3 * np.pi / 10, 6)
    a = rng.uniform(-1, 1, prob.N)
    exact = cg.gradient_jw(prob, prob.control(a))
    fd = central_difference(lambda x: cg.objective_jw(prob, prob.control(x)), a)
    return _result("gradient_jw_fd", _relative(exact, fd), 1e-6, "exact GRAPE gradient vs central differences")


def _rk4_step_maps(params: OpenSystemParams, n_values: np.ndarray, step: float) -> np.ndarray:
    """Augmented 4x4 matrices of one RK4 step at constant n, one per entry of n_values.

    With n fixed and v = 0 the Bloch system is linear and autonomous, so a
    classic RK4 step is the affine map x -> P x + q. P and q are read off by
    stepping the zero vector and the unit vectors.
    """

    basis = np.vstack([np.zeros(3), np.eye(3)])
    states = np.repeat(basis[None], n_values.size, axis=0)
    rhs = cs.bloch_rhs(params, n=lambda t: n_values[:, None])
    stepped = rk4_step(rhs, 0.0, states, step)

    maps = np.zeros((n_values.size, 4, 4))
    q = stepped[:, 0, :]
    maps[:, :3, :3] = np.transpose(stepped[:, 1:, :] - q[:, None, :], (0, 2, 1))
    maps[:, :3, 3] = q
    maps[:, 3, 3] = 1.0
    return maps


def _rk4_stage1(prob: inc.Stage1Problem, a: np.ndarray, steps_per_interval: int, step: float) -> np.ndarray:
    """RK4 final state with switching times on step boundaries"""

    maps = _rk4_step_maps(prob.params, np.asarray(a, dtype=float), step)
    x = np.append(prob.x0.as_array(), 1.0)
    for m in maps:
        x = np.linalg.matrix_power(m, steps_per_interval) @ x
    return x[:3]


def _random_stage1(rng, params: OpenSystemParams, max_t: float, max_n: int, max_a: float, step: float = 0.0):
    """Random (problem, t_hat, a); a positive step snaps the interval width to a multiple of it"""

    x0 = rng.normal(size=3)
    x0 = x0 / np.linalg.norm(x0) * rng.uniform(0, 1)
    prob = inc.Stage1Problem(params, BlochState(*x0), BlochState(0.0, 0.0, 0.5), N=int(rng.integers(1, max_n + 1)))
    t_hat = rng.uniform(1.0, max_t)
    if step > 0:
        width_steps = max(int(t_hat / prob.N / step), 1)
        t_hat = prob.N * width_steps * step
    a = rng.uniform(0, max_a, prob.N)
    return prob, t_hat, a


def check_closed_form_vs_rk4(seed: int, fault_x3: float = 0.0, instances: int = 200, step: float = 1e-3) -> CheckResult:
    rng = make_rng(seed, 2)
    params = OpenSystemParams.default()
    worst = 0.0
    for _ in range(instances):
        prob, t_hat, a = _random_stage1(rng, params, 500.0, 20, 100.0, step=step)
        steps_per_interval = int(round(t_hat / prob.N / step))
        closed = inc.stage1_state(prob, t_hat, a).as_array() + np.array([0.0, 0.0, fault_x3])
        worst = max(worst, float(np.max(np.abs(closed - _rk4_stage1(prob, a, steps_per_interval, step)))))
    return _result("closed_form_vs_rk4", worst, 1e-8, f"final state vs RK4 at step {step:g}, {instances} instances")


def check_closed_form_vs_recurrence(seed: int, fault_x3: float = 0.0, instances: int = 50) -> CheckResult:
    rng = make_rng(seed, 3)
    params = OpenSystemParams.default()
    worst = 0.0
    for _ in range(instances):
        prob, t_hat, a = _random_stage1(rng, params, 500.0, 20, 100.0)
        closed = inc.stage1_state(prob, t_hat, a).as_array() + np.array([0.0, 0.0, fault_x3])
        stepped = inc.stage1_state_by_recurrence(prob, t_hat, a).as_array()
        worst = max(worst, float(np.max(np.abs(closed - stepped))))
    return _result("closed_form_vs_recurrence", worst, 1e-12, "final state vs interval recurrence")


def check_stage1_gradient_fd(seed: int, h: float = 1e-5) -> CheckResult:
    rng = make_rng(seed, 4)
    params = OpenSystemParams.default()
    worst = 0.0
    for N in (1, 3, 10):
        x0 = BlochState(0.6, -0.3, 0.2)
        prob = inc.Stage1Problem(params, x0, BlochState(0.0, 0.0, 0.5), N=N, P_prime=50.0)
        t_hat = rng.uniform(50, 500)
        a = rng.uniform(0.1, 5, N)
        grad = inc.stage1_gradient(prob, t_hat, a)

        fd_a = np.array([
            central_difference(lambda x: inc.stage1_state(prob, t_hat, x).as_array()[j], a, h) for j in range(3)
        ])
        fd_t = np.array([
            central_difference(lambda t: inc.stage1_state(prob, t[0], a).as_array()[j], np.array([t_hat]), h)[0]
            for j in range(3)
        ])
        fd_phi_t = central_difference(lambda t: inc.stage1_objective_gphi(prob, t[0], a), np.array([t_hat]), h)

        # scaled by the whole Jacobian so near-zero entries do not dominate
        jacobian = np.column_stack([grad.dx_da, grad.dx_dt])
        worst = max(
            worst,
            _relative(jacobian, np.column_stack([fd_a, fd_t])),
            _relative(grad.dgphi_dt, fd_phi_t),
        )
    return _result("stage1_gradient_fd", worst, 1e-6, "closed-form Jacobian vs central differences")


def check_penalty_gradient_fd(seed: int) -> CheckResult:
    rng = make_rng(seed, 5)
    cfg = PenaltyConfig(alpha=3.0, delta_a=0.25)
    a = np.cumsum(rng.uniform(-2, 2, 8))
    _, grad = penalty_value_and_gradient(a, cfg)
    fd = central_difference(lambda x: penalty_value_and_gradient(x, cfg)[0], a)
    return _result("penalty_gradient_fd", _relative(grad, fd), 1e-7, "R^alpha gradient vs central differences")


def check_bloch_round_trip(seed: int) -> CheckResult:
    rng = make_rng(seed, 6)
    worst = 0.0
    for _ in range(100):
        x = rng.normal(size=3)
        x = x / np.linalg.norm(x) * rng.uniform(0, 1)
        back = density_to_bloch(bloch_to_density(BlochState(*x))).as_array()
        worst = max(worst, float(np.max(np.abs(back - x))))
    return _result("bloch_round_trip", worst, 1e-12, "Bloch -> density -> Bloch")


def check_adjoint_fd(seed: int) -> CheckResult:
    rng = make_rng(seed, 7)
    params = OpenSystemParams.default()
    x_init = BlochState(0.0, 0.0, 0.5)
    x_target = BlochState(0.0, 0.0, -0.5)
    cfg = cs.AdjointConfig(alpha=1e-4, b=4.0, t_hat=450.0, T=455.0)
    times = cfg.sample_times(2001)
    v = -60 * np.sin(2 * np.pi * (times - cfg.t_hat) / (cfg.T - cfg.t_hat))

    grad = cs.adjoint_gradient_j2alpha(params, x_init, x_target, v, cfg)
    worst = 0.0
    eps = 1e-5
    for _ in range(5):
        freq, phase = rng.uniform(0.5, 3), rng.uniform(0, 2 * np.pi)
        h = np.sin(freq * (times - cfg.t_hat) + phase)
        predicted = float(trapezoid(grad * h, times))
        plus = cs.objective_j2alpha(params, x_init, x_target, v + eps * h, cfg)
        minus = cs.objective_j2alpha(params, x_init, x_target, v - eps * h, cfg)
        worst = max(worst, _relative(predicted, (plus - minus) / (2 * eps)))
    return _result("adjoint_fd", worst, 1e-4, "adjoint Gateaux derivative vs directional differences")


CHECKS: Dict[str, Callable[..., CheckResult]] = {
    "zero_control_identity": check_zero_control_identity,
    "stationarity": check_stationarity,
    "pmp_residual": check_pmp_residual,
    "propagator_vs_expm": check_propagator_vs_expm,
    "gradient_jw_fd": check_gradient_jw_fd,
    "closed_form_vs_rk4": check_closed_form_vs_rk4,
    "closed_form_vs_recurrence": check_closed_form_vs_recurrence,
    "stage1_gradient_fd": check_stage1_gradient_fd,
    "penalty_gradient_fd": check_penalty_gradient_fd,
    "bloch_round_trip": check_bloch_round_trip,
    "adjoint_fd": check_adjoint_fd,
}

_FAULT_AWARE = ("closed_form_vs_rk4", "closed_form_vs_recurrence")


def run_checks(names: Optional[Sequence[str]], seed: int, fault_x3: float = 0.0) -> List[CheckResult]:
    """Run the named checks in the given order (all when names is None)"""

    selected = list(CHECKS) if names is None else list(names)
    unknown = [n for n in selected if n not in CHECKS]
    if unknown:
        raise ConfigError(f"Unknown verification checks: {', '.join(unknown)}")

    results = []
    for name in selected:
        if name in _FAULT_AWARE:
            results.append(CHECKS[name](seed, fault_x3=fault_x3))
        else:
            results.append(CHECKS[name](seed))
    return results
