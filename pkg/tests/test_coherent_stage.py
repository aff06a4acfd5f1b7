from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from scipy.integrate import trapezoid

from qubit_control.coherent_stage import (
    AdjointConfig,
    HarmonicControl,
    Stage2SearchSpec,
    adjoint_gradient_j2alpha,
    bloch_matrices,
    bloch_rhs,
    control_energy_weight,
    integrate_bloch,
    objective_j2alpha,
    stage2_grid_search,
)
from qubit_control.errors import AccuracyUnreachableError, ConfigError, InvalidStateError
from qubit_control.incoherent_stage import Stage1Problem, stage1_g1_and_gradient, stage1_state
from qubit_control.projected_gradient import BoxInterval, GpmConfig, gpm_minimize
from qubit_control.quantum_core import BlochState, OpenSystemParams

PARAMS = OpenSystemParams.default()
X_INIT = BlochState(0.0, 0.0, 0.5)
X_TARGET = BlochState(0.0, 0.0, -0.5)


def reached_state(control, t_end, t_hat=450.0, step=0.01):
    _, states = integrate_bloch(PARAMS, X_INIT, control, None, (t_hat, t_end), step)
    return BlochState(*states[-1])


def small_spec(**overrides):
    fields = dict(t_hat=450.0, horizon=2.0, nu=60.0, dA=5.0, dt=0.05, eps=1e-3, integration_step=0.01)
    fields.update(overrides)
    return Stage2SearchSpec(**fields)


def test_bloch_rhs_matches_bilinear_matrices():
    """rhs(x) = (A + B^v v + B^n n) x + d"""
    A, Bv, Bn, d = bloch_matrices(PARAMS)
    rng = np.random.default_rng(0)
    for _ in range(10):
        x, v, n = rng.normal(size=3), rng.normal() * 50, rng.uniform(0, 10)
        rhs = bloch_rhs(PARAMS, v=lambda t: v, n=lambda t: n)
        assert np.allclose(rhs(0.0, x), (A + Bv * v + Bn * n) @ x + d, atol=1e-14)


def test_bloch_rhs_batched_states_use_per_row_controls():
    """Controls broadcast against the leading batch dimension"""
    amps = np.array([-10.0, 0.0, 10.0])
    rhs = bloch_rhs(PARAMS, v=lambda t: amps)
    x = np.tile([0.1, 0.2, 0.3], (3, 1))
    batched = rhs(0.0, x)
    for j, a in enumerate(amps):
        single = bloch_rhs(PARAMS, v=lambda t: a)(0.0, x[j])
        assert np.allclose(batched[j], single)


def test_bloch_rhs_non_finite_control_raises():
    """NaN controls are rejected"""
    with pytest.raises(InvalidStateError):
        bloch_rhs(PARAMS, v=lambda t: np.nan)(0.0, np.zeros(3))


def test_integrate_bloch_free_relaxation_matches_exponential():
    """v = n = 0 from the origin: x3(t) = 1 - exp(-gamma t)"""
    times, states = integrate_bloch(PARAMS, BlochState(0, 0, 0), None, None, (0.0, 10.0), 0.01)
    assert times[-1] == pytest.approx(10.0)
    assert states[-1][2] == pytest.approx(1 - np.exp(-PARAMS.gamma * 10.0), abs=1e-10)
    assert np.allclose(states[:, :2], 0.0)


def test_integrate_bloch_nonpositive_step_raises():
    """step > 0"""
    with pytest.raises(InvalidStateError):
        integrate_bloch(PARAMS, X_INIT, None, None, (0.0, 1.0), 0.0)


def test_harmonic_control_cos_family_values():
    """A cos(Omega t)"""
    v = HarmonicControl("cos", -2.0, omega=0.5)
    assert v(0.0) == -2.0
    assert v(np.pi) == pytest.approx(0.0, abs=1e-15)


def test_harmonic_control_sin_family_vanishes_at_window_ends():
    """v(t_hat) = v(T) = 0 for every d"""
    for d in (1, 2, 3):
        v = HarmonicControl("sin", 61.8, d=d, t_start=450.0, t_end=455.0)
        assert v(450.0) == 0.0
        assert v(455.0) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("kwargs", [
    {"family": "tan", "amplitude": 1.0},
    {"family": "cos", "amplitude": 5.0, "bound": 1.0},
    {"family": "sin", "amplitude": 1.0, "t_end": None},
    {"family": "sin", "amplitude": 1.0, "d": 0, "t_end": 1.0},
])
def test_harmonic_control_invalid_raises(kwargs):
    """Unknown family, amplitude above bound, missing window or d < 1"""
    with pytest.raises(InvalidStateError):
        HarmonicControl(**kwargs)


def test_search_spec_default_amplitude_grid_contains_zero():
    """dA {-m..m}, m = round(nu / dA) = 2000"""
    amps = Stage2SearchSpec().amplitudes()
    assert amps.size == 4001
    assert 0.0 in amps
    assert amps[0] == pytest.approx(-100.0)
    assert amps[-1] == pytest.approx(100.0)
    assert Stage2SearchSpec().n_time_nodes() == 4000
    assert Stage2SearchSpec().substeps() == 10


@pytest.mark.parametrize("kwargs", [
    {"family": "tan"}, {"dA": 0.0}, {"dt": -1.0}, {"horizon": 0.0},
    {"eps": 0.0}, {"nu": -1.0}, {"d_max": 0}, {"integration_step": 0.0},
])
def test_search_spec_invalid_raises(kwargs):
    """Grid parameters are configuration"""
    with pytest.raises(ConfigError):
        Stage2SearchSpec(**kwargs)


def test_integrate_bloch_halving_step_cuts_error_sixteenfold():
    """Constant n = 50 over [0, 20]: RK4 endpoint error against the closed form drops ~16x per halving"""
    x0 = BlochState(1.0, 0.0, 0.0)
    prob = Stage1Problem(PARAMS, x0, X_INIT, 1)
    exact = stage1_state(prob, 20.0, [50.0]).as_array()

    def endpoint_error(step):
        _, states = integrate_bloch(PARAMS, x0, None, lambda t: 50.0, (0.0, 20.0), step)
        return np.max(np.abs(states[-1] - exact))

    ratio = endpoint_error(0.1) / endpoint_error(0.05)
    assert 13 <= ratio <= 19


def test_stage2_grid_search_start_within_eps_stops_immediately():
    """k = 0: T = t_hat, zero amplitude"""
    result = stage2_grid_search(PARAMS, X_INIT, BlochState(0.0, 0.0, 0.5005), small_spec())
    assert result.T == 450.0
    assert result.amplitude == 0.0
    assert result.times.size == 1


def test_stage2_grid_search_cos_finds_planted_node():
    """A target reached by A = -40 at t_hat + 2 is found no later than that"""
    x_target = reached_state(HarmonicControl("cos", -40.0), 452.0)
    result = stage2_grid_search(PARAMS, X_INIT, x_target, small_spec())

    assert result.family == "cos"
    assert result.T <= 452.0 + 1e-9
    assert result.distance <= 1e-3
    assert abs(result.amplitude) <= 60.0
    assert result.times[0] == 450.0
    assert result.times[-1] == pytest.approx(result.T)
    assert np.linalg.norm(result.states[-1] - x_target.as_array()) <= 1e-3 + 1e-9
    assert result.controls[0] == pytest.approx(result.amplitude * np.cos(450.0))


def test_stage2_grid_search_cos_chunks_in_thread_pool_match_serial():
    """Chunked amplitude scans select the same node"""
    x_target = reached_state(HarmonicControl("cos", 35.0), 451.5)
    serial = stage2_grid_search(PARAMS, X_INIT, x_target, small_spec())
    with ThreadPoolExecutor(max_workers=3) as pool:
        threaded = stage2_grid_search(PARAMS, X_INIT, x_target, small_spec(), executor=pool, chunks=3)
    assert serial.to_dict() == threaded.to_dict()


def test_stage2_grid_search_sin_finds_planted_node_with_zero_endpoints():
    """A target reached by d = 2, A = 45 at t_hat + 2 is found and v vanishes at both ends"""
    control = HarmonicControl("sin", 45.0, d=2, t_start=450.0, t_end=452.0)
    x_target = reached_state(control, 452.0)
    result = stage2_grid_search(PARAMS, X_INIT, x_target, small_spec(family="sin", d_max=3))

    assert result.family == "sin"
    assert result.d in (1, 2, 3)
    assert result.T <= 452.0 + 1e-9
    assert result.distance <= 1e-3
    assert result.v_start == 0.0
    assert result.v_end == pytest.approx(0.0, abs=1e-9)
    assert result.to_dict()["d"] == result.d


def test_stage2_grid_search_unreachable_eps_raises():
    """No node within eps = 1e-9 on a coarse grid"""
    spec = small_spec(eps=1e-9, horizon=0.5, dA=20.0)
    with pytest.raises(AccuracyUnreachableError, match="accuracy unreachable on grid"):
        stage2_grid_search(PARAMS, X_INIT, X_TARGET, spec)


def test_control_energy_weight_peaks_mid_window():
    """S = 1 at the midpoint and exp(-b/4) at both ends"""
    cfg = AdjointConfig(alpha=1e-4, b=4.0, t_hat=450.0, T=455.0)
    assert control_energy_weight(452.5, cfg) == pytest.approx(1.0)
    assert control_energy_weight(450.0, cfg) == pytest.approx(np.exp(-1.0))
    assert control_energy_weight(455.0, cfg) == pytest.approx(np.exp(-1.0))


@pytest.mark.parametrize("kwargs", [
    {"alpha": -1.0, "b": 4.0, "t_hat": 0.0, "T": 1.0},
    {"alpha": 0.0, "b": 0.0, "t_hat": 0.0, "T": 1.0},
    {"alpha": 0.0, "b": 4.0, "t_hat": 1.0, "T": 1.0},
])
def test_adjoint_config_invalid_raises(kwargs):
    """alpha >= 0, b > 0, T > t_hat"""
    with pytest.raises(ConfigError):
        AdjointConfig(**kwargs)


def test_objective_j2alpha_zero_alpha_is_terminal_distance():
    """alpha = 0 leaves only ||x(T) - x_target||^2"""
    cfg = AdjointConfig(alpha=0.0, b=4.0, t_hat=450.0, T=452.0)
    times = cfg.sample_times(201)
    v = 30.0 * np.cos(times)
    _, states = integrate_bloch(PARAMS, X_INIT, lambda t: np.interp(t, times, v), None, (450.0, 452.0), 0.01)
    expected = float(np.sum((states[-1] - X_TARGET.as_array()) ** 2))
    assert objective_j2alpha(PARAMS, X_INIT, X_TARGET, v, cfg) == pytest.approx(expected, rel=1e-12)


def test_objective_j2alpha_single_sample_raises():
    """Sampled controls need two samples"""
    cfg = AdjointConfig(alpha=0.0, b=4.0, t_hat=0.0, T=1.0)
    with pytest.raises(InvalidStateError):
        objective_j2alpha(PARAMS, X_INIT, X_TARGET, [1.0], cfg)


@pytest.mark.parametrize("alpha", [0.0, 1e-4, 1e-2])
def test_adjoint_gradient_matches_directional_differences(alpha):
    """trapz(dJ/dv * h) equals (J(v + eps h) - J(v - eps h)) / 2 eps"""
    cfg = AdjointConfig(alpha=alpha, b=4.0, t_hat=450.0, T=455.0)
    times = cfg.sample_times(2001)
    v = -60 * np.sin(2 * np.pi * (times - 450.0) / 5.0)
    grad = adjoint_gradient_j2alpha(PARAMS, X_INIT, X_TARGET, v, cfg)

    rng = np.random.default_rng(3)
    eps = 1e-5
    for _ in range(5):
        h = np.sin(rng.uniform(0.5, 3) * (times - 450.0) + rng.uniform(0, 2 * np.pi))
        predicted = trapezoid(grad * h, times)
        plus = objective_j2alpha(PARAMS, X_INIT, X_TARGET, v + eps * h, cfg)
        minus = objective_j2alpha(PARAMS, X_INIT, X_TARGET, v - eps * h, cfg)
        assert predicted == pytest.approx((plus - minus) / (2 * eps), rel=1e-4)


def test_adjoint_gradient_step_decreases_objective():
    """v <- v - beta dJ/dv lowers J for a small beta"""
    cfg = AdjointConfig(alpha=1e-4, b=4.0, t_hat=450.0, T=455.0)
    times = cfg.sample_times(1001)
    v = -50 * np.cos(times)
    grad = adjoint_gradient_j2alpha(PARAMS, X_INIT, X_TARGET, v, cfg)
    beta = 1e-2 / np.max(np.abs(grad))
    before = objective_j2alpha(PARAMS, X_INIT, X_TARGET, v, cfg)
    after = objective_j2alpha(PARAMS, X_INIT, X_TARGET, v - beta * grad, cfg)
    assert after < before


def test_stage2_grid_search_reports_distance_of_returned_trajectory():
    """distance is measured at the last sampled state"""
    x_target = reached_state(HarmonicControl("cos", 25.0), 451.0)
    result = stage2_grid_search(PARAMS, X_INIT, x_target, small_spec(horizon=1.5))
    assert result.distance == float(np.linalg.norm(result.states[-1] - x_target.as_array()))
    assert result.to_dict()["distance"] == result.distance


@pytest.fixture(scope="module")
def equator_stage1_state():
    """Modified stage 1 from (1, 0, 0): GPM-2 on g1 with t_hat = 450, N = 225 down to g1 < 1e-6"""
    prob = Stage1Problem(PARAMS, BlochState(1, 0, 0), X_INIT, 225, t_hat=450.0)
    cfg = GpmConfig(beta=10, lam=0.999, max_iters=1000, threshold=1e-6)
    report = gpm_minimize(lambda a: stage1_g1_and_gradient(prob, a), np.zeros(225), BoxInterval.capped(100), cfg)
    assert report.stop_reason == "threshold"
    return stage1_state(prob, 450.0, report.x)


@pytest.mark.slow
def test_stage2_grid_search_reference_cos_family(equator_stage1_state):
    """Stage-1 output at t_hat = 450: A = -67.6, T = 455.38, large control at both ends"""
    result = stage2_grid_search(PARAMS, equator_stage1_state, X_TARGET, Stage2SearchSpec(family="cos"))
    assert result.amplitude == pytest.approx(-67.6, abs=0.05)
    assert result.T == pytest.approx(455.38, abs=0.02)
    assert 3.5e-3 <= result.distance <= 5.5e-3
    assert abs(result.v_start) > 40
    assert abs(result.v_end) > 40


@pytest.mark.slow
def test_stage2_grid_search_reference_sin_family(equator_stage1_state):
    """Stage-1 output at t_hat = 450: d = 2, A = -61.8, T = 454.99, v = 0 at both ends"""
    result = stage2_grid_search(PARAMS, equator_stage1_state, X_TARGET, Stage2SearchSpec(family="sin"))
    assert result.d == 2
    assert result.amplitude == pytest.approx(-61.8, abs=0.05)
    assert result.T == pytest.approx(454.99, abs=0.02)
    assert result.distance <= 6e-3
    assert result.v_start == 0.0
    assert result.v_end == pytest.approx(0.0, abs=1e-9)
