import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from qubit_control.closed_gate import (
    ClosedGateProblem,
    check_unitary,
    gate_grid_node,
    gradient_jw,
    gradient_jw_first_order,
    grape_maximize,
    objective_and_gradient_jw,
    objective_jw,
    objective_jw_realified,
    pmp_residual_at_zero,
    pontryagin_spread_at_zero,
    propagate_gate,
    realified_matrices,
    realified_rhs,
    realified_trajectory,
    realify,
    step_propagator,
    unrealify,
)
from qubit_control.errors import InvalidStateError
from qubit_control.integrators import rk4_integrate
from qubit_control.oracles import central_difference
from qubit_control.quantum_core import SIGMA_X, SIGMA_Z


def test_zero_control_objective_equals_cos_squared():
    """J_W(v = 0) = cos^2(phi_W + T)"""
    prob = ClosedGateProblem(np.pi / 4, np.pi / 4, 8)
    assert objective_jw(prob, prob.zero_control()) == pytest.approx(0.0, abs=1e-15)

    prob = ClosedGateProblem(np.pi / 20, np.pi / 20, 5)
    assert objective_jw(prob, prob.zero_control()) == pytest.approx(np.cos(np.pi / 10) ** 2, abs=1e-14)


def test_zero_control_objective_matches_problem_helper_on_grid():
    """Every grid node agrees with zero_control_value"""
    for j in range(1, 10):
        for i in range(1, 11):
            prob = gate_grid_node(j, i)
            assert objective_jw(prob, prob.zero_control()) == pytest.approx(prob.zero_control_value(), abs=1e-13)


def test_objective_realified_agrees_with_trace_form():
    """<x(T), L x(T)> equals |Tr(W^dagger U)|^2 / 4"""
    prob = ClosedGateProblem(0.3, 1.1, 6)
    ctrl = prob.control(np.linspace(-2, 2, 6))
    assert objective_jw_realified(prob, ctrl) == pytest.approx(objective_jw(prob, ctrl), abs=1e-13)


@given(st.floats(-10, 10, allow_nan=False), st.floats(1e-3, 1.0))
def test_step_propagator_any_amplitude_is_unitary(a, dt):
    """Each closed-form step is unitary with unit determinant"""
    U = step_propagator(a, dt)
    assert check_unitary(U, tol=1e-12)
    assert np.linalg.det(U) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("a", [0.0, 0.7, -3.0, 25.0])
def test_step_propagator_matches_expm(a):
    """Closed form equals exp(-i dt (sigma_z + a sigma_x))"""
    dt = 0.2
    assert np.allclose(step_propagator(a, dt), expm(-1j * dt * (SIGMA_Z + a * SIGMA_X)), atol=1e-12)


def test_propagate_gate_random_control_is_unitary():
    """The full product stays unitary"""
    prob = ClosedGateProblem(0.5, 1.5, 12)
    rng = np.random.default_rng(1)
    U = propagate_gate(prob, prob.control(rng.uniform(-50, 50, 12)))
    assert check_unitary(U, tol=1e-10)


def test_propagate_gate_wrong_interval_count_raises():
    """Control and problem must agree on N"""
    prob = ClosedGateProblem(0.5, 1.0, 4)
    with pytest.raises(InvalidStateError):
        propagate_gate(prob, ClosedGateProblem(0.5, 1.0, 5).zero_control())


@pytest.mark.parametrize("phi_w, T", [(0.1, 0.2), (1.5, 1.57)])
def test_problem_valid_boundaries_accepted(phi_w, T):
    """Interior phi_W and T up to pi/2"""
    assert ClosedGateProblem(phi_w, T, 3).N == 3


@pytest.mark.parametrize("phi_w, T", [(0.0, 1.0), (np.pi / 2, 1.0), (0.5, 0.0), (0.5, 2.0)])
def test_problem_out_of_range_raises(phi_w, T):
    """phi_W in (0, pi/2), T in (0, pi/2]"""
    with pytest.raises(InvalidStateError):
        ClosedGateProblem(phi_w, T, 3)


def test_realify_round_trip_special_unitary():
    """unrealify(realify(U)) = U for U in SU(2)"""
    U = step_propagator(1.3, 0.4) @ step_propagator(-0.2, 0.3)
    assert np.allclose(unrealify(realify(U)), U)


def test_realified_trajectory_keeps_unit_norm():
    """|x(t)| = 1 along the trajectory"""
    prob = ClosedGateProblem(0.4, 1.2, 7)
    _, xs = realified_trajectory(prob, prob.control(np.arange(7) - 3.0))
    assert np.allclose(np.linalg.norm(xs, axis=1), 1.0)


def test_realified_trajectory_matches_rk4_of_bilinear_system():
    """Exact partial products agree with RK4 of x' = (A + B a_k) x interval by interval"""
    prob = ClosedGateProblem(0.4, 1.2, 6)
    amps = np.array([-2.0, 0.5, 3.0, 0.0, -1.0, 1.5])
    times, xs = realified_trajectory(prob, prob.control(amps))
    x = xs[0]
    for k, a_k in enumerate(amps):
        _, stepped = rk4_integrate(realified_rhs(a_k), x, times[k], times[k + 1], 1e-3)
        x = stepped[-1]
        assert np.allclose(x, xs[k + 1], atol=1e-10)


def test_propagate_gate_matches_rk4_of_schroedinger_equation():
    """U' = -i (sigma_z + a_k sigma_x) U integrated with complex RK4 lands on U_N ... U_1"""
    prob = ClosedGateProblem(np.pi / 5, 3 * np.pi / 10, 5)
    amps = np.array([1.0, -0.5, 2.5, 0.0, -3.0])
    U = np.eye(2, dtype=complex)
    for k, a_k in enumerate(amps):
        H = SIGMA_Z + a_k * SIGMA_X
        _, stepped = rk4_integrate(lambda t, V, H=H: -1j * H @ V, U, k * prob.dt, (k + 1) * prob.dt, 1e-3)
        U = stepped[-1]
    assert U.dtype == complex
    assert np.allclose(propagate_gate(prob, prob.control(amps)), U, atol=1e-10)


def test_realified_matrices_are_antisymmetric():
    """A and B generate rotations of R^4"""
    A, B = realified_matrices()
    assert np.allclose(A, -A.T)
    assert np.allclose(B, -B.T)


def test_gradient_at_zero_control_vanishes():
    """v = 0 is a stationary point of J_W"""
    for phi_w, T in [(np.pi / 4, np.pi / 4), (np.pi / 20, np.pi / 2), (0.3, 0.9)]:
        prob = ClosedGateProblem(phi_w, T, 9)
        assert np.max(np.abs(gradient_jw(prob, prob.zero_control()))) <= 1e-12
        assert np.max(np.abs(gradient_jw_first_order(prob, prob.zero_control()))) <= 1e-12


def test_gradient_matches_central_difference():
    """Exact gradient agrees with central differences"""
    prob = ClosedGateProblem(0.7, 1.3, 6)
    a = np.random.default_rng(7).uniform(-3, 3, 6)
    fd = central_difference(lambda x: objective_and_gradient_jw(prob, x)[0], a)
    assert np.allclose(gradient_jw(prob, prob.control(a)), fd, atol=1e-7)


def test_gradient_first_order_close_to_exact_for_small_steps():
    """The GRAPE form converges to the exact gradient as dt shrinks"""
    prob = ClosedGateProblem(0.7, 1.0, 200)
    a = 0.5 * np.sin(np.linspace(0, 3, 200)) + 0.2
    exact = gradient_jw(prob, prob.control(a))
    approx = gradient_jw_first_order(prob, prob.control(a))
    assert np.max(np.abs(exact - approx)) <= 5e-2 * np.max(np.abs(exact))


def test_pmp_residual_at_zero_vanishes():
    """<p0(t), B x0(t)> = 0 for v = 0"""
    for phi_w, T in [(np.pi / 4, np.pi / 4), (np.pi / 20, np.pi / 2), (1.2, 0.3)]:
        prob = ClosedGateProblem(phi_w, T, 5)
        assert pmp_residual_at_zero(prob, 100) <= 1e-12


def test_pontryagin_spread_at_zero_vanishes():
    """H does not depend on v along the zero-control processes"""
    prob = ClosedGateProblem(np.pi / 5, 3 * np.pi / 10, 10)
    assert pontryagin_spread_at_zero(prob, 50, nu=5.0) <= 1e-12


def test_gate_grid_node_defaults_use_four_plus_i_intervals():
    """Node (j, i) = (pi j / 20, pi i / 20), N = 4 + i"""
    prob = gate_grid_node(4, 6)
    assert prob.phi_w == pytest.approx(np.pi / 5)
    assert prob.T == pytest.approx(3 * np.pi / 10)
    assert prob.N == 10


def test_grape_maximize_never_below_zero_control():
    """The zero control is the baseline of the multistart"""
    prob = gate_grid_node(1, 1)
    report = grape_maximize(prob, starts=2, rng_seed=3)
    assert report.fun >= prob.zero_control_value() - 1e-12
    assert len(report.history) == 2
    assert report.extra["jw_zero"] == pytest.approx(prob.zero_control_value())


def test_grape_maximize_same_seed_is_reproducible():
    """Philox streams make restarts bit-identical"""
    prob = gate_grid_node(3, 5)
    first = grape_maximize(prob, starts=3, rng_seed=11)
    second = grape_maximize(prob, starts=3, rng_seed=11)
    assert first.fun == second.fun
    assert np.array_equal(first.x, second.x)


def test_grape_maximize_bounded_problem_respects_nu():
    """L-BFGS-B bounds keep |a_k| <= nu"""
    prob = ClosedGateProblem(np.pi / 5, 3 * np.pi / 10, 10, nu=0.5)
    report = grape_maximize(prob, starts=2, rng_seed=5)
    assert np.all(np.abs(report.x) <= 0.5 + 1e-12)


def test_grape_maximize_zero_starts_raises():
    """At least one start is required"""
    with pytest.raises(InvalidStateError):
        grape_maximize(gate_grid_node(1, 1), starts=0, rng_seed=0)


@pytest.mark.slow
def test_grape_maximize_bold_cell_reaches_full_fidelity():
    """phi_W = pi/5, T = 3 pi/10: zero control gives 0, GRAPE reaches Delta = 1"""
    prob = gate_grid_node(4, 6)
    report = grape_maximize(prob, starts=10, rng_seed=20230109)
    assert prob.zero_control_value() == pytest.approx(0.0, abs=1e-15)
    assert report.fun - prob.zero_control_value() == pytest.approx(1.0, abs=5e-3)


@pytest.mark.slow
@pytest.mark.parametrize("phi_index, time_index, delta, tol", [
    (1, 1, 0.092, 0.01),
    (5, 5, 0.976, 0.01),
    (3, 7, 1.000, 5e-3),
    (2, 8, 1.000, 5e-3),
    (1, 9, 1.000, 5e-3),
    (9, 10, 0.024, 0.01),
])
def test_grape_maximize_grid_cells_match_reported_gains(phi_index, time_index, delta, tol):
    """Delta = J_W max - cos^2(phi_W + T) at selected (phi_W^j, T_i) nodes, 10 starts, N = 4 + i"""
    prob = gate_grid_node(phi_index, time_index)
    report = grape_maximize(prob, starts=10, rng_seed=20230109)
    assert report.fun - prob.zero_control_value() == pytest.approx(delta, abs=tol)
