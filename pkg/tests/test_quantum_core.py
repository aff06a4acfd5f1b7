import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qubit_control.errors import InvalidStateError, UnreachableTargetError
from qubit_control.quantum_core import (
    BlochState,
    DensityMatrix,
    EigenPair,
    OpenSystemParams,
    PiecewiseConstantControl,
    bloch_distance,
    bloch_to_density,
    constant_incoherent_level,
    density_to_bloch,
    eigenvalues_descending,
    hilbert_schmidt_distance_sq,
    intermediate_targets,
    is_pure,
    select_intermediate_target,
)


@st.composite
def bloch_states(draw):
    direction = draw(st.tuples(*[st.floats(-1, 1, allow_nan=False)] * 3))
    radius = draw(st.floats(0, 1))
    v = np.array(direction)
    norm = np.linalg.norm(v)
    if norm < 1e-6:
        return BlochState(0.0, 0.0, 0.0)
    return BlochState(*(radius * v / norm))


def test_density_to_bloch_target_matrix_gives_lower_diagonal_state():
    """diag(1/4, 3/4) maps to (0, 0, -1/2)"""
    x = density_to_bloch(np.diag([0.25, 0.75]))
    assert np.allclose(x.as_array(), [0, 0, -0.5])


def test_density_to_bloch_off_diagonal_matrix_gives_x1():
    """[[1/2, 1/4], [1/4, 1/2]] maps to (1/2, 0, 0)"""
    x = density_to_bloch(np.array([[0.5, 0.25], [0.25, 0.5]]))
    assert np.allclose(x.as_array(), [0.5, 0, 0])


def test_bloch_to_density_x1_axis_gives_matrix_of_halves():
    """(1, 0, 0) is the pure state with all entries 1/2"""
    rho = bloch_to_density(BlochState(1, 0, 0))
    assert np.allclose(rho.entries, 0.5 * np.ones((2, 2)))
    assert is_pure(rho)


def test_density_to_bloch_non_hermitian_raises():
    """Non-Hermitian input is rejected"""
    with pytest.raises(InvalidStateError):
        density_to_bloch(np.array([[0.5, 0.3], [0.1, 0.5]]))


def test_density_to_bloch_wrong_trace_raises():
    """Trace must be one"""
    with pytest.raises(InvalidStateError):
        density_to_bloch(np.diag([0.5, 0.6]))


def test_density_to_bloch_negative_eigenvalue_raises():
    """Hermitian unit-trace matrix with a negative eigenvalue is rejected"""
    with pytest.raises(InvalidStateError):
        density_to_bloch(np.diag([1.2, -0.2]))


def test_bloch_state_outside_ball_raises():
    """|x| > 1 is not a state"""
    with pytest.raises(InvalidStateError):
        BlochState.from_array([1.0, 0.5, 0.0])


def test_density_matrix_wrong_shape_raises():
    """Only 2x2 matrices"""
    with pytest.raises(InvalidStateError):
        DensityMatrix(np.eye(3) / 3)


@given(bloch_states())
def test_bloch_round_trip_any_state_is_identity(x):
    """Bloch -> density -> Bloch returns the same vector"""
    back = density_to_bloch(bloch_to_density(x), tol=1e-10)
    assert np.allclose(back.as_array(), x.as_array(), atol=1e-12)


@given(bloch_states())
def test_purity_unit_norm_iff_pure(x):
    """rho^2 = rho exactly when |x| = 1"""
    rho = bloch_to_density(x)
    assert is_pure(rho) == (abs(x.norm() - 1) <= 1e-10)


@given(bloch_states(), bloch_states())
def test_bloch_distance_squared_is_twice_hilbert_schmidt(x, y):
    """||x - y||^2 = 2 Tr((rho - sigma)^2)"""
    hs = hilbert_schmidt_distance_sq(bloch_to_density(x), bloch_to_density(y))
    assert bloch_distance(x, y) ** 2 == pytest.approx(2 * hs, abs=1e-12)


def test_eigenvalues_descending_target_matrix_gives_three_quarters():
    """diag(1/4, 3/4) has spectrum (3/4, 1/4)"""
    pair = eigenvalues_descending(np.diag([0.25, 0.75]))
    assert (pair.p1, pair.p2) == pytest.approx((0.75, 0.25))


def test_eigenvalues_descending_off_diagonal_matrix_gives_same_spectrum():
    """[[1/2, 1/4], [1/4, 1/2]] has spectrum (3/4, 1/4)"""
    pair = eigenvalues_descending(np.array([[0.5, 0.25], [0.25, 0.5]]))
    assert (pair.p1, pair.p2) == pytest.approx((0.75, 0.25))


def test_eigenvalues_descending_pure_state_gives_one_zero():
    """Pure states have spectrum (1, 0)"""
    pair = eigenvalues_descending(bloch_to_density(BlochState(0, 1, 0)).entries)
    assert (pair.p1, pair.p2) == pytest.approx((1.0, 0.0))


def test_eigen_pair_ascending_raises():
    """p1 >= p2 is enforced"""
    with pytest.raises(InvalidStateError):
        EigenPair(0.25, 0.75)


def test_constant_incoherent_level_three_quarters_gives_half():
    """n_bar = p2 / (p1 - p2) = 1/2"""
    assert constant_incoherent_level(EigenPair(0.75, 0.25)) == pytest.approx(0.5)


def test_constant_incoherent_level_pure_target_gives_zero():
    """Pure target needs no incoherent control"""
    assert constant_incoherent_level(EigenPair(1.0, 0.0)) == 0.0


def test_constant_incoherent_level_maximally_mixed_raises():
    """Degenerate spectrum cannot be reached by constant control"""
    with pytest.raises(UnreachableTargetError):
        constant_incoherent_level(EigenPair(0.5, 0.5))


def test_intermediate_targets_three_quarters_gives_both_orderings():
    """Candidates are (0, 0, +-1/2)"""
    upper, lower = intermediate_targets(EigenPair(0.75, 0.25))
    assert np.allclose(upper.as_array(), [0, 0, 0.5])
    assert np.allclose(lower.as_array(), [0, 0, -0.5])


def test_intermediate_targets_share_target_spectrum():
    """Both candidates have the eigenvalues of the target"""
    pair = EigenPair(0.9, 0.1)
    for candidate in intermediate_targets(pair):
        spectrum = eigenvalues_descending(bloch_to_density(candidate))
        assert (spectrum.p1, spectrum.p2) == pytest.approx((0.9, 0.1))


def test_select_intermediate_target_unknown_ordering_raises():
    """Ordering is 'upper' or 'lower'"""
    with pytest.raises(InvalidStateError):
        select_intermediate_target(EigenPair(0.75, 0.25), "middle")


def test_open_system_params_default_matches_experiment_constants():
    """omega = 1, gamma = 0.002, mu = 0.01, n_max = 100"""
    p = OpenSystemParams.default()
    assert (p.omega, p.gamma, p.mu, p.n_max) == (1.0, 0.002, 0.01, 100.0)


@pytest.mark.parametrize("kwargs", [{"gamma": 0}, {"omega": -1}, {"mu": 0}, {"n_max": 0}])
def test_open_system_params_invalid_raises(kwargs):
    """Nonpositive physical constants are rejected"""
    with pytest.raises(InvalidStateError):
        OpenSystemParams(**kwargs)


def test_piecewise_control_incoherent_negative_raises():
    """Incoherent amplitudes must be nonnegative"""
    with pytest.raises(InvalidStateError):
        PiecewiseConstantControl(1.0, [0.5, -0.1], kind="incoherent")


def test_piecewise_control_coherent_over_bound_raises():
    """|a_k| <= nu when the coherent bound is set"""
    with pytest.raises(InvalidStateError):
        PiecewiseConstantControl(1.0, [0.5, -2.0], kind="coherent", bound=1.0)


def test_piecewise_control_value_at_end_uses_last_interval():
    """v(T) = v(T-) and intervals are right-open"""
    ctrl = PiecewiseConstantControl(2.0, [1.0, 2.0, 3.0, 4.0])
    assert ctrl.dt == pytest.approx(0.5)
    assert ctrl.value_at(0.0) == 1.0
    assert ctrl.value_at(0.5) == 2.0
    assert ctrl.value_at(2.0) == 4.0
