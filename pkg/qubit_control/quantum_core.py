"""
Quantum Core
Shared qubit types, density-matrix/Bloch conversions and the intermediate
target construction of the two-stage method

Basis convention: sigma_z = diag(1, -1), so rho_11 - rho_22 = x3.
"""

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .errors import InvalidStateError, UnreachableTargetError

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

DEFAULT_TOL = 1e-12


@dataclass(frozen=True)
class BlochState:
    """Point of the closed unit ball representing a qubit density matrix"""

    x1: float
    x2: float
    x3: float

    def __post_init__(self):
        if not np.all(np.isfinite([self.x1, self.x2, self.x3])):
            raise InvalidStateError(f"Bloch vector has non-finite entries: {self}")

    @classmethod
    def from_array(cls, values, tol: float = DEFAULT_TOL) -> "BlochState":
        """Build from a length-3 sequence, checking the ball constraint"""

        arr = np.asarray(values, dtype=float).ravel()
        if arr.shape != (3,):
            raise InvalidStateError(f"Bloch vector needs 3 components, got {arr.shape}")
        state = cls(float(arr[0]), float(arr[1]), float(arr[2]))
        state.check(tol)
        return state

    def as_array(self) -> np.ndarray:
        return np.array([self.x1, self.x2, self.x3])

    def norm(self) -> float:
        return float(np.linalg.norm(self.as_array()))

    def check(self, tol: float = DEFAULT_TOL) -> "BlochState":
        """Raise InvalidStateError outside the unit ball"""

        if self.norm() ** 2 > 1 + tol:
            raise InvalidStateError(f"Bloch vector {self.as_array()} lies outside the unit ball")
        return self


@dataclass(frozen=True)
class DensityMatrix:
    """2x2 qubit density matrix; use validate() before trusting the entries"""

    entries: np.ndarray = field(compare=False)

    def __post_init__(self):
        arr = np.asarray(self.entries, dtype=complex)
        if arr.shape != (2, 2):
            raise InvalidStateError(f"Density matrix must be 2x2, got {arr.shape}")
        object.__setattr__(self, "entries", arr)

    def validate(self, tol: float = DEFAULT_TOL) -> "DensityMatrix":
        """Check Hermiticity, unit trace and positivity"""

        rho = self.entries
        if np.max(np.abs(rho - rho.conj().T)) > tol:
            raise InvalidStateError("Density matrix is not Hermitian")
        if abs(np.trace(rho) - 1) > tol:
            raise InvalidStateError(f"Density matrix trace is {np.trace(rho).real}, expected 1")
        if np.min(np.linalg.eigvalsh(rho)) < -tol:
            raise InvalidStateError("Density matrix is not positive semidefinite")
        return self


@dataclass(frozen=True)
class EigenPair:
    """Eigenvalues of a target density matrix in descending order"""

    p1: float
    p2: float

    def __post_init__(self):
        if self.p1 < self.p2:
            raise InvalidStateError(f"Eigenvalues must be descending, got ({self.p1}, {self.p2})")


@dataclass(frozen=True)
class OpenSystemParams:
    """Physical constants of the GKSL / Bloch system"""

    omega: float = 1.0
    gamma: float = 0.002
    mu: float = 0.01
    n_max: float = 100.0

    def __post_init__(self):
        if self.omega <= 0:
            raise InvalidStateError(f"omega must be positive, got {self.omega}")
        if self.gamma <= 0:
            raise InvalidStateError(f"gamma must be positive, got {self.gamma}")
        if self.mu == 0:
            raise InvalidStateError("mu must be nonzero")
        if self.n_max <= 0:
            raise InvalidStateError(f"n_max must be positive, got {self.n_max}")

    @classmethod
    def default(cls) -> "OpenSystemParams":
        """omega = 1, gamma = 0.002, mu = 0.01, n_max = 100"""
        return cls()


@dataclass(frozen=True)
class PiecewiseConstantControl:
    """Final time plus N amplitudes on a uniform grid.

    ``kind`` tags the admissible set: "coherent" (any real amplitudes, or
    |a_k| <= bound when bound is set) or "incoherent" (a_k >= 0, and
    a_k <= bound when bound is set).
    """

    duration: float
    amplitudes: np.ndarray = field(compare=False)
    kind: str = "coherent"
    bound: Optional[float] = None

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=float).ravel()
        object.__setattr__(self, "amplitudes", amps)

        if self.duration <= 0:
            raise InvalidStateError(f"Control duration must be positive, got {self.duration}")
        if amps.size < 1:
            raise InvalidStateError("Control needs at least one amplitude")
        if not np.all(np.isfinite(amps)):
            raise InvalidStateError("Control amplitudes must be finite")

        if self.kind == "incoherent":
            if np.any(amps < 0):
                raise InvalidStateError("Incoherent control amplitudes must be nonnegative")
            if self.bound is not None and np.any(amps > self.bound):
                raise InvalidStateError(f"Incoherent control exceeds ceiling {self.bound}")
        elif self.kind == "coherent":
            if self.bound is not None and np.any(np.abs(amps) > self.bound):
                raise InvalidStateError(f"Coherent control exceeds amplitude bound {self.bound}")
        else:
            raise InvalidStateError(f"Unknown control kind '{self.kind}'")

    @property
    def n_intervals(self) -> int:
        return int(self.amplitudes.size)

    @property
    def dt(self) -> float:
        return self.duration / self.n_intervals

    def value_at(self, t: float) -> float:
        """Amplitude active at time t (right-continuous, v(T) = v(T-))"""

        k = min(int(np.floor(t / self.dt)), self.n_intervals - 1)
        return float(self.amplitudes[max(k, 0)])


def density_to_bloch(rho, tol: float = DEFAULT_TOL) -> BlochState:
    """x_j = Tr(rho sigma_j)"""

    if not isinstance(rho, DensityMatrix):
        rho = DensityMatrix(rho)
    rho.validate(tol)

    m = rho.entries
    x = [float(np.real(np.trace(m @ s))) for s in (SIGMA_X, SIGMA_Y, SIGMA_Z)]
    return BlochState(*x)


def bloch_to_density(x: BlochState, tol: float = DEFAULT_TOL) -> DensityMatrix:
    """rho = (I + x1 sigma_x + x2 sigma_y + x3 sigma_z) / 2"""

    x.check(tol)
    rho = (IDENTITY + x.x1 * SIGMA_X + x.x2 * SIGMA_Y + x.x3 * SIGMA_Z) / 2
    return DensityMatrix(rho)


def eigenvalues_descending(rho, tol: float = DEFAULT_TOL) -> EigenPair:
    """Closed form p = 1/2 +- |x|/2"""

    r = density_to_bloch(rho, tol).norm()
    return EigenPair(0.5 + r / 2, 0.5 - r / 2)


def is_pure(rho, tol: float = 1e-10) -> bool:
    """rho is a rank-1 projector (rho^2 = rho)"""

    m = rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    return bool(np.max(np.abs(m @ m - m)) <= tol)


def constant_incoherent_level(p: EigenPair, tol: float = DEFAULT_TOL) -> float:
    """n_bar = p2 / (p1 - p2), the constant control whose steady state has the target spectrum"""

    gap = p.p1 - p.p2
    if gap <= tol:
        raise UnreachableTargetError("intermediate target unreachable by constant control")
    return p.p2 / gap


def intermediate_targets(p: EigenPair) -> Tuple[BlochState, BlochState]:
    """Both diagonal candidates: (0, 0, p1 - p2) and (0, 0, p2 - p1)"""

    gap = p.p1 - p.p2
    return BlochState(0.0, 0.0, gap), BlochState(0.0, 0.0, -gap)


def select_intermediate_target(p: EigenPair, ordering: str) -> BlochState:
    """Pick the "upper" (x3 > 0) or "lower" (x3 < 0) diagonal candidate"""

    upper, lower = intermediate_targets(p)
    if ordering == "upper":
        return upper
    if ordering == "lower":
        return lower
    raise InvalidStateError(f"Intermediate target ordering must be 'upper' or 'lower', got '{ordering}'")


def bloch_distance(x: BlochState, y: BlochState) -> float:
    return float(np.linalg.norm(x.as_array() - y.as_array()))


def hilbert_schmidt_distance_sq(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Tr((rho - sigma)^2); equals half the squared Bloch distance"""

    diff = rho.entries - sigma.entries
    return float(np.real(np.trace(diff @ diff)))
