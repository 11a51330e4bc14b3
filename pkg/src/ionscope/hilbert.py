"""
Dense linear algebra on the joint (two-level internal) x (truncated phonon) space.

Flat layout: the ground-level block comes first, then the excited block, so
|g,n> sits at index n and |e,n> at index n + n_max + 1.  Joint operators are
``np.kron(internal, phonon)`` in that order.
"""
from __future__ import annotations

import dataclasses
import enum
from typing import Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DimensionError, EmptyBranchError

# Operators are plain dense complex matrices.
OperatorMatrix = NDArray[np.complex128]

NORM_TOL = 1e-12
DEGENERACY_TOL = 1e-14


class Level(enum.IntEnum):
    G = 0
    E = 1


@dataclasses.dataclass(frozen=True)
class JointIndex:
    level: Level
    phonons: int


@dataclasses.dataclass(frozen=True, eq=False)
class StateVector:
    """Immutable complex amplitude vector."""

    amps: NDArray[np.complex128]

    def __post_init__(self):
        amps = np.array(self.amps, dtype=np.complex128, copy=True).reshape(-1)
        if amps.size == 0:
            raise DimensionError("StateVector needs at least one amplitude")
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)

    @property
    def dim(self) -> int:
        return self.amps.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def normalize(self) -> "StateVector":
        n = self.norm()
        if n < DEGENERACY_TOL:
            raise EmptyBranchError("Cannot normalize a zero vector", n * n)
        return StateVector(self.amps / n)

    def probabilities(self) -> NDArray[np.float64]:
        return np.abs(self.amps) ** 2

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StateVector):
            return NotImplemented
        return self.dim == other.dim and bool(np.array_equal(self.amps, other.amps))

    def __repr__(self) -> str:
        return f"StateVector(dim={self.dim})"


@dataclasses.dataclass(frozen=True)
class SpaceDescriptor:
    """Joint space |level> (x) |n>, n = 0..n_max."""

    n_max: int

    def __post_init__(self):
        if self.n_max < 0:
            raise DimensionError(f"n_max must be >= 0, got {self.n_max}")

    @property
    def n_levels(self) -> int:
        return self.n_max + 1

    @property
    def dim(self) -> int:
        return 2 * self.n_levels

    def flatten(self, level: Level, phonons: int) -> int:
        if not 0 <= phonons <= self.n_max:
            raise DimensionError(f"phonon number {phonons} outside 0..{self.n_max}")
        return phonons + (self.n_levels if level == Level.E else 0)

    def unflatten(self, index: int) -> JointIndex:
        if not 0 <= index < self.dim:
            raise DimensionError(f"flat index {index} outside 0..{self.dim - 1}")
        level, n = divmod(index, self.n_levels)
        return JointIndex(Level(level), n)

    def basis_state(self, level: Level, phonons: int) -> StateVector:
        amps = np.zeros(self.dim, dtype=np.complex128)
        amps[self.flatten(level, phonons)] = 1.0
        return StateVector(amps)

    def ground(self) -> StateVector:
        return self.basis_state(Level.G, 0)

    def embed(self, coeffs: ArrayLike, level: Level = Level.G) -> StateVector:
        """Place phonon coefficients c_0..c_N on one internal level."""
        coeffs = np.asarray(coeffs, dtype=np.complex128).reshape(-1)
        if coeffs.size > self.n_levels:
            raise DimensionError(
                f"{coeffs.size} phonon coefficients do not fit n_max={self.n_max}"
            )
        amps = np.zeros(self.dim, dtype=np.complex128)
        start = self.n_levels if level == Level.E else 0
        amps[start : start + coeffs.size] = coeffs
        return StateVector(amps)

    def split(self, state: StateVector) -> Tuple[NDArray[np.complex128], NDArray[np.complex128]]:
        """Return the (ground, excited) phonon blocks of a joint state."""
        _check_dim(state.dim, self.dim)
        return state.amps[: self.n_levels], state.amps[self.n_levels :]

    def phonon_population(self, state: StateVector) -> NDArray[np.float64]:
        g, e = self.split(state)
        return np.abs(g) ** 2 + np.abs(e) ** 2


def make_joint_space(n_max: int) -> SpaceDescriptor:
    return SpaceDescriptor(int(n_max))


def _check_dim(a: int, b: int) -> None:
    if a != b:
        raise DimensionError(f"dimension mismatch: {a} != {b}")


def inner_product(a: StateVector, b: StateVector) -> complex:
    """<a|b>, conjugate-linear in ``a``."""
    _check_dim(a.dim, b.dim)
    return complex(np.vdot(a.amps, b.amps))


def apply(m: OperatorMatrix, v: StateVector) -> StateVector:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"operator must be square, got shape {m.shape}")
    _check_dim(m.shape[1], v.dim)
    return StateVector(m @ v.amps)


def project_and_normalize(
    v: StateVector, projector: OperatorMatrix, tol: float = DEGENERACY_TOL
) -> Tuple[float, StateVector]:
    """Return (<v|P|v>, Pv/||Pv||); raises EmptyBranchError when <v|P|v> <= tol."""
    projected = apply(projector, v)
    prob = float(np.real(np.vdot(v.amps, projected.amps)))
    if prob <= tol:
        raise EmptyBranchError(f"empty branch: projection probability {prob:.3e}", prob)
    return prob, StateVector(projected.amps / np.linalg.norm(projected.amps))


def projector(vectors: Sequence[ArrayLike] | ArrayLike) -> OperatorMatrix:
    """Orthogonal projector onto the span of orthonormal vectors."""
    vs = np.atleast_2d(np.asarray(vectors, dtype=np.complex128))
    return vs.T @ vs.conj()


# --- elementary operators ---------------------------------------------------

def annihilation(n_levels: int) -> OperatorMatrix:
    return np.diag(np.sqrt(np.arange(1, n_levels, dtype=np.float64)), k=1).astype(np.complex128)


def position(n_levels: int) -> OperatorMatrix:
    """Truncated quadrature a + a^dagger."""
    a = annihilation(n_levels)
    return a + a.conj().T


# internal order (g, e): sigma+ = |e><g|
SIGMA_PLUS: OperatorMatrix = np.array([[0, 0], [1, 0]], dtype=np.complex128)
SIGMA_PLUS.setflags(write=False)


def joint(internal: OperatorMatrix, phonon: OperatorMatrix) -> OperatorMatrix:
    return np.kron(internal, phonon)


def is_hermitian(m: OperatorMatrix, tol: float = 1e-12) -> bool:
    return bool(np.max(np.abs(m - m.conj().T), initial=0.0) < tol)


def is_unitary(m: OperatorMatrix, tol: float = 1e-10) -> bool:
    return bool(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0])), initial=0.0) < tol)
