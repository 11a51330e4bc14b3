"""
Hamiltonians of a single trapped two-level ion driven by a laser.

Conventions
-----------
- Frequencies are in units of the trap frequency nu (default 1.0), times in 1/nu.
- The laser phase enters as ``sigma+ e^{-i phi}`` in every Hamiltonian,
  the approximate block Hamiltonians and the full one alike.
- Full Hamiltonian (interaction picture):

      H(t) = Omega/2 [ sigma+ (x) F(kx(t)) e^{-i phi - i Delta t} + h.c. ]

  with kx(t) = eta (a e^{-i nu t} + a^dagger e^{i nu t}) and
  F = exp(-i .) (travelling wave), cos (antinode) or sin (node).
"""
from __future__ import annotations

import dataclasses
import enum
import functools
import math

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import eigh, expm
from scipy.special import eval_genlaguerre, gammaln

from .errors import ConfigError
from .hilbert import (
    SIGMA_PLUS,
    OperatorMatrix,
    SpaceDescriptor,
    joint,
    position,
)


class PulseKind(str, enum.Enum):
    VERTICAL = "vertical"
    DIAGONAL = "diagonal"


class Wave(str, enum.Enum):
    TRAVELLING = "travelling"
    STANDING_ANTINODE = "standing_antinode"
    STANDING_NODE = "standing_node"


class WaveConfig(str, enum.Enum):
    """Laser geometry for a whole schedule; standing resolves per pulse kind."""

    TRAVELLING = "travelling"
    STANDING = "standing"

    def for_kind(self, kind: PulseKind) -> Wave:
        if self is WaveConfig.TRAVELLING:
            return Wave.TRAVELLING
        return Wave.STANDING_ANTINODE if kind is PulseKind.VERTICAL else Wave.STANDING_NODE


@dataclasses.dataclass(frozen=True)
class TrapParams:
    eta: float
    nu: float = 1.0

    def __post_init__(self):
        if not self.nu > 0:
            raise ConfigError(f"trap frequency nu must be > 0, got {self.nu}")
        if not 0 < self.eta < 2:
            raise ConfigError(f"Lamb-Dicke parameter eta must be in (0, 2), got {self.eta}")


@dataclasses.dataclass(frozen=True)
class LaserPulse:
    omega: float
    delta: float
    phi: float
    duration: float
    wave: Wave
    kind: PulseKind

    def __post_init__(self):
        object.__setattr__(self, "wave", Wave(self.wave))
        object.__setattr__(self, "kind", PulseKind(self.kind))
        if not (self.duration >= 0 and math.isfinite(self.duration)):
            raise ConfigError(f"pulse duration must be finite and >= 0, got {self.duration}")
        if self.kind is PulseKind.VERTICAL and self.wave is Wave.STANDING_NODE:
            raise ConfigError("a vertical pulse needs the ion at an antinode (or a travelling wave)")
        if self.kind is PulseKind.DIAGONAL and self.wave is Wave.STANDING_ANTINODE:
            raise ConfigError("a diagonal pulse needs the ion at a node (or a travelling wave)")

    @classmethod
    def tuned(
        cls,
        kind: PulseKind,
        omega: float,
        phi: float,
        duration: float,
        trap: TrapParams,
        wave: Wave = Wave.TRAVELLING,
    ) -> "LaserPulse":
        """Pulse with the detuning its kind requires: carrier or red sideband."""
        kind = PulseKind(kind)
        delta = 0.0 if kind is PulseKind.VERTICAL else -trap.nu
        return cls(omega=omega, delta=delta, phi=phi, duration=duration, wave=wave, kind=kind)

    def check_tuning(self, trap: TrapParams) -> None:
        expected = 0.0 if self.kind is PulseKind.VERTICAL else -trap.nu
        if self.delta != expected:
            raise ConfigError(
                f"{self.kind.value} pulse must have delta={expected}, got {self.delta}"
            )


# --- effective Rabi frequencies ---------------------------------------------

def displacement_element(n: int, m: int, eta: float) -> complex:
    """<n| exp(-i eta (a + a^dagger)) |m>, exact (no Lamb-Dicke expansion)."""
    if n < 0 or m < 0:
        raise ValueError(f"phonon numbers must be >= 0, got ({n}, {m})")
    lo, hi = min(n, m), max(n, m)
    d = hi - lo
    x = eta * eta
    # sqrt(lo!/hi!) eta^d in log space; eta == 0 leaves only the diagonal
    if eta == 0:
        return complex(1.0 if d == 0 else 0.0)
    mag = math.exp(0.5 * (gammaln(lo + 1) - gammaln(hi + 1)) + d * math.log(abs(eta)) - 0.5 * x)
    sign = math.copysign(1.0, eta) ** d
    return complex((-1j) ** d * sign * mag * eval_genlaguerre(lo, d, x))


def displacement_matrix(eta: float, dim: int = 200) -> OperatorMatrix:
    """exp(-i eta (a + a^dagger)) by brute-force matrix exponential on dim Fock levels."""
    return expm(-1j * eta * position(dim))


def effective_rabi_vertical(omega: float, eta: float, n: int) -> complex:
    """Carrier coupling Omega_n as the finite binomial sum."""
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    x = eta * eta
    total = sum(math.comb(n, k) * (-x) ** k / math.factorial(k) for k in range(n + 1))
    return complex(omega * math.exp(-0.5 * x) * total)


def effective_rabi_diagonal(omega: float, eta: float, n: int) -> complex:
    """Red-sideband coupling Omega'_n of |g,n+1> <-> |e,n> as the finite sum."""
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    x = eta * eta
    total = sum(
        math.comb(n + 1, k + 1) * (-1) ** k * eta ** (2 * k + 1) / math.factorial(k)
        for k in range(n + 1)
    )
    return -1j * omega * math.exp(-0.5 * x) * total / math.sqrt(n + 1)


def effective_rabi(kind: PulseKind, wave: Wave, omega: float, eta: float, n: int) -> complex:
    """Coupling of block n for any wave configuration.

    The cosine keeps the (real) diagonal of exp(-i eta X) and the sine keeps the
    off-diagonal, so the antinode carrier is Omega_n and the node sideband is
    i Omega'_n.
    """
    kind, wave = PulseKind(kind), Wave(wave)
    if kind is PulseKind.VERTICAL:
        return effective_rabi_vertical(omega, eta, n)
    value = effective_rabi_diagonal(omega, eta, n)
    return 1j * value if wave is Wave.STANDING_NODE else value


def block_couplings(pulse: LaserPulse, trap: TrapParams, n_blocks: int) -> NDArray[np.complex128]:
    """Effective Rabi frequency for blocks 0..n_blocks-1 (without the laser phase)."""
    return np.array(
        [effective_rabi(pulse.kind, pulse.wave, pulse.omega, trap.eta, n) for n in range(n_blocks)],
        dtype=np.complex128,
    )


# --- matrix functions of the position quadrature ----------------------------

# extra Fock levels below which the truncated matrix function is exact to rounding
FUNCTION_PADDING = 40


@functools.lru_cache(maxsize=64)
def position_function(eta: float, n_levels: int, wave: Wave) -> OperatorMatrix:
    """F(eta (a + a^dagger)) cropped to n_levels, computed on n_levels + FUNCTION_PADDING levels."""
    w, v = eigh(eta * position(n_levels + FUNCTION_PADDING))
    wave = Wave(wave)
    if wave is Wave.TRAVELLING:
        f = np.exp(-1j * w)
    elif wave is Wave.STANDING_ANTINODE:
        f = np.cos(w).astype(np.complex128)
    else:
        f = np.sin(w).astype(np.complex128)
    out = np.ascontiguousarray(((v * f) @ v.conj().T)[:n_levels, :n_levels])
    out.setflags(write=False)
    return out


def _motional_phases(n_levels: int, nu: float, t: float) -> NDArray[np.complex128]:
    # e^{i nu (m - n) t} carries F(kx(0)) to F(kx(t))
    ph = np.exp(1j * nu * t * np.arange(n_levels))
    return np.outer(ph, ph.conj())


def coupling_operator(t: float, pulse: LaserPulse, trap: TrapParams, space: SpaceDescriptor) -> OperatorMatrix:
    """The sigma+ part K(t) of H(t) = K(t) + K(t)^dagger."""
    f0 = position_function(float(trap.eta), space.n_levels, pulse.wave)
    f_t = f0 * _motional_phases(space.n_levels, trap.nu, t)
    prefactor = 0.5 * pulse.omega * np.exp(-1j * (pulse.phi + pulse.delta * t))
    return prefactor * joint(SIGMA_PLUS, f_t)


def full_hamiltonian(t: float, pulse: LaserPulse, trap: TrapParams, space: SpaceDescriptor) -> OperatorMatrix:
    k = coupling_operator(t, pulse, trap, space)
    return k + k.conj().T


def approx_hamiltonian(pulse: LaserPulse, trap: TrapParams, space: SpaceDescriptor) -> OperatorMatrix:
    """Block-diagonal Hamiltonian of isolated two-level systems.

    vertical: {|g,n>, |e,n>} coupled by Omega_n e^{-i phi}/2;
    diagonal: {|g,n+1>, |e,n>} coupled by Omega'_n e^{-i phi}/2, |e,n_max> left alone.
    """
    h = np.zeros((space.dim, space.dim), dtype=np.complex128)
    n_blocks = space.n_levels if pulse.kind is PulseKind.VERTICAL else space.n_max
    couplings = 0.5 * block_couplings(pulse, trap, n_blocks) * np.exp(-1j * pulse.phi)
    shift = 0 if pulse.kind is PulseKind.VERTICAL else 1
    for n, c in enumerate(couplings):
        e = space.n_levels + n
        g = n + shift
        h[e, g] = c
        h[g, e] = np.conj(c)
    return h
