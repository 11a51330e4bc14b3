"""
Compile a target motional superposition sum_n c_n |g,n> into a laser-pulse schedule.

The compiler runs the coalescing direction: starting from the target it
empties the top ground level with a diagonal pulse (|g,n> -> |e,n-1>), then
the excited partner with a vertical pulse (|e,n-1> -> |g,n-1>), and so on
down to |g,0>, tracking every other level with exact ideal rotations.  The
synthesis schedule is that list reversed with every laser phase shifted by pi.

Rotation (theta, chi) means the 2x2 unitary, in (e, g) order,

    [[cos theta,            -e^{i chi} sin theta],
     [e^{-i chi} sin theta,  cos theta          ]]
"""
from __future__ import annotations

import dataclasses
import enum
import json
import logging
import math
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import CompileError, ConfigError, DimensionError
from .hamiltonians import (
    LaserPulse,
    PulseKind,
    TrapParams,
    Wave,
    WaveConfig,
    effective_rabi,
)
from .hilbert import Level, StateVector, inner_product, make_joint_space
from .propagator import evolve_ideal
from .utils import TWO_PI, wrap_phase

LOG = logging.getLogger("ionscope.pulse_compiler")

NORM_TOL = 1e-10
SKIP_THETA = 1e-13
MIN_RELATIVE_RABI = 1e-12

# laser phase realizing rotation (theta, chi) on a block whose effective Rabi
# frequency has phase beta:  phi = (beta - REF) - chi + OFFSET
REFERENCE_PHASE = {PulseKind.VERTICAL: 0.0, PulseKind.DIAGONAL: -math.pi / 2}
PHASE_OFFSET = {PulseKind.VERTICAL: math.pi / 2, PulseKind.DIAGONAL: 0.0}


class Direction(str, enum.Enum):
    SYNTHESIS = "synthesis"
    INVERSE = "inverse"

    def flipped(self) -> "Direction":
        if self is Direction.SYNTHESIS:
            return Direction.INVERSE
        return Direction.SYNTHESIS


@dataclasses.dataclass(frozen=True)
class Rotation:
    theta: float
    chi: float

    def matrix(self) -> NDArray[np.complex128]:
        c, s = math.cos(self.theta), math.sin(self.theta)
        return np.array(
            [[c, -np.exp(1j * self.chi) * s], [np.exp(-1j * self.chi) * s, c]],
            dtype=np.complex128,
        )


def _canonical(theta: float, chi: float) -> Rotation:
    # theta comes from atan2 of magnitudes, so it is already in [0, pi/2]
    return Rotation(theta=min(max(theta, 0.0), math.pi / 2), chi=wrap_phase(chi))


def rotation_to_ground(r_g: float, psi_g: float, r_e: float, psi_e: float) -> Tuple[Rotation, float]:
    """Rotation sending r_g e^{i psi_g}|g> + r_e e^{i psi_e}|e> entirely to |g>.

    Returns the rotation and the phase psi_f of the resulting |g> amplitude.
    """
    if r_g < 0 or r_e < 0:
        raise ValueError("amplitude magnitudes must be non-negative")
    if r_g == 0 and r_e == 0:
        raise ValueError("cannot rotate a pair with both amplitudes zero")
    return _canonical(math.atan2(r_e, r_g), psi_e - psi_g), wrap_phase(psi_g)


def rotation_to_excited(r_g: float, psi_g: float, r_e: float, psi_e: float) -> Tuple[Rotation, float]:
    """Rotation sending the pair entirely to |e>; psi_f is the |e> phase."""
    if r_g < 0 or r_e < 0:
        raise ValueError("amplitude magnitudes must be non-negative")
    if r_g == 0 and r_e == 0:
        raise ValueError("cannot rotate a pair with both amplitudes zero")
    return _canonical(math.atan2(r_g, r_e), psi_e - psi_g + math.pi), wrap_phase(psi_e)


def rabi_from_quality(q: float, trap: TrapParams, N: int, kind: PulseKind) -> float:
    """Laser Rabi frequency for quality factor q and top level N.

    vertical: Omega/2 = q 4 nu / [(N+1) eta]^2;  diagonal: Omega/2 = q nu eta / N.
    """
    kind = PulseKind(kind)
    if not q > 0:
        raise ConfigError(f"quality factor q must be > 0, got {q}")
    if N < 0:
        raise ConfigError(f"top level N must be >= 0, got {N}")
    if kind is PulseKind.VERTICAL:
        return 2.0 * q * 4.0 * trap.nu / ((N + 1) * trap.eta) ** 2
    if N == 0:
        raise ConfigError("a diagonal Rabi frequency needs N >= 1")
    return 2.0 * q * trap.nu * trap.eta / N


@dataclasses.dataclass(frozen=True)
class PulseBudget:
    """m pulses hitting a two-level system with n phonons while it is occupied."""

    m: int
    n: int

    @property
    def mn(self) -> float:
        return float(self.m * self.n)

    @property
    def m_over_sqrt_n(self) -> float:
        return self.m / math.sqrt(self.n) if self.n else math.inf


def worst_case_budget(N: int) -> Tuple[float, float]:
    """Maxima of (mn, m/sqrt(n)) over a schedule with top level N."""
    return ((N + 1) / 2.0) ** 2, float(N)


def validity_ratio(omega: float, trap: TrapParams, N: int, kind: PulseKind) -> float:
    """(Omega/2) divided by the Lamb-Dicke validity bound; equals q for rabi_from_quality."""
    mn, m_over_sqrt_n = worst_case_budget(N)
    if PulseKind(kind) is PulseKind.VERTICAL:
        bound = trap.nu / (mn * trap.eta**2)
    else:
        bound = trap.nu * trap.eta / m_over_sqrt_n
    return 0.5 * omega / bound


def level_shift_product(omega: float, trap: TrapParams, budget: PulseBudget, kind: PulseKind) -> float:
    """t_total * Delta E with Delta E = V^2/Delta of the strongest off-resonant coupling.

    Lamb-Dicke estimate, theta taken of order 1.  A vertical pulse is disturbed
    by the sideband (V = eta sqrt(n) Omega, detuned by nu); a diagonal pulse by
    the carrier (V = Omega, detuned by nu).
    """
    n = max(budget.n, 1)
    if PulseKind(kind) is PulseKind.VERTICAL:
        t_pulse = 2.0 / omega
        shift = (trap.eta * math.sqrt(n) * omega) ** 2 / trap.nu
    else:
        t_pulse = 2.0 / (trap.eta * math.sqrt(n) * omega)
        shift = omega**2 / trap.nu
    return budget.m * t_pulse * shift


@dataclasses.dataclass(frozen=True)
class PulseStep:
    kind: PulseKind
    wave: Wave
    omega: float
    phi: float
    duration: float

    def __post_init__(self):
        object.__setattr__(self, "kind", PulseKind(self.kind))
        object.__setattr__(self, "wave", Wave(self.wave))

    def to_laser(self, trap: TrapParams) -> LaserPulse:
        return LaserPulse.tuned(self.kind, self.omega, self.phi, self.duration, trap, self.wave)

    def inverted(self) -> "PulseStep":
        return dataclasses.replace(self, phi=(self.phi + math.pi) % TWO_PI)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind.value,
            "wave": self.wave.value,
            "omega": self.omega,
            "phi": self.phi,
            "duration": self.duration,
        }

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "PulseStep":
        return cls(
            kind=PulseKind(d["kind"]),
            wave=Wave(d["wave"]),
            omega=float(d["omega"]),
            phi=float(d["phi"]),
            duration=float(d["duration"]),
        )


@dataclasses.dataclass(frozen=True)
class Schedule:
    steps: Tuple[PulseStep, ...]
    target_N: int
    q: float
    direction: Direction = Direction.SYNTHESIS

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        object.__setattr__(self, "direction", Direction(self.direction))

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def total_time(self) -> float:
        return float(sum(s.duration for s in self.steps))

    def nu_t_over_2pi(self, trap: TrapParams) -> float:
        return trap.nu * self.total_time / TWO_PI

    def pulses(self, trap: TrapParams) -> List[LaserPulse]:
        return [s.to_laser(trap) for s in self.steps]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "target_N": self.target_N,
            "q": self.q,
            "direction": self.direction.value,
            "steps": [s.to_dict() for s in self.steps],
        }

    def to_json(self) -> str:
        # repr-based float output is shortest-exact, so this round-trips bit for bit
        return json.dumps(self.to_dict(), allow_nan=False)

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "Schedule":
        return cls(
            steps=tuple(PulseStep.from_dict(s) for s in d["steps"]),
            target_N=int(d["target_N"]),
            q=float(d["q"]),
            direction=Direction(d.get("direction", Direction.SYNTHESIS.value)),
        )

    @classmethod
    def from_json(cls, text: str) -> "Schedule":
        return cls.from_dict(json.loads(text))


def invert(s: Schedule) -> Schedule:
    """Reverse the steps and shift every laser phase by pi."""
    return Schedule(
        steps=tuple(step.inverted() for step in reversed(s.steps)),
        target_N=s.target_N,
        q=s.q,
        direction=s.direction.flipped(),
    )


def fidelity(a: StateVector, b: StateVector) -> float:
    """|<a|b>|^2."""
    return abs(inner_product(a, b)) ** 2


def top_level(coeffs: ArrayLike, tol: float = SKIP_THETA) -> int:
    c = np.abs(np.asarray(coeffs, dtype=np.complex128).reshape(-1))
    occupied = np.nonzero(c > tol)[0]
    return int(occupied[-1]) if occupied.size else 0


def _emit(
    rot: Rotation,
    kind: PulseKind,
    block: int,
    omega: float,
    trap: TrapParams,
    wave: WaveConfig,
) -> PulseStep:
    pulse_wave = wave.for_kind(kind)
    rabi = effective_rabi(kind, pulse_wave, omega, trap.eta, block)
    if abs(rabi) < MIN_RELATIVE_RABI * omega:
        raise CompileError(
            f"effective Rabi frequency of the {kind.value} block {block} vanishes at eta={trap.eta}"
        )
    chi_folded = (np.angle(rabi) - REFERENCE_PHASE[kind]) - rot.chi
    phi = (chi_folded + PHASE_OFFSET[kind]) % TWO_PI
    return PulseStep(kind=kind, wave=pulse_wave, omega=omega, phi=float(phi), duration=2.0 * rot.theta / abs(rabi))


def coalesce(
    target: ArrayLike,
    trap: TrapParams,
    q: float,
    wave: WaveConfig | str = WaveConfig.TRAVELLING,
) -> Schedule:
    """Pulses taking sum_n c_n |g,n> to |g,0> (up to a global phase)."""
    wave = WaveConfig(wave)
    coeffs = np.asarray(target, dtype=np.complex128).reshape(-1)
    if coeffs.size == 0:
        raise DimensionError("target needs at least one coefficient")
    norm = float(np.sum(np.abs(coeffs) ** 2))
    if abs(norm - 1.0) > NORM_TOL:
        raise CompileError(f"target is not normalized: sum |c_n|^2 = {norm:.12g}")
    N = top_level(coeffs)
    if N == 0:
        return Schedule(steps=(), target_N=0, q=q, direction=Direction.INVERSE)

    space = make_joint_space(N)
    state = space.embed(coeffs[: N + 1])
    omega_v = rabi_from_quality(q, trap, N, PulseKind.VERTICAL)
    omega_d = rabi_from_quality(q, trap, N, PulseKind.DIAGONAL)

    steps: List[PulseStep] = []

    def run(step: PulseStep) -> None:
        nonlocal state
        state = evolve_ideal(state, step.to_laser(trap), trap)
        steps.append(step)

    for n in range(N, 0, -1):
        g = state.amps[space.flatten(Level.G, n)]
        e = state.amps[space.flatten(Level.E, n - 1)]
        if abs(g) > SKIP_THETA:
            rot, _ = rotation_to_excited(abs(g), np.angle(g), abs(e), np.angle(e))
            if rot.theta > SKIP_THETA:
                run(_emit(rot, PulseKind.DIAGONAL, n - 1, omega_d, trap, wave))

        g = state.amps[space.flatten(Level.G, n - 1)]
        e = state.amps[space.flatten(Level.E, n - 1)]
        if abs(e) > SKIP_THETA:
            rot, _ = rotation_to_ground(abs(g), np.angle(g), abs(e), np.angle(e))
            if rot.theta > SKIP_THETA:
                run(_emit(rot, PulseKind.VERTICAL, n - 1, omega_v, trap, wave))

    residual = 1.0 - abs(state.amps[0]) ** 2
    if residual > 1e-9:
        raise CompileError(f"coalescing left {residual:.3e} outside |g,0>")
    return Schedule(steps=tuple(steps), target_N=N, q=q, direction=Direction.INVERSE)


def compile(
    target: ArrayLike,
    trap: TrapParams,
    q: float,
    wave: WaveConfig | str = WaveConfig.TRAVELLING,
) -> Schedule:
    """Synthesis schedule U with U|g,0> = sum_n c_n |g,n> (up to a global phase)."""
    coalescing = coalesce(target, trap, q, wave)
    synthesis = invert(coalescing)
    LOG.info(
        "compiled N=%d target into %d pulses (q=%g, eta=%g, wave=%s)",
        synthesis.target_N, len(synthesis), q, trap.eta, WaveConfig(wave).value,
    )
    return synthesis


def synthesized_state(schedule: Schedule, trap: TrapParams, n_max: int) -> StateVector:
    """Ideal-channel image of |g,0> under a schedule."""
    state = make_joint_space(n_max).ground()
    for pulse in schedule.pulses(trap):
        state = evolve_ideal(state, pulse, trap)
    return state


def target_state(coeffs: Sequence[complex] | NDArray[np.complex128], n_max: int) -> StateVector:
    return make_joint_space(n_max).embed(coeffs)
