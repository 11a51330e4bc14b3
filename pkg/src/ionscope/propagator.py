"""
Time evolution of the ion under a single laser pulse.

``evolve_full`` integrates the full interaction-picture Hamiltonian,
``evolve_ideal`` rotates the isolated two-level blocks of the approximate one.
Both take and return interaction-picture states.

Rotating frames: with U_f(t) = exp(i G_f t), G_rfv = nu a^dagger a and
G_rfd = nu (a^dagger a + sigma_z/2), the frame Hamiltonian is
G_f + U_f^dagger H(t) U_f.  A vertical pulse is stationary in rfv and a
diagonal pulse in rfd; there the propagator is the exact exponential.
Everything else goes through fixed-step RK4 with Richardson halving.
"""
from __future__ import annotations

import dataclasses
import enum
import logging
import math
from typing import Iterable, Tuple

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import eigh

from .errors import ConfigError, DimensionError, PropagationError
from .hamiltonians import LaserPulse, PulseKind, TrapParams, block_couplings, full_hamiltonian
from .hilbert import OperatorMatrix, SpaceDescriptor, StateVector, make_joint_space

LOG = logging.getLogger("ionscope.propagator")

NORM_DRIFT_WARN = 1e-8


class Frame(str, enum.Enum):
    AUTO = "auto"
    RFV = "rfv"
    RFD = "rfd"
    LAB = "lab"


class Method(str, enum.Enum):
    AUTO = "auto"
    RK4 = "rk4"


@dataclasses.dataclass(frozen=True)
class IntegratorConfig:
    step_scale: float = 0.05
    rtol: float = 1e-9
    frame: Frame = Frame.AUTO
    method: Method = Method.AUTO
    max_halvings: int = 6
    max_steps: int = 5_000_000

    def __post_init__(self):
        object.__setattr__(self, "frame", Frame(self.frame))
        object.__setattr__(self, "method", Method(self.method))
        if not 0 < self.step_scale <= 0.5:
            raise ConfigError(f"step_scale must be in (0, 0.5], got {self.step_scale}")
        if not self.rtol > 0:
            raise ConfigError(f"rtol must be > 0, got {self.rtol}")

    def to_dict(self) -> dict:
        return {
            "step_scale": self.step_scale,
            "rtol": self.rtol,
            "frame": self.frame.value,
            "method": self.method.value,
            "max_halvings": self.max_halvings,
            "max_steps": self.max_steps,
        }


def space_of(state: StateVector) -> SpaceDescriptor:
    if state.dim % 2:
        raise DimensionError(f"joint-space state must have even dimension, got {state.dim}")
    return make_joint_space(state.dim // 2 - 1)


def resolve_frame(frame: Frame, kind: PulseKind) -> Frame:
    if frame is not Frame.AUTO:
        return frame
    return Frame.RFV if kind is PulseKind.VERTICAL else Frame.RFD


def frame_generator(frame: Frame, trap: TrapParams, space: SpaceDescriptor) -> NDArray[np.float64]:
    """Diagonal of G_f over the flat joint index."""
    n = np.arange(space.n_levels, dtype=np.float64)
    if frame is Frame.RFV:
        return trap.nu * np.concatenate([n, n])
    if frame is Frame.RFD:
        return trap.nu * np.concatenate([n - 0.5, n + 0.5])
    return np.zeros(space.dim)


def to_lab_frame(state: StateVector, frame: Frame, t: float, trap: TrapParams) -> StateVector:
    """psi = U_f(t) psi_f."""
    g = frame_generator(Frame(frame), trap, space_of(state))
    return StateVector(np.exp(1j * g * t) * state.amps)


def from_lab_frame(state: StateVector, frame: Frame, t: float, trap: TrapParams) -> StateVector:
    g = frame_generator(Frame(frame), trap, space_of(state))
    return StateVector(np.exp(-1j * g * t) * state.amps)


def is_stationary(frame: Frame, kind: PulseKind) -> bool:
    return (frame is Frame.RFV and kind is PulseKind.VERTICAL) or (
        frame is Frame.RFD and kind is PulseKind.DIAGONAL
    )


def _rate_bound(pulse: LaserPulse, trap: TrapParams, space: SpaceDescriptor) -> float:
    return 0.5 * abs(pulse.omega) + trap.nu * (space.n_max + 1) + abs(pulse.delta)


def _frame_hamiltonian(
    t: float, pulse: LaserPulse, trap: TrapParams, space: SpaceDescriptor, gen: NDArray[np.float64]
) -> OperatorMatrix:
    h = full_hamiltonian(t, pulse, trap, space)
    if not gen.any():
        return h
    w = np.exp(1j * gen * t)
    # U_f^dagger H U_f + G_f
    h = (w.conj()[:, None] * h) * w[None, :]
    return h + np.diag(gen)


def _rk4(
    y: NDArray[np.complex128],
    t0: float,
    duration: float,
    n_steps: int,
    pulse: LaserPulse,
    trap: TrapParams,
    space: SpaceDescriptor,
    gen: NDArray[np.float64],
) -> NDArray[np.complex128]:
    h = duration / n_steps
    for i in range(n_steps):
        t = t0 + i * h
        h1 = _frame_hamiltonian(t, pulse, trap, space, gen)
        h2 = _frame_hamiltonian(t + 0.5 * h, pulse, trap, space, gen)
        h3 = _frame_hamiltonian(t + h, pulse, trap, space, gen)
        k1 = -1j * (h1 @ y)
        k2 = -1j * (h2 @ (y + 0.5 * h * k1))
        k3 = -1j * (h2 @ (y + 0.5 * h * k2))
        k4 = -1j * (h3 @ (y + h * k3))
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return y


def _integrate(
    y: NDArray[np.complex128],
    pulse: LaserPulse,
    trap: TrapParams,
    space: SpaceDescriptor,
    cfg: IntegratorConfig,
    frame: Frame,
    t0: float,
) -> Tuple[NDArray[np.complex128], float]:
    """RK4 in ``frame`` with step halving until two resolutions agree to rtol."""
    gen = frame_generator(frame, trap, space)
    g0 = np.exp(-1j * gen * t0)
    y = g0[:, None] * y if y.ndim == 2 else g0 * y

    n_steps = max(1, math.ceil(pulse.duration * _rate_bound(pulse, trap, space) / cfg.step_scale))
    coarse = _rk4(y, t0, pulse.duration, n_steps, pulse, trap, space, gen)
    err = math.inf
    for _ in range(cfg.max_halvings + 1):
        if 2 * n_steps > cfg.max_steps:
            raise PropagationError(
                f"step-size underflow: pulse of duration {pulse.duration:g} needs more than "
                f"{cfg.max_steps} steps for rtol={cfg.rtol:g}",
                err,
            )
        n_steps *= 2
        fine = _rk4(y, t0, pulse.duration, n_steps, pulse, trap, space, gen)
        err = float(np.max(np.abs(fine - coarse)))
        if err <= cfg.rtol:
            break
        coarse = fine
    else:
        raise PropagationError(
            f"RK4 did not converge after {cfg.max_halvings} halvings ({n_steps} steps)", err
        )

    g1 = np.exp(1j * gen * (t0 + pulse.duration))
    out = g1[:, None] * fine if fine.ndim == 2 else g1 * fine
    return out, err


def pulse_propagator(
    pulse: LaserPulse,
    trap: TrapParams,
    space: SpaceDescriptor,
    cfg: IntegratorConfig | None = None,
    t0: float = 0.0,
) -> OperatorMatrix:
    """Full-Hamiltonian propagator from t0 to t0 + duration, as a matrix."""
    cfg = cfg or IntegratorConfig()
    pulse.check_tuning(trap)
    frame = resolve_frame(cfg.frame, pulse.kind)
    if pulse.duration == 0 or pulse.omega == 0:
        return np.eye(space.dim, dtype=np.complex128)
    if cfg.method is Method.AUTO and is_stationary(frame, pulse.kind):
        gen = frame_generator(frame, trap, space)
        # the frame Hamiltonian is its t = 0 value for the whole pulse
        w, v = eigh(full_hamiltonian(0.0, pulse, trap, space) + np.diag(gen))
        inner = (v * np.exp(-1j * w * pulse.duration)) @ v.conj().T
        t1 = t0 + pulse.duration
        return (np.exp(1j * gen * t1)[:, None] * inner) * np.exp(-1j * gen * t0)[None, :]
    out, _ = _integrate(np.eye(space.dim, dtype=np.complex128), pulse, trap, space, cfg, frame, t0)
    return out


def evolve_full(
    state: StateVector,
    pulse: LaserPulse,
    trap: TrapParams,
    cfg: IntegratorConfig | None = None,
    t0: float = 0.0,
) -> StateVector:
    cfg = cfg or IntegratorConfig()
    space = space_of(state)
    pulse.check_tuning(trap)
    frame = resolve_frame(cfg.frame, pulse.kind)
    if pulse.duration == 0 or pulse.omega == 0:
        return state
    if cfg.method is Method.AUTO and is_stationary(frame, pulse.kind):
        out = StateVector(pulse_propagator(pulse, trap, space, cfg, t0) @ state.amps)
    else:
        amps, err = _integrate(state.amps, pulse, trap, space, cfg, frame, t0)
        LOG.debug("RK4 %s pulse, duration=%g, error estimate %.2e", pulse.kind.value, pulse.duration, err)
        out = StateVector(amps)
    drift = abs(out.norm() - state.norm())
    if drift > NORM_DRIFT_WARN:
        LOG.warning("norm drift %.2e over a %s pulse of duration %g", drift, pulse.kind.value, pulse.duration)
    return out


def _rotate_blocks(
    g: NDArray[np.complex128], e: NDArray[np.complex128], couplings: NDArray[np.complex128], duration: float
) -> Tuple[NDArray[np.complex128], NDArray[np.complex128]]:
    # block Hamiltonian [[0, c], [c*, 0]] in (e, g) order
    theta = np.abs(couplings) * duration
    phase = np.exp(1j * np.angle(couplings))
    cos, sin = np.cos(theta), np.sin(theta)
    return cos * g - 1j * phase.conj() * sin * e, cos * e - 1j * phase * sin * g


def evolve_ideal(state: StateVector, pulse: LaserPulse, trap: TrapParams) -> StateVector:
    """Exact evolution under the approximate (isolated two-level) Hamiltonian."""
    space = space_of(state)
    if pulse.duration == 0 or pulse.omega == 0:
        return state
    g, e = (np.array(part) for part in space.split(state))
    if pulse.kind is PulseKind.VERTICAL:
        c = 0.5 * block_couplings(pulse, trap, space.n_levels) * np.exp(-1j * pulse.phi)
        g, e = _rotate_blocks(g, e, c, pulse.duration)
    elif space.n_max > 0:
        c = 0.5 * block_couplings(pulse, trap, space.n_max) * np.exp(-1j * pulse.phi)
        g[1:], e[:-1] = _rotate_blocks(g[1:], e[:-1], c, pulse.duration)
    return StateVector(np.concatenate([g, e]))


def evolve_pulses(
    state: StateVector,
    pulses: Iterable[LaserPulse],
    trap: TrapParams,
    cfg: IntegratorConfig | None = None,
    ideal: bool = False,
) -> StateVector:
    """Apply pulses back to back on one clock starting at t = 0."""
    t = 0.0
    for pulse in pulses:
        if ideal:
            state = evolve_ideal(state, pulse, trap)
        else:
            state = evolve_full(state, pulse, trap, cfg, t0=t)
        t += pulse.duration
    return state


def pulses_propagator(
    pulses: Iterable[LaserPulse],
    trap: TrapParams,
    space: SpaceDescriptor,
    cfg: IntegratorConfig | None = None,
) -> OperatorMatrix:
    u = np.eye(space.dim, dtype=np.complex128)
    t = 0.0
    for pulse in pulses:
        u = pulse_propagator(pulse, trap, space, cfg, t0=t) @ u
        t += pulse.duration
    return u


def edge_population(state: StateVector) -> float:
    """Population in the top phonon level of the truncated space."""
    return float(space_of(state).phonon_population(state)[-1])
