"""
Sequential ground-state filtering measurement of an arbitrary observable.

Step k: transform by U_k^dagger, ask "is the ion in |g,0>?", transform back
by U_k.  A "yes" leaves the ion in |psi_k> and reports a_k; a "no" projects
out |psi_k> and the protocol moves on to k+1.  The filter itself is an ideal
projective measurement onto |g,0> versus its complement.

Modes:
    ideal  U_k are exact; the net step is the projector pair on |psi_k>.
    full   U_k is a compiled schedule evolved under the full Hamiltonian,
           U_k^dagger its inverted schedule (exact only for the ideal channel).
"""
from __future__ import annotations

import dataclasses
import enum
import functools
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import ConfigError, DimensionError, EmptyBranchError
from .hamiltonians import TrapParams, WaveConfig
from .hilbert import DEGENERACY_TOL, SpaceDescriptor, StateVector, make_joint_space, project_and_normalize, projector
from .observables import BasisKind, ObservableBasis, StateRecipe, make_basis
from .propagator import IntegratorConfig, pulses_propagator
from .pulse_compiler import Schedule, compile, invert
from .utils import chunked, json_safe

LOG = logging.getLogger("ionscope.measurement")

RESIDUE_TOL = 1e-10
DEFAULT_PADDING = 8


class ModeKind(str, enum.Enum):
    IDEAL = "ideal"
    FULL = "full"


@dataclasses.dataclass(frozen=True)
class ProtocolMode:
    kind: ModeKind = ModeKind.IDEAL
    trap: Optional[TrapParams] = None
    q: float = 0.1
    wave: WaveConfig = WaveConfig.TRAVELLING
    integrator: IntegratorConfig = IntegratorConfig()
    padding: int = DEFAULT_PADDING
    efficiency: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", ModeKind(self.kind))
        object.__setattr__(self, "wave", WaveConfig(self.wave))
        if not 0 < self.efficiency <= 1:
            raise ConfigError(f"detector efficiency must be in (0, 1], got {self.efficiency}")
        if self.kind is ModeKind.FULL:
            if self.trap is None:
                raise ConfigError("full mode needs trap parameters")
            if not self.q > 0:
                raise ConfigError(f"full mode needs q > 0, got {self.q}")
            if self.padding < 0:
                raise ConfigError(f"phonon padding must be >= 0, got {self.padding}")

    @classmethod
    def ideal(cls, efficiency: float = 1.0) -> "ProtocolMode":
        return cls(ModeKind.IDEAL, efficiency=efficiency)

    @classmethod
    def full(
        cls,
        trap: TrapParams,
        q: float,
        wave: WaveConfig | str = WaveConfig.TRAVELLING,
        integrator: IntegratorConfig | None = None,
        padding: int = DEFAULT_PADDING,
        efficiency: float = 1.0,
    ) -> "ProtocolMode":
        return cls(
            ModeKind.FULL,
            trap=trap,
            q=q,
            wave=WaveConfig(wave),
            integrator=integrator or IntegratorConfig(),
            padding=padding,
            efficiency=efficiency,
        )


@dataclasses.dataclass(frozen=True, eq=False)
class FullModeChannel:
    """Per-eigenstate schedules and their full-Hamiltonian propagators."""

    space: SpaceDescriptor
    schedules: Tuple[Schedule, ...]
    forward: Tuple[NDArray[np.complex128], ...]
    backward: Tuple[NDArray[np.complex128], ...]
    targets: NDArray[np.complex128]


def build_channel(basis: ObservableBasis, mode: ProtocolMode) -> FullModeChannel:
    if mode.kind is not ModeKind.FULL:
        raise ConfigError("only full mode uses compiled schedules")
    space = make_joint_space(basis.N + mode.padding)
    schedules, forward, backward = [], [], []
    for k in range(basis.dim):
        schedule = compile(basis.state(k), mode.trap, mode.q, mode.wave)
        schedules.append(schedule)
        forward.append(pulses_propagator(schedule.pulses(mode.trap), mode.trap, space, mode.integrator))
        backward.append(
            pulses_propagator(invert(schedule).pulses(mode.trap), mode.trap, space, mode.integrator)
        )
    targets = np.stack([space.embed(basis.state(k)).amps for k in range(basis.dim)], axis=1)
    LOG.info("built full-mode channel: %d schedules on n_max=%d", len(schedules), space.n_max)
    return FullModeChannel(space, tuple(schedules), tuple(forward), tuple(backward), targets)


@functools.lru_cache(maxsize=8)
def _cached_channel(kind: BasisKind, N: int, mode: ProtocolMode) -> FullModeChannel:
    return build_channel(make_basis(kind, N), mode)


def channel_for(basis: ObservableBasis, mode: ProtocolMode) -> FullModeChannel:
    """Full-mode channel for a standard basis, compiled once per (basis, mode)."""
    return _cached_channel(basis.kind, basis.N, mode)


@dataclasses.dataclass(frozen=True)
class FilterOutcome:
    p_yes: float
    yes_state: Optional[StateVector]
    p_no: float
    no_state: Optional[StateVector]


def filter_ground(state: StateVector) -> FilterOutcome:
    """Both branches of the |g,0> filter; a degenerate branch has state None."""
    if state.dim % 2:
        raise DimensionError(f"filter acts on joint-space states, got dimension {state.dim}")
    g0 = np.zeros(state.dim, dtype=np.complex128)
    g0[0] = 1.0
    p_ground = projector(g0)
    branches = []
    for proj in (p_ground, np.eye(state.dim) - p_ground):
        try:
            branches.append(project_and_normalize(state, proj))
        except EmptyBranchError as e:
            branches.append((max(e.probability, 0.0), None))
    (p_yes, yes), (p_no, no) = branches
    return FilterOutcome(p_yes, yes, p_no, no)


def _detected(mode: ProtocolMode, rng: np.random.Generator) -> bool:
    return mode.efficiency >= 1.0 or rng.random() < mode.efficiency


def _ideal_step(
    state: StateVector, k: int, basis: ObservableBasis, mode: ProtocolMode, rng: np.random.Generator
) -> Tuple[bool, StateVector]:
    psi = basis.state(k)
    amp = np.vdot(psi, state.amps)
    p = float(abs(amp) ** 2)
    rest = state.amps - amp * psi
    p_no = float(np.vdot(rest, rest).real)
    if p_no <= DEGENERACY_TOL or rng.random() < p:
        return _detected(mode, rng), StateVector(psi)
    return False, StateVector(rest / np.sqrt(p_no))


def _full_step(
    state: StateVector,
    k: int,
    mode: ProtocolMode,
    channel: FullModeChannel,
    rng: np.random.Generator,
) -> Tuple[bool, StateVector]:
    chi = StateVector(channel.backward[k] @ state.amps)
    outcome = filter_ground(chi)
    if outcome.no_state is None or (outcome.yes_state is not None and rng.random() < outcome.p_yes):
        fired, post = _detected(mode, rng), outcome.yes_state
    else:
        fired, post = False, outcome.no_state
    return fired, StateVector(channel.forward[k] @ post.amps)


def protocol_step(
    state: StateVector,
    k: int,
    basis: ObservableBasis,
    mode: ProtocolMode,
    rng: np.random.Generator,
    channel: FullModeChannel | None = None,
) -> Tuple[bool, StateVector]:
    """One filter step; returns (fired, state after the step)."""
    if not 0 <= k < basis.dim:
        raise DimensionError(f"step {k} outside basis of size {basis.dim}")
    if mode.kind is ModeKind.IDEAL:
        if state.dim != basis.dim:
            raise DimensionError(f"state dimension {state.dim} != basis dimension {basis.dim}")
        return _ideal_step(state, k, basis, mode, rng)
    channel = channel or channel_for(basis, mode)
    if state.dim != channel.space.dim:
        raise DimensionError(f"state dimension {state.dim} != joint dimension {channel.space.dim}")
    return _full_step(state, k, mode, channel, rng)


@dataclasses.dataclass(frozen=True)
class MeasurementRecord:
    outcome_k: int
    eigenvalue: float
    steps_taken: int
    final_fidelity: float
    seed: int
    trial: int = 0
    forced: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)

    def to_json_line(self) -> str:
        return json.dumps(json_safe(self.to_dict()), allow_nan=False)


def initial_state(recipe: StateRecipe, basis: ObservableBasis, mode: ProtocolMode, channel: FullModeChannel | None) -> StateVector:
    coeffs = recipe.padded(basis.dim)
    if mode.kind is ModeKind.IDEAL:
        return StateVector(coeffs)
    return channel.space.embed(coeffs)


def run_single(
    recipe: StateRecipe,
    basis: ObservableBasis,
    mode: ProtocolMode,
    seed: int,
    channel: FullModeChannel | None = None,
    trial: int = 0,
) -> MeasurementRecord:
    if mode.kind is ModeKind.FULL and channel is None:
        channel = channel_for(basis, mode)
    rng = np.random.default_rng(seed)
    state = initial_state(recipe, basis, mode, channel)
    outcome, forced = basis.N, True
    for k in range(basis.dim):
        fired, state = protocol_step(state, k, basis, mode, rng, channel)
        if fired:
            outcome, forced = k, False
            break
    if forced:
        LOG.warning("trial %d: no filter fired after %d steps; assigned k=%d", trial, basis.dim, outcome)

    if mode.kind is ModeKind.IDEAL:
        target = basis.state(outcome)
    else:
        target = channel.targets[:, outcome]
    final = float(abs(np.vdot(target, state.amps)) ** 2)
    return MeasurementRecord(
        outcome_k=outcome,
        eigenvalue=float(basis.eigenvalues[outcome]),
        steps_taken=basis.dim if forced else outcome + 1,
        final_fidelity=final,
        seed=int(seed),
        trial=trial,
        forced=forced,
    )


def trial_seed(master_seed: int, trial: int) -> int:
    """Seed of one trial, a hash of (master seed, trial index)."""
    if master_seed < 0:
        raise ConfigError(f"seed must be >= 0, got {master_seed}")
    return int(np.random.SeedSequence([master_seed, trial]).generate_state(1, dtype=np.uint64)[0])


@dataclasses.dataclass(frozen=True, eq=False)
class TrialResult:
    counts: NDArray[np.int64]
    records: Tuple[MeasurementRecord, ...]

    @property
    def frequencies(self) -> NDArray[np.float64]:
        return self.counts / max(1, int(self.counts.sum()))

    @property
    def forced(self) -> int:
        return sum(r.forced for r in self.records)


def _run_chunk(
    args: Tuple[StateRecipe, ObservableBasis, ProtocolMode, int, FullModeChannel | None, Sequence[int]],
) -> List[MeasurementRecord]:
    recipe, basis, mode, seed, channel, trials = args
    return [run_single(recipe, basis, mode, trial_seed(seed, i), channel, trial=i) for i in trials]


def run_trials(
    recipe: StateRecipe,
    basis: ObservableBasis,
    mode: ProtocolMode,
    trials: int,
    seed: int,
    jobs: int = 1,
    channel: FullModeChannel | None = None,
) -> TrialResult:
    """Monte Carlo histogram; per-trial seeds make the result independent of ``jobs``."""
    if trials < 1:
        raise ConfigError(f"trials must be >= 1, got {trials}")
    if mode.kind is ModeKind.FULL and channel is None:
        channel = channel_for(basis, mode)
    indices = list(range(trials))
    if jobs <= 1:
        records = _run_chunk((recipe, basis, mode, seed, channel, indices))
    else:
        size = max(1, -(-trials // (4 * jobs)))
        work = [(recipe, basis, mode, seed, channel, chunk) for chunk in chunked(indices, size)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = [r for part in pool.map(_run_chunk, work) for r in part]
    counts = np.bincount([r.outcome_k for r in records], minlength=basis.dim).astype(np.int64)
    LOG.info("ran %d trials (%s mode), %d forced", trials, mode.kind.value, sum(r.forced for r in records))
    return TrialResult(counts, tuple(records))


def protocol_conditionals(state: ArrayLike, basis: ObservableBasis) -> NDArray[np.float64]:
    """Conditional firing probability of each step given all earlier steps failed."""
    phi = np.asarray(state, dtype=np.complex128).reshape(-1)
    if phi.size != basis.dim:
        raise DimensionError(f"state dimension {phi.size} != basis dimension {basis.dim}")
    remaining = phi / np.linalg.norm(phi)
    cond = np.zeros(basis.dim)
    for k in range(basis.dim):
        psi = basis.state(k)
        amp = np.vdot(psi, remaining)
        cond[k] = abs(amp) ** 2
        rest = remaining - amp * psi
        norm = np.linalg.norm(rest)
        if norm**2 <= DEGENERACY_TOL:
            cond[k] = 1.0
            break
        remaining = rest / norm
    return cond


def exact_protocol_distribution(state: ArrayLike, basis: ObservableBasis) -> NDArray[np.float64]:
    """P_k = prod_{j<k} (1 - c_j) * c_k from explicit sequential projection."""
    cond = protocol_conditionals(state, basis)
    survive = np.concatenate([[1.0], np.cumprod(1.0 - cond)[:-1]])
    return survive * cond
