import math

import numpy as np
import pytest

from ionscope.errors import ConfigError, PropagationError
from ionscope.hamiltonians import LaserPulse, PulseKind, TrapParams, Wave, effective_rabi_vertical
from ionscope.hilbert import Level, StateVector, is_unitary, make_joint_space
from ionscope.propagator import (
    Frame,
    IntegratorConfig,
    Method,
    evolve_full,
    evolve_ideal,
    evolve_pulses,
    from_lab_frame,
    pulse_propagator,
    to_lab_frame,
)
from ionscope.pulse_compiler import compile, fidelity, rabi_from_quality

RK4_LAB = IntegratorConfig(frame=Frame.LAB, method=Method.RK4)


def pulse(kind, omega, duration, phi=0.3, trap=None, wave=Wave.TRAVELLING):
    return LaserPulse.tuned(kind, omega, phi, duration, trap or TrapParams(eta=0.5), wave)


def random_state(rng, space):
    v = rng.normal(size=space.dim) + 1j * rng.normal(size=space.dim)
    return StateVector(v).normalize()


def test_integrator_config_validation():
    with pytest.raises(ConfigError):
        IntegratorConfig(step_scale=0.0)
    with pytest.raises(ConfigError):
        IntegratorConfig(step_scale=0.6)
    with pytest.raises(ConfigError):
        IntegratorConfig(rtol=0.0)


def test_zero_rabi_is_identity(trap, rng):
    space = make_joint_space(4)
    state = random_state(rng, space)
    out = evolve_full(state, pulse(PulseKind.VERTICAL, 0.0, 7.0), trap)
    assert np.allclose(out.amps, state.amps, atol=1e-12)
    assert evolve_ideal(state, pulse(PulseKind.DIAGONAL, 0.2, 0.0), trap) == state


def test_two_level_rabi_limit():
    trap = TrapParams(eta=1e-3)
    omega, t = 0.1, 12.0
    space = make_joint_space(3)
    out = evolve_full(space.ground(), pulse(PulseKind.VERTICAL, omega, t, trap=trap), trap)
    rabi = abs(effective_rabi_vertical(omega, trap.eta, 0))
    p = out.probabilities()
    assert p[space.flatten(Level.G, 0)] == pytest.approx(math.cos(rabi * t / 2) ** 2, abs=1e-6)
    assert p[space.flatten(Level.E, 0)] == pytest.approx(math.sin(rabi * t / 2) ** 2, abs=1e-6)


def test_ideal_half_pi_rotation_empties_ground_level(trap):
    space = make_joint_space(6)
    N, omega = 4, 0.2
    rabi = abs(effective_rabi_vertical(omega, trap.eta, N))
    start = space.basis_state(Level.G, N)
    out = evolve_ideal(start, pulse(PulseKind.VERTICAL, omega, math.pi / rabi), trap)
    assert out.probabilities()[space.flatten(Level.E, N)] == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("kind", [PulseKind.VERTICAL, PulseKind.DIAGONAL])
def test_full_evolution_preserves_norm(trap, rng, kind):
    space = make_joint_space(6)
    state = random_state(rng, space)
    for cfg in (IntegratorConfig(), RK4_LAB):
        out = evolve_full(state, pulse(kind, 0.3, 2.5), trap, cfg)
        assert out.norm() == pytest.approx(1.0, abs=1e-8)
    assert evolve_ideal(state, pulse(kind, 0.3, 2.5), trap).norm() == pytest.approx(1.0, abs=1e-12)


def test_propagator_is_unitary(trap):
    space = make_joint_space(5)
    u = pulse_propagator(pulse(PulseKind.DIAGONAL, 0.2, 40.0), trap, space)
    assert is_unitary(u)


@pytest.mark.parametrize("cfg", [IntegratorConfig(), RK4_LAB])
def test_composition(trap, rng, cfg):
    space = make_joint_space(4)
    state = random_state(rng, space)
    whole = evolve_full(state, pulse(PulseKind.VERTICAL, 0.4, 3.0), trap, cfg)
    first = evolve_full(state, pulse(PulseKind.VERTICAL, 0.4, 1.2), trap, cfg)
    second = evolve_full(first, pulse(PulseKind.VERTICAL, 0.4, 1.8), trap, cfg, t0=1.2)
    assert np.allclose(whole.amps, second.amps, atol=1e-8)


@pytest.mark.parametrize("kind", [PulseKind.VERTICAL, PulseKind.DIAGONAL])
def test_rotating_frame_matches_lab_frame(trap, rng, kind):
    space = make_joint_space(4)
    state = random_state(rng, space)
    p = pulse(kind, 0.3, 2.0)
    exact = evolve_full(state, p, trap, IntegratorConfig(), t0=0.5)
    lab = evolve_full(state, p, trap, RK4_LAB, t0=0.5)
    frame = Frame.RFV if kind is PulseKind.VERTICAL else Frame.RFD
    rotating = evolve_full(state, p, trap, IntegratorConfig(frame=frame, method=Method.RK4), t0=0.5)
    assert np.allclose(exact.amps, lab.amps, atol=1e-8)
    assert np.allclose(exact.amps, rotating.amps, atol=1e-8)


def test_halving_step_scale_changes_little(trap, rng):
    space = make_joint_space(4)
    state = random_state(rng, space)
    p = pulse(PulseKind.DIAGONAL, 0.3, 2.0)
    coarse = evolve_full(state, p, trap, RK4_LAB)
    fine = evolve_full(state, p, trap, IntegratorConfig(step_scale=0.025, frame=Frame.LAB, method=Method.RK4))
    assert np.allclose(coarse.amps, fine.amps, atol=1e-8)


def test_step_underflow_raises(trap):
    space = make_joint_space(4)
    cfg = IntegratorConfig(frame=Frame.LAB, method=Method.RK4, max_steps=100)
    with pytest.raises(PropagationError) as err:
        evolve_full(space.ground(), pulse(PulseKind.VERTICAL, 0.3, 10.0), trap, cfg)
    assert "step-size underflow" in str(err.value)


def test_lab_frame_mapping_round_trip(trap, rng):
    space = make_joint_space(3)
    state = random_state(rng, space)
    for frame in (Frame.RFV, Frame.RFD):
        back = from_lab_frame(to_lab_frame(state, frame, 1.7, trap), frame, 1.7, trap)
        assert np.allclose(back.amps, state.amps, atol=1e-14)


def test_small_q_full_matches_ideal():
    trap = TrapParams(eta=0.1)
    N = 4
    omega = rabi_from_quality(0.001, trap, N, PulseKind.VERTICAL)
    rabi = abs(effective_rabi_vertical(omega, trap.eta, N))
    space = make_joint_space(N + 8)
    p = pulse(PulseKind.VERTICAL, omega, (math.pi / 4) * 2 / rabi, trap=trap)
    start = space.basis_state(Level.G, N)
    full = evolve_full(start, p, trap)
    ideal = evolve_ideal(start, p, trap)
    assert np.allclose(full.probabilities(), ideal.probabilities(), atol=1e-3)


def test_infidelity_shrinks_with_q():
    trap = TrapParams(eta=0.5)
    N = 4
    target = np.exp(1j * 2.0 * np.arange(N + 1)) / math.sqrt(N + 1)
    space = make_joint_space(N + 8)
    infidelities = []
    for q in (0.1, 0.03, 0.01):
        schedule = compile(target, trap, q)
        out = evolve_pulses(space.ground(), schedule.pulses(trap), trap)
        infidelities.append(1 - fidelity(space.embed(target), out))
    assert infidelities[0] > infidelities[1] > infidelities[2]
