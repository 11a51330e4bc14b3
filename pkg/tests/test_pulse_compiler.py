import math

import numpy as np
import pytest

from ionscope.errors import CompileError, ConfigError
from ionscope.hamiltonians import PulseKind, TrapParams, Wave, WaveConfig
from ionscope.hilbert import make_joint_space
from ionscope.propagator import evolve_ideal, evolve_pulses
from ionscope.pulse_compiler import (
    Direction,
    PulseBudget,
    Schedule,
    coalesce,
    compile,
    fidelity,
    invert,
    level_shift_product,
    rabi_from_quality,
    rotation_to_excited,
    rotation_to_ground,
    synthesized_state,
    target_state,
    validity_ratio,
    worst_case_budget,
)


def phase_state(N, phi=2.0):
    return np.exp(1j * phi * np.arange(N + 1)) / math.sqrt(N + 1)


def rotate(rot, g, e):
    # Rotation.matrix acts on (e, g)
    e2, g2 = rot.matrix() @ np.array([e, g])
    return g2, e2


def test_rotation_to_ground():
    g, e = 0.6 * np.exp(0.4j), 0.8 * np.exp(-1.1j)
    rot, psi_f = rotation_to_ground(abs(g), np.angle(g), abs(e), np.angle(e))
    g2, e2 = rotate(rot, g, e)
    assert abs(e2) < 1e-15
    assert g2 == pytest.approx(np.exp(1j * psi_f), abs=1e-12)
    assert 0 <= rot.theta <= math.pi / 2
    assert -math.pi <= rot.chi < math.pi


def test_rotation_to_excited():
    g, e = 0.28 * np.exp(2.9j), 0.96 * np.exp(-0.3j)
    rot, psi_f = rotation_to_excited(abs(g), np.angle(g), abs(e), np.angle(e))
    g2, e2 = rotate(rot, g, e)
    assert abs(g2) < 1e-15
    assert e2 == pytest.approx(np.exp(1j * psi_f), abs=1e-12)


def test_rotation_rejects_empty_pair():
    with pytest.raises(ValueError):
        rotation_to_ground(0.0, 0.0, 0.0, 0.0)


def test_rabi_from_quality(trap):
    assert rabi_from_quality(0.1, trap, 8, PulseKind.VERTICAL) == pytest.approx(2 * 0.1 * 4 / (9 * 0.5) ** 2)
    assert rabi_from_quality(0.1, trap, 8, PulseKind.DIAGONAL) == pytest.approx(2 * 0.1 * 0.5 / 8)
    with pytest.raises(ConfigError):
        rabi_from_quality(0.1, trap, 0, PulseKind.DIAGONAL)
    with pytest.raises(ConfigError):
        rabi_from_quality(0.0, trap, 3, PulseKind.VERTICAL)


@pytest.mark.parametrize("kind", [PulseKind.VERTICAL, PulseKind.DIAGONAL])
@pytest.mark.parametrize("N", [1, 8, 32])
def test_validity_ratio_equals_q(trap, kind, N):
    omega = rabi_from_quality(0.03, trap, N, kind)
    assert validity_ratio(omega, trap, N, kind) == pytest.approx(0.03, rel=1e-12)


def test_pulse_budget(trap):
    assert worst_case_budget(8) == (20.25, 8.0)
    budget = PulseBudget(m=3, n=4)
    assert budget.mn == 12
    assert budget.m_over_sqrt_n == 1.5
    assert PulseBudget(m=1, n=0).m_over_sqrt_n == math.inf
    for kind in PulseKind:
        full = level_shift_product(0.02, trap, budget, kind)
        half = level_shift_product(0.01, trap, budget, kind)
        assert half == pytest.approx(full / 2)


def test_ground_target_needs_no_pulses(trap):
    schedule = compile([1.0, 0.0, 0.0], trap, 0.1)
    assert len(schedule) == 0
    assert schedule.total_time == 0
    assert fidelity(synthesized_state(schedule, trap, 2), target_state([1.0], 2)) == pytest.approx(1.0)


def test_unnormalized_target_rejected(trap):
    with pytest.raises(CompileError):
        compile([1.0, 1.0], trap, 0.1)


def test_compile_reaches_random_targets(make_coeffs):
    trap = TrapParams(eta=0.3)
    for i in range(200):
        N = 1 + i % 12
        target = make_coeffs(N)
        wave = WaveConfig.STANDING if i % 2 else WaveConfig.TRAVELLING
        schedule = compile(target, trap, 0.1, wave)
        assert schedule.direction is Direction.SYNTHESIS
        assert len(schedule) <= 2 * N + 1
        out = synthesized_state(schedule, trap, N)
        assert 1 - fidelity(out, target_state(target, N)) < 1e-9


def test_schedule_structure(trap):
    schedule = compile(phase_state(8), trap, 0.1, WaveConfig.STANDING)
    kinds = [s.kind for s in schedule.steps]
    assert kinds == [PulseKind.VERTICAL, PulseKind.DIAGONAL] * 8
    assert {s.wave for s in schedule.steps} == {Wave.STANDING_ANTINODE, Wave.STANDING_NODE}
    assert all(0 <= s.phi < 2 * math.pi and s.duration > 0 for s in schedule.steps)


def test_sparse_target(trap):
    target = np.zeros(5, dtype=complex)
    target[[0, 4]] = 1 / math.sqrt(2)
    schedule = compile(target, trap, 0.1)
    assert len(schedule) == 8
    out = synthesized_state(schedule, trap, 4)
    assert fidelity(out, target_state(target, 4)) == pytest.approx(1.0, abs=1e-12)


def test_inverse_returns_to_ground(trap):
    schedule = compile(phase_state(5), trap, 0.1)
    space = make_joint_space(5)
    state = space.ground()
    for pulse in schedule.pulses(trap) + invert(schedule).pulses(trap):
        state = evolve_ideal(state, pulse, trap)
    assert abs(state.amps[0]) ** 2 == pytest.approx(1.0, abs=1e-12)

    twice = invert(invert(schedule))
    assert [s.duration for s in twice.steps] == [s.duration for s in schedule.steps]
    assert np.allclose(np.exp(1j * np.array([s.phi for s in twice.steps])),
                       np.exp(1j * np.array([s.phi for s in schedule.steps])), atol=1e-12)


def test_coalesce_empties_target(trap):
    target = phase_state(6, 0.4)
    schedule = coalesce(target, trap, 0.1)
    assert schedule.direction is Direction.INVERSE
    assert invert(invert(schedule)).direction is Direction.INVERSE
    assert invert(schedule).direction is Direction.SYNTHESIS
    state = make_joint_space(6).embed(target)
    for pulse in schedule.pulses(trap):
        state = evolve_ideal(state, pulse, trap)
    assert abs(state.amps[0]) ** 2 == pytest.approx(1.0, abs=1e-12)


def test_total_time_scales_inversely_with_q(trap):
    slow = compile(phase_state(8), trap, 0.05)
    fast = compile(phase_state(8), trap, 0.1)
    assert slow.nu_t_over_2pi(trap) / fast.nu_t_over_2pi(trap) == pytest.approx(2.0, rel=1e-2)


def test_schedule_json_round_trip(trap):
    schedule = compile(phase_state(4), trap, 0.1, WaveConfig.STANDING)
    assert Schedule.from_json(schedule.to_json()) == schedule


def test_full_hamiltonian_follows_compiled_phases():
    trap = TrapParams(eta=0.1)
    target = np.array([1, 1j]) / math.sqrt(2)
    schedule = compile(target, trap, 0.001)
    space = make_joint_space(9)
    out = evolve_pulses(space.ground(), schedule.pulses(trap), trap)
    assert fidelity(out, space.embed(target)) > 0.99
