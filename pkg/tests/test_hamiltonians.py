import math

import numpy as np
import pytest
from scipy.special import eval_genlaguerre

from ionscope.errors import ConfigError
from ionscope.hamiltonians import (
    LaserPulse,
    PulseKind,
    TrapParams,
    Wave,
    approx_hamiltonian,
    displacement_element,
    displacement_matrix,
    effective_rabi,
    effective_rabi_diagonal,
    effective_rabi_vertical,
    full_hamiltonian,
    position_function,
)
from ionscope.hilbert import Level, is_hermitian, make_joint_space

ETAS = [0.1, 0.5, 0.95]


def test_displacement_ground_element():
    assert displacement_element(0, 0, 0.5) == pytest.approx(math.exp(-0.125), abs=1e-15)


def test_displacement_without_coupling_is_identity():
    assert displacement_element(3, 3, 0.0) == 1
    assert displacement_element(3, 4, 0.0) == 0


@pytest.mark.parametrize("n,m,eta", [(3, 5, 0.7), (5, 3, 0.7), (0, 4, 0.95), (10, 10, 0.3)])
def test_displacement_matches_matrix_exponential(n, m, eta):
    brute = displacement_matrix(eta)[n, m]
    assert abs(displacement_element(n, m, eta) - brute) < 1e-10


def test_displacement_bounded(rng):
    for _ in range(50):
        n, m = rng.integers(0, 40, size=2)
        assert abs(displacement_element(int(n), int(m), float(rng.uniform(0.01, 1.9)))) <= 1 + 1e-12


@pytest.mark.parametrize("eta", ETAS)
def test_vertical_rabi_sum_matches_laguerre(eta):
    x = eta * eta
    for n in range(41):
        closed = math.exp(-x / 2) * eval_genlaguerre(n, 0, x)
        assert effective_rabi_vertical(1.0, eta, n) == pytest.approx(closed, rel=1e-12, abs=1e-12)
        assert effective_rabi_vertical(1.0, eta, n) == pytest.approx(displacement_element(n, n, eta), rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("eta", ETAS)
def test_diagonal_rabi_sum_matches_laguerre(eta):
    x = eta * eta
    u = displacement_matrix(eta)
    for n in range(41):
        closed = -1j * eta * math.exp(-x / 2) * eval_genlaguerre(n, 1, x) / math.sqrt(n + 1)
        value = effective_rabi_diagonal(1.0, eta, n)
        assert value == pytest.approx(closed, rel=1e-12, abs=1e-12)
        assert value == pytest.approx(u[n, n + 1], rel=1e-10, abs=1e-10)


def test_rabi_limits():
    assert effective_rabi_vertical(2.0, 0.5, 0) == pytest.approx(2.0 * math.exp(-0.125))
    assert effective_rabi_diagonal(2.0, 0.5, 0) == pytest.approx(-1j * 2.0 * 0.5 * math.exp(-0.125))
    assert effective_rabi_vertical(2.0, 0.0, 7) == pytest.approx(2.0)
    assert effective_rabi_diagonal(2.0, 0.0, 7) == 0


def test_standing_node_rabi_matches_sine_elements():
    eta = 0.4
    sine = position_function(eta, 40, Wave.STANDING_NODE)
    cosine = position_function(eta, 40, Wave.STANDING_ANTINODE)
    for n in range(6):
        node = effective_rabi(PulseKind.DIAGONAL, Wave.STANDING_NODE, 1.0, eta, n)
        antinode = effective_rabi(PulseKind.VERTICAL, Wave.STANDING_ANTINODE, 1.0, eta, n)
        assert node == pytest.approx(sine[n, n + 1], abs=1e-10)
        assert antinode == pytest.approx(cosine[n, n], abs=1e-10)


@pytest.mark.parametrize("eta", ETAS)
def test_position_function_exact_up_to_truncation_edge(eta):
    f = position_function(eta, 7, Wave.TRAVELLING)
    for n in range(7):
        for m in range(7):
            assert abs(f[n, m] - displacement_element(n, m, eta)) < 1e-12


def vertical(omega=0.3, phi=0.7, wave=Wave.TRAVELLING, duration=1.0):
    return LaserPulse(omega=omega, delta=0.0, phi=phi, duration=duration, wave=wave, kind=PulseKind.VERTICAL)


def diagonal(omega=0.3, phi=0.7, wave=Wave.TRAVELLING, duration=1.0, nu=1.0):
    return LaserPulse(omega=omega, delta=-nu, phi=phi, duration=duration, wave=wave, kind=PulseKind.DIAGONAL)


def test_pulse_validation():
    with pytest.raises(ConfigError):
        vertical(wave=Wave.STANDING_NODE)
    with pytest.raises(ConfigError):
        diagonal(wave=Wave.STANDING_ANTINODE)
    with pytest.raises(ConfigError):
        vertical(duration=-1.0)
    with pytest.raises(ConfigError):
        TrapParams(eta=0.0)
    with pytest.raises(ConfigError):
        diagonal(nu=2.0).check_tuning(TrapParams(eta=0.5))


def test_full_hamiltonian_basic_properties(trap):
    space = make_joint_space(6)
    zero = full_hamiltonian(1.3, vertical(omega=0.0), trap, space)
    assert not zero.any()
    for t in (0.0, 0.4, 2.9):
        for pulse in (vertical(), diagonal()):
            h = full_hamiltonian(t, pulse, trap, space)
            assert is_hermitian(h)
            assert np.allclose(h, full_hamiltonian(t + 2 * math.pi, pulse, trap, space), atol=1e-12)


def test_full_hamiltonian_carrier_element(trap):
    space = make_joint_space(6)
    h = full_hamiltonian(0.0, vertical(omega=0.3, phi=0.0), trap, space)
    for n in range(4):
        e, g = space.flatten(Level.E, n), space.flatten(Level.G, n)
        assert h[e, g] == pytest.approx(0.15 * displacement_element(n, n, trap.eta), abs=1e-12)


def test_standing_wave_parity(trap):
    space = make_joint_space(8)
    antinode = full_hamiltonian(0.3, vertical(wave=Wave.STANDING_ANTINODE), trap, space)
    node = full_hamiltonian(0.3, diagonal(wave=Wave.STANDING_NODE), trap, space)
    for n in range(8):
        g = space.flatten(Level.G, n)
        assert abs(antinode[space.flatten(Level.E, n + 1), g]) < 1e-12
        assert abs(node[space.flatten(Level.E, n), g]) < 1e-12


def test_approx_hamiltonian_blocks(trap):
    space = make_joint_space(5)
    h = approx_hamiltonian(vertical(), trap, space)
    for n in range(space.n_levels):
        idx = [space.flatten(Level.G, n), space.flatten(Level.E, n)]
        block = h[np.ix_(idx, idx)]
        expected = abs(effective_rabi_vertical(0.3, trap.eta, n)) / 2
        assert np.allclose(np.linalg.eigvalsh(block), [-expected, expected], atol=1e-12)

    h = approx_hamiltonian(diagonal(), trap, space)
    assert not h[space.flatten(Level.E, space.n_max)].any()
    assert not h[space.flatten(Level.G, 0)].any()
    assert h[space.flatten(Level.E, 2), space.flatten(Level.G, 3)] == pytest.approx(
        0.5 * effective_rabi_diagonal(0.3, trap.eta, 2) * np.exp(-0.7j)
    )


def test_approx_vertical_lamb_dicke_limit():
    trap = TrapParams(eta=1e-9)
    space = make_joint_space(3)
    h = approx_hamiltonian(vertical(phi=0.0), trap, space)
    for n in range(space.n_levels):
        assert h[space.flatten(Level.E, n), space.flatten(Level.G, n)] == pytest.approx(0.15, abs=1e-12)
