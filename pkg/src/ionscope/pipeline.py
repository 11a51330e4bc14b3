"""
Harness commands: synthesis fidelity rows, parameter sweeps, measurement
histograms, oracle dumps and basis export.

Every command takes an ExperimentConfig and returns plain data (a DataFrame
or a JSON-ready dict); writing files is left to the caller.
"""
from __future__ import annotations

import dataclasses
import itertools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Dict, List, Sequence

import numpy as np
import pandas as pd
from scipy.special import eval_genlaguerre

from .config import ExperimentConfig
from .errors import ConfigError
from .hamiltonians import (
    WaveConfig,
    displacement_element,
    displacement_matrix,
    effective_rabi_diagonal,
    effective_rabi_vertical,
)
from .hilbert import make_joint_space
from .measurement import TrialResult, exact_protocol_distribution, run_trials
from .observables import BasisKind, born_distribution, hermite_crosscheck, make_basis, quadrature_wavefunctions
from .propagator import edge_population, evolve_full
from .pulse_compiler import Schedule, compile, fidelity, synthesized_state, target_state
from .utils import complex_pair
from .writers import HISTOGRAM_COLUMNS, SYNTHESIS_COLUMNS, WAVEFUNCTION_COLUMNS

LOG = logging.getLogger("ionscope.pipeline")

ORACLE_SCHEMA = "ionscope.oracle/1"
BASIS_SCHEMA = "ionscope.basis/1"
DEFAULT_SEED = 0
LEAKAGE_WARN = 1e-6
GRID_KEYS = ("eta", "q", "wave", "N")

PRESETS: Dict[str, Dict[str, list]] = {
    "synthesis-eta": {
        "N": [8, 32],
        "q": [0.01, 0.1],
        "wave": [WaveConfig.TRAVELLING.value, WaveConfig.STANDING.value],
        "eta": [round(float(x), 10) for x in np.linspace(0.05, 0.95, 19)],
    },
}


@dataclasses.dataclass(frozen=True, eq=False)
class SynthesisRun:
    row: Dict[str, Any]
    schedule: Schedule


@dataclasses.dataclass(frozen=True, eq=False)
class MeasureRun:
    histogram: pd.DataFrame
    trials: TrialResult
    seed: int


class ExperimentPipeline:
    def __init__(self, config: ExperimentConfig):
        self.config = config.validate()

    def resolved_seed(self) -> int:
        if self.config.seed is None:
            LOG.info("no seed configured; using %d", DEFAULT_SEED)
            return DEFAULT_SEED
        return self.config.seed

    def synthesize(self) -> SynthesisRun:
        """Compile the recipe, then run the schedule through both channels."""
        cfg = self.config
        trap = cfg.trap
        coeffs = cfg.recipe.coeffs()
        N = coeffs.size - 1
        schedule = compile(coeffs, trap, cfg.q, cfg.wave)

        f_ideal = fidelity(synthesized_state(schedule, trap, N), target_state(coeffs, N))

        space = make_joint_space(N + cfg.padding)
        state = space.ground()
        drift = 0.0
        t = 0.0
        for pulse in schedule.pulses(trap):
            before = state.norm()
            state = evolve_full(state, pulse, trap, cfg.integrator, t0=t)
            drift = max(drift, abs(state.norm() - before))
            t += pulse.duration
        f_full = fidelity(space.embed(coeffs), state)

        phonons = space.phonon_population(state)
        leaked = float(phonons[N + 1 :].sum())
        edge = edge_population(state)
        if leaked > LEAKAGE_WARN:
            LOG.warning("population %.2e leaked above n=%d (edge %.2e)", leaked, N, edge)

        row = {
            "state": cfg.recipe.label(),
            "N": N,
            "eta": trap.eta,
            "q": cfg.q,
            "wave": cfg.wave.value,
            "pulses": len(schedule),
            "fidelity_ideal": f_ideal,
            "fidelity_full": f_full,
            "nu_t_over_2pi": schedule.nu_t_over_2pi(trap),
            "norm_drift": drift,
            "leaked_population": leaked,
            "edge_population": edge,
        }
        LOG.info("synthesized %s: F=%.6f, nu t/2pi=%.4g", row["state"], f_full, row["nu_t_over_2pi"])
        return SynthesisRun(row, schedule)

    def measure(self) -> MeasureRun:
        cfg = self.config
        seed = self.resolved_seed()
        basis = make_basis(cfg.basis, cfg.N)
        result = run_trials(cfg.recipe, basis, cfg.protocol_mode(), cfg.trials, seed, jobs=cfg.jobs)
        ideal = born_distribution(cfg.recipe.padded(basis.dim), basis)
        histogram = pd.DataFrame(
            {
                "k": np.arange(basis.dim),
                "a_k": basis.eigenvalues,
                "empirical_count": result.counts,
                "ideal_P_k": ideal,
            },
            columns=HISTOGRAM_COLUMNS,
        )
        return MeasureRun(histogram, result, seed)


def cmd_synthesize(config: ExperimentConfig) -> pd.DataFrame:
    run = ExperimentPipeline(config).synthesize()
    return pd.DataFrame([run.row], columns=SYNTHESIS_COLUMNS)


def _parse_axis(key: str, raw: str) -> list:
    parts = [p.strip() for p in raw.split(",") if p.strip()]
    try:
        if key == "wave":
            return [WaveConfig(p).value for p in parts]
        if key == "N":
            return [int(p) for p in parts]
        if len(parts) == 1 and raw.count(":") == 2:
            return parse_range(raw).tolist()
        return [float(p) for p in parts]
    except ValueError as e:
        raise ConfigError(f"bad values for grid axis {key!r}: {raw!r} ({e})") from e


def parse_range(raw: str) -> np.ndarray:
    """START:STOP:COUNT as an inclusive linspace."""
    try:
        start, stop, count = raw.split(":")
        values = np.linspace(float(start), float(stop), int(count))
    except ValueError as e:
        raise ConfigError(f"range must look like START:STOP:COUNT, got {raw!r}") from e
    if values.size == 0:
        raise ConfigError(f"range {raw!r} is empty")
    return values


def parse_grid(specs: Sequence[str]) -> Dict[str, list]:
    """Parse KEY=v1,v2,... or KEY=start:stop:count axes, in the given order."""
    grid: Dict[str, list] = {}
    for spec in specs:
        key, sep, raw = spec.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError(f"grid axis must look like KEY=VALUES, got {spec!r}")
        if key not in GRID_KEYS:
            raise ConfigError(f"grid axis {key!r} must be one of {', '.join(GRID_KEYS)}")
        grid[key] = _parse_axis(key, raw)
    return grid


def grid_points(grid: Dict[str, list]) -> List[Dict[str, Any]]:
    if not grid or any(len(v) == 0 for v in grid.values()):
        raise ConfigError("sweep grid is empty")
    keys = list(grid)
    return [dict(zip(keys, values)) for values in itertools.product(*(grid[k] for k in keys))]


def _sweep_row(config: ExperimentConfig) -> Dict[str, Any]:
    return ExperimentPipeline(config).synthesize().row


def cmd_sweep(config: ExperimentConfig, grid: Dict[str, list]) -> pd.DataFrame:
    """One synthesis row per grid point, in Cartesian-product order."""
    configs = [config.with_overrides(**point) for point in grid_points(grid)]
    LOG.info("sweeping %d grid points with %d job(s)", len(configs), config.jobs)
    if config.jobs <= 1:
        rows = [_sweep_row(c) for c in configs]
    else:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            rows = list(pool.map(_sweep_row, configs))
    return pd.DataFrame(rows, columns=SYNTHESIS_COLUMNS)


def cmd_measure(config: ExperimentConfig) -> MeasureRun:
    return ExperimentPipeline(config).measure()


# --- oracles ----------------------------------------------------------------

def _oracle(name: str, params: Dict[str, Any], result: Dict[str, Any]) -> Dict[str, Any]:
    return {"schema": ORACLE_SCHEMA, "oracle": name, "params": params, "result": result}


def oracle_rabi(n: int, eta: float) -> Dict[str, Any]:
    """Omega_n/Omega and Omega'_n/Omega three ways: finite sum, Laguerre form, matrix exponential."""
    if n < 0:
        raise ConfigError(f"n must be >= 0, got {n}")
    x = eta * eta
    u = displacement_matrix(eta, max(200, n + 40))
    vertical = {
        "sum": effective_rabi_vertical(1.0, eta, n),
        "laguerre": math.exp(-0.5 * x) * eval_genlaguerre(n, 0, x),
        "matrix_exp": u[n, n],
    }
    diagonal = {
        "sum": effective_rabi_diagonal(1.0, eta, n),
        "laguerre": -1j * eta * math.exp(-0.5 * x) * eval_genlaguerre(n, 1, x) / math.sqrt(n + 1),
        "matrix_exp": u[n, n + 1],
    }
    result = {
        "vertical": {k: complex_pair(v) for k, v in vertical.items()},
        "diagonal": {k: complex_pair(v) for k, v in diagonal.items()},
        "ratio": float(vertical["sum"].real),
    }
    return _oracle("rabi", {"n": n, "eta": eta}, result)


def oracle_displacement(n: int, m: int, eta: float) -> Dict[str, Any]:
    closed = displacement_element(n, m, eta)
    brute = displacement_matrix(eta, max(200, max(n, m) + 40))[n, m]
    result = {
        "closed_form": complex_pair(closed),
        "matrix_exp": complex_pair(brute),
        "abs_difference": float(abs(closed - brute)),
    }
    return _oracle("displacement", {"n": n, "m": m, "eta": eta}, result)


def oracle_position_eigs(N: int) -> Dict[str, Any]:
    return _oracle("position-eigs", {"N": N}, hermite_crosscheck(N))


def random_state(N: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    v = rng.normal(size=N + 1) + 1j * rng.normal(size=N + 1)
    return v / np.linalg.norm(v)


def oracle_protocol(N: int, seed: int, basis: BasisKind | str = BasisKind.PHASE) -> Dict[str, Any]:
    """Sequential-filter distribution next to the Born rule for a random state."""
    b = make_basis(basis, N)
    state = random_state(N, seed)
    born = born_distribution(state, b)
    protocol = exact_protocol_distribution(state, b)
    result = {
        "state": [complex_pair(c) for c in state],
        "born": born.tolist(),
        "protocol": protocol.tolist(),
        "max_abs_difference": float(np.max(np.abs(born - protocol))),
    }
    return _oracle("protocol", {"N": N, "state": "random", "seed": seed, "basis": b.kind.value}, result)


def cmd_oracle(name: str, **params: Any) -> Dict[str, Any]:
    if name == "rabi":
        return oracle_rabi(int(params["n"]), float(params["eta"]))
    if name == "displacement":
        return oracle_displacement(int(params["n"]), int(params["m"]), float(params["eta"]))
    if name == "position-eigs":
        return oracle_position_eigs(int(params["N"]))
    if name == "protocol":
        return oracle_protocol(int(params["N"]), int(params.get("seed", DEFAULT_SEED)), params.get("basis", BasisKind.PHASE))
    raise ConfigError(f"unknown oracle {name!r}")


def cmd_bases(kind: BasisKind | str, N: int) -> Dict[str, Any]:
    return {"schema": BASIS_SCHEMA, **make_basis(kind, N).to_dict()}



def cmd_wavefunctions(kind: BasisKind | str, N: int, x: np.ndarray | None = None) -> pd.DataFrame:
    """|<x|x_k>|^2 of every basis state over a coordinate grid, in the units of the eigenvalues."""
    basis = make_basis(kind, N)
    if x is None:
        reach = float(np.max(np.abs(basis.eigenvalues))) + 4.0
        x = np.linspace(-reach, reach, 801)
    x = np.asarray(x, dtype=np.float64)
    psi = quadrature_wavefunctions(basis, x)
    frames = [
        pd.DataFrame(
            {
                "k": k,
                "a_k": basis.eigenvalues[k],
                "x": x,
                "re": psi[k].real,
                "im": psi[k].imag,
                "density": np.abs(psi[k]) ** 2,
            }
        )
        for k in range(basis.dim)
    ]
    return pd.concat(frames, ignore_index=True)[WAVEFUNCTION_COLUMNS]
