"""
ionscope command line.

Usage
-----
ionscope synthesize --state phase_state --N 8 --phi 2 --q 0.01 --eta 0.5 --wave standing --out results/
ionscope sweep --preset synthesis-eta --jobs 8 --out results/fig
ionscope sweep --grid eta=0.05:0.95:19 --grid q=0.01,0.1 --out results/
ionscope measure --state cat --alpha 1.5 --N 32 --basis position --trials 10000 --seed 7
ionscope oracle rabi --n 0 --eta 0.5
ionscope bases --basis position --N 2
ionscope wavefunctions --basis position --N 8 --x=-6:6:601 --out results/wavefunctions --plot-script

Exit codes: 0 success, 2 invalid input, 3 propagation did not converge, 1 anything else.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, Optional, Sequence

import pandas as pd

from ionscope.config import ExperimentConfig
from ionscope.errors import CompileError, ConfigError, DimensionError, PropagationError, TruncationError
from ionscope.measurement import ModeKind
from ionscope.observables import BasisKind, RecipeKind, StateRecipe
from ionscope.hamiltonians import WaveConfig
from ionscope.pipeline import (
    PRESETS,
    ExperimentPipeline,
    cmd_bases,
    cmd_oracle,
    cmd_sweep,
    cmd_wavefunctions,
    parse_grid,
    parse_range,
)
from ionscope.utils import json_safe
from ionscope.writers import (
    HISTOGRAM_COLUMNS,
    SYNTHESIS_COLUMNS,
    WAVEFUNCTION_COLUMNS,
    NDJSONWriter,
    histogram_plot_script,
    synthesis_plot_script,
    wavefunction_plot_script,
    write_json,
    write_plot_script,
    write_table,
)

LOG = logging.getLogger("ionscope")
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INVALID = 2
EXIT_NOT_CONVERGED = 3
INVALID_INPUT = (ConfigError, DimensionError, TruncationError, CompileError)


def _verbosity(p: argparse.ArgumentParser) -> None:
    p.add_argument("--verbose", "-v", action="store_true", help="Log at DEBUG level")


def _shared_options() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    _verbosity(p)
    p.add_argument("--config", type=Path, default=None, help="JSON experiment config")
    p.add_argument("--env", default=None, help="Path to a .env file with IONSCOPE_* variables")
    p.add_argument("--seed", type=int, default=None, help="Master seed (falls back to IONSCOPE_SEED)")
    p.add_argument("--jobs", type=int, default=None, help="Worker processes")
    p.add_argument("--out", default=None, help="Output directory")
    p.add_argument("--mode", choices=[m.value for m in ModeKind], default=None)
    p.add_argument("--wave", choices=[w.value for w in WaveConfig], default=None)
    p.add_argument("--eta", type=float, default=None, help="Lamb-Dicke parameter")
    p.add_argument("--nu", type=float, default=None, help="Trap frequency (time unit)")
    p.add_argument("--q", type=float, default=None, help="Quality factor")
    p.add_argument("--N", type=int, default=None, help="Top Fock level of the state")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--basis", choices=[b.value for b in BasisKind], default=None)
    p.add_argument("--efficiency", type=float, default=None, help="Filter detection efficiency")
    p.add_argument(
        "--state",
        choices=[RecipeKind.PHASE_STATE.value, RecipeKind.COHERENT.value, RecipeKind.CAT.value],
        default=None,
        help="Test state recipe",
    )
    p.add_argument("--phi", type=float, default=None, help="Phase of a phase_state recipe")
    p.add_argument("--alpha", type=float, default=None, help="Amplitude of a coherent/cat recipe")
    p.add_argument("--plot-script", action="store_true", help="Also write a gnuplot script next to the CSV")
    return p


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(prog="ionscope", description="Trapped-ion state synthesis and measurement simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    shared = _shared_options()

    sub.add_parser("synthesize", parents=[shared], help="Compile a state and report synthesis fidelity")

    sweep = sub.add_parser("sweep", parents=[shared], help="Synthesis fidelity over a parameter grid")
    sweep.add_argument("--grid", action="append", default=[], metavar="KEY=VALUES",
                       help="Axis over eta, q, wave or N: v1,v2,... or start:stop:count")
    sweep.add_argument("--preset", choices=sorted(PRESETS), default=None)

    sub.add_parser("measure", parents=[shared], help="Monte Carlo measurement histogram")

    oracle = sub.add_parser("oracle", help="Reference values as JSON")
    oracles = oracle.add_subparsers(dest="oracle", required=True)
    rabi = oracles.add_parser("rabi")
    rabi.add_argument("--n", type=int, required=True)
    rabi.add_argument("--eta", type=float, required=True)
    disp = oracles.add_parser("displacement")
    disp.add_argument("--n", type=int, required=True)
    disp.add_argument("--m", type=int, required=True)
    disp.add_argument("--eta", type=float, required=True)
    eigs = oracles.add_parser("position-eigs")
    eigs.add_argument("--N", type=int, required=True)
    proto = oracles.add_parser("protocol")
    proto.add_argument("--N", type=int, required=True)
    proto.add_argument("--state", choices=["random"], default="random")
    proto.add_argument("--seed", type=int, default=0)
    proto.add_argument("--basis", choices=[b.value for b in BasisKind], default=BasisKind.PHASE.value)
    for p in (rabi, disp, eigs, proto):
        _verbosity(p)
        p.add_argument("--out", type=Path, default=None, help="Write JSON here instead of stdout")

    bases = sub.add_parser("bases", help="Export a measurement basis as JSON")
    bases.add_argument("--basis", choices=[b.value for b in BasisKind], default=BasisKind.PHASE.value)
    bases.add_argument("--N", type=int, required=True)
    bases.add_argument("--out", type=Path, default=None, help="Write JSON here instead of stdout")
    _verbosity(bases)

    waves = sub.add_parser("wavefunctions", help="Coordinate-space densities of the basis states as CSV")
    waves.add_argument("--basis", choices=[b.value for b in BasisKind], default=BasisKind.POSITION.value)
    waves.add_argument("--N", type=int, required=True)
    waves.add_argument("--x", default=None, metavar="START:STOP:COUNT", help="Coordinate grid (eigenvalue units)")
    waves.add_argument("--out", type=Path, default=Path("results"), help="Output directory")
    waves.add_argument("--plot-script", action="store_true", help="Also write a gnuplot script next to the CSV")
    _verbosity(waves)

    return parser.parse_args(argv)


def _recipe(args: argparse.Namespace, base: ExperimentConfig) -> Optional[StateRecipe]:
    """Recipe from --state/--phi/--alpha; --phi or --alpha alone tweak the configured recipe."""
    kind = args.state
    if kind is None and (args.phi is not None or args.alpha is not None):
        kind = base.recipe.kind.value
    if kind is None:
        return None
    N = args.N if args.N is not None else base.N
    if kind == RecipeKind.PHASE_STATE.value:
        return StateRecipe.phase_state(N, args.phi if args.phi is not None else base.recipe.phi)
    alpha = args.alpha if args.alpha is not None else (base.recipe.alpha or 1.0)
    if kind == RecipeKind.COHERENT.value:
        return StateRecipe.coherent(alpha, N)
    if kind == RecipeKind.CAT.value:
        return StateRecipe.cat(alpha, N)
    raise ConfigError("--phi/--alpha do not apply to an explicit recipe")


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    """defaults < --config file < environment < command-line flags"""
    base = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    base = ExperimentConfig.from_env(base=base, env_path=args.env)
    recipe = _recipe(args, base)
    cfg = base.with_overrides(recipe=recipe)
    cfg = cfg.with_overrides(
        N=args.N if recipe is None else None,
        seed=args.seed,
        jobs=args.jobs,
        out=args.out,
        mode=args.mode,
        wave=args.wave,
        eta=args.eta,
        nu=args.nu,
        q=args.q,
        trials=args.trials,
        basis=args.basis,
        efficiency=args.efficiency,
    )
    return cfg.validate()


def _emit_json(obj: Dict[str, Any], out: Optional[Path]) -> None:
    if out is None:
        print(json.dumps(json_safe(obj), indent=2, allow_nan=False))
    else:
        write_json(obj, out)
        LOG.info("wrote %s", out)


def run_synthesize(cfg: ExperimentConfig, plot: bool) -> None:
    run = ExperimentPipeline(cfg).synthesize()
    out = Path(cfg.out)
    csv = write_table(pd.DataFrame([run.row]), out / "synthesis.csv", SYNTHESIS_COLUMNS)
    (out / "schedule.json").write_text(run.schedule.to_json() + "\n", encoding="utf-8")
    write_json(cfg.to_dict(), out / "config.json")
    if plot:
        write_plot_script(synthesis_plot_script(csv), csv)


def run_sweep(cfg: ExperimentConfig, args: argparse.Namespace) -> None:
    grid = dict(PRESETS[args.preset]) if args.preset else {}
    grid.update(parse_grid(args.grid))
    table = cmd_sweep(cfg, grid)
    out = Path(cfg.out)
    csv = write_table(table, out / "sweep.csv", SYNTHESIS_COLUMNS)
    write_json({**cfg.to_dict(), "grid": grid}, out / "config.json")
    if args.plot_script:
        write_plot_script(synthesis_plot_script(csv), csv)


def run_measure(cfg: ExperimentConfig, plot: bool) -> None:
    run = ExperimentPipeline(cfg).measure()
    out = Path(cfg.out)
    csv = write_table(run.histogram, out / "histogram.csv", HISTOGRAM_COLUMNS)
    NDJSONWriter(out / "records.jsonl").write(run.trials.records)
    write_json({**cfg.to_dict(), "seed": run.seed}, out / "config.json")
    if plot:
        write_plot_script(histogram_plot_script(csv), csv)


def run_wavefunctions(args: argparse.Namespace) -> None:
    x = parse_range(args.x) if args.x else None
    table = cmd_wavefunctions(args.basis, args.N, x)
    csv = write_table(table, args.out / "wavefunctions.csv", WAVEFUNCTION_COLUMNS)
    if args.plot_script:
        write_plot_script(wavefunction_plot_script(csv), csv)


def dispatch(args: argparse.Namespace) -> None:
    if args.command == "oracle":
        params = {k: v for k, v in vars(args).items() if k not in ("command", "oracle", "verbose", "out", "state")}
        _emit_json(cmd_oracle(args.oracle, **params), args.out)
        return
    if args.command == "bases":
        _emit_json(cmd_bases(args.basis, args.N), args.out)
        return
    if args.command == "wavefunctions":
        run_wavefunctions(args)
        return

    cfg = build_config(args)
    if args.command == "synthesize":
        run_synthesize(cfg, args.plot_script)
    elif args.command == "sweep":
        if not args.grid and not args.preset:
            raise ConfigError("sweep needs --grid KEY=VALUES or --preset")
        run_sweep(cfg, args)
    elif args.command == "measure":
        run_measure(cfg, args.plot_script)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format=LOG_FORMAT)
    try:
        dispatch(args)
    except INVALID_INPUT as e:
        LOG.error("%s: %s", type(e).__name__, e)
        return EXIT_INVALID
    except PropagationError as e:
        LOG.error("propagation failed: %s", e)
        return EXIT_NOT_CONVERGED
    except Exception as e:
        LOG.exception("Fatal error: %s", e)
        return EXIT_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
