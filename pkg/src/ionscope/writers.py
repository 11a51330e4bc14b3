from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, Sequence

import pandas as pd

from .measurement import MeasurementRecord
from .utils import FLOAT_FORMAT, json_safe

LOG = logging.getLogger("ionscope.writers")

SYNTHESIS_COLUMNS = [
    "state",
    "N",
    "eta",
    "q",
    "wave",
    "pulses",
    "fidelity_ideal",
    "fidelity_full",
    "nu_t_over_2pi",
    "norm_drift",
    "leaked_population",
    "edge_population",
]
HISTOGRAM_COLUMNS = ["k", "a_k", "empirical_count", "ideal_P_k"]
WAVEFUNCTION_COLUMNS = ["k", "a_k", "x", "re", "im", "density"]


class NDJSONWriter:
    """One strict JSON object per line (no NaN/Infinity)."""

    def __init__(self, path: Path):
        self.path = path

    def write(self, records: Iterable[MeasurementRecord | Dict[str, Any]]) -> int:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        count = 0
        with self.path.open("w", encoding="utf-8") as f:
            for rec in records:
                if isinstance(rec, MeasurementRecord):
                    f.write(rec.to_json_line())
                else:
                    f.write(json.dumps(json_safe(rec), ensure_ascii=False, allow_nan=False))
                f.write("\n")
                count += 1
        LOG.info("wrote %d records to %s", count, self.path)
        return count


def write_table(df: pd.DataFrame, path: Path, columns: Sequence[str]) -> Path:
    """CSV with a fixed column order and 17 significant digits."""
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, columns=list(columns), index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    LOG.info("wrote %d rows to %s", len(df), path)
    return path


def write_json(obj: Dict[str, Any], path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(json_safe(obj), indent=2, allow_nan=False) + "\n", encoding="utf-8")
    return path


def synthesis_plot_script(csv_path: Path) -> str:
    name = csv_path.name
    return (
        "# gnuplot script for " + name + "\n"
        "set datafile separator ','\n"
        "set key autotitle columnhead\n"
        "set multiplot layout 2,1\n"
        "set xlabel 'eta'\n"
        "set ylabel 'F'\n"
        f"plot '{name}' using 'eta':'fidelity_full' with linespoints\n"
        "set ylabel 'nu t / 2 pi'\n"
        "set logscale y\n"
        f"plot '{name}' using 'eta':'nu_t_over_2pi' with linespoints\n"
        "unset multiplot\n"
    )


def histogram_plot_script(csv_path: Path) -> str:
    name = csv_path.name
    return (
        "# gnuplot script for " + name + "\n"
        "set datafile separator ','\n"
        "set style data histograms\n"
        "set style fill solid 0.6\n"
        "set xlabel 'a_k'\n"
        "stats '" + name + "' using 'empirical_count' nooutput\n"
        f"plot '{name}' using (column('empirical_count')/STATS_sum):xtic(sprintf('%.3f', column('a_k'))) title 'measured', \\\n"
        f"     '' using 'ideal_P_k' title 'Born'\n"
    )


def wavefunction_plot_script(csv_path: Path) -> str:
    name = csv_path.name
    return (
        "# gnuplot script for " + name + "\n"
        "set datafile separator ','\n"
        "set xlabel 'x'\n"
        "set ylabel '|<x|x_k>|^2'\n"
        "stats '" + name + "' using 'k' nooutput\n"
        f"plot for [j=0:int(STATS_max)] '{name}' using 'x':(column('k') == j ? column('density') : 1/0) "
        "with lines title sprintf('k=%d', j)\n"
    )


def write_plot_script(text: str, csv_path: Path) -> Path:
    path = csv_path.with_suffix(".gp")
    path.write_text(text, encoding="utf-8")
    LOG.info("wrote plot script %s", path)
    return path
