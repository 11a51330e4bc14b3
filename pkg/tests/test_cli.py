import json
import math

import pytest

import entry
from ionscope.errors import PropagationError
from ionscope.pulse_compiler import Schedule
from ionscope.writers import HISTOGRAM_COLUMNS, SYNTHESIS_COLUMNS, WAVEFUNCTION_COLUMNS


@pytest.fixture(autouse=True)
def clean_env(monkeypatch, tmp_path):
    monkeypatch.delenv("IONSCOPE_SEED", raising=False)
    monkeypatch.delenv("IONSCOPE_JOBS", raising=False)
    monkeypatch.chdir(tmp_path)


def test_oracle_prints_json(capsys):
    assert entry.main(["oracle", "rabi", "--n", "0", "--eta", "0.5"]) == entry.EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["schema"] == "ionscope.oracle/1"
    assert out["result"]["ratio"] == pytest.approx(math.exp(-0.125))


def test_bases_to_file(tmp_path):
    path = tmp_path / "basis.json"
    assert entry.main(["bases", "--basis", "position", "--N", "2", "--out", str(path)]) == entry.EXIT_OK
    body = json.loads(path.read_text())
    assert body["eigenvalues"] == pytest.approx([-math.sqrt(3), 0.0, math.sqrt(3)], abs=1e-12)


def test_synthesize_writes_outputs(tmp_path):
    out = tmp_path / "run"
    code = entry.main(
        ["synthesize", "--state", "phase_state", "--N", "2", "--phi", "1", "--q", "0.1", "--out", str(out), "--plot-script"]
    )
    assert code == entry.EXIT_OK
    assert (out / "synthesis.csv").read_text().splitlines()[0] == ",".join(SYNTHESIS_COLUMNS)
    assert len(Schedule.from_json((out / "schedule.json").read_text())) == 4
    assert json.loads((out / "config.json").read_text())["recipe"]["N"] == 2
    assert (out / "synthesis.gp").exists()


def test_measure_writes_outputs(tmp_path):
    out = tmp_path / "measure"
    code = entry.main(["measure", "--N", "4", "--trials", "100", "--seed", "7", "--out", str(out)])
    assert code == entry.EXIT_OK
    lines = (out / "histogram.csv").read_text().splitlines()
    assert lines[0] == ",".join(HISTOGRAM_COLUMNS)
    assert len(lines) == 6
    records = (out / "records.jsonl").read_text().splitlines()
    assert len(records) == 100
    assert json.loads((out / "config.json").read_text())["seed"] == 7


def test_seed_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("IONSCOPE_SEED", "12")
    args = entry.parse_args(["measure", "--out", str(tmp_path)])
    assert entry.build_config(args).seed == 12
    args = entry.parse_args(["measure", "--seed", "3", "--out", str(tmp_path)])
    assert entry.build_config(args).seed == 3


def test_alpha_alone_keeps_config_recipe(tmp_path):
    config = tmp_path / "cfg.json"
    config.write_text(json.dumps({"recipe": {"kind": "cat", "N": 32, "alpha": [1.0, 0.0]}}))
    args = entry.parse_args(["measure", "--config", str(config), "--alpha", "1.5"])
    cfg = entry.build_config(args)
    assert cfg.recipe.kind.value == "cat"
    assert cfg.recipe.alpha == 1.5
    assert cfg.N == 32


def test_invalid_input_exit_code(tmp_path):
    assert entry.main(["measure", "--trials", "0", "--out", str(tmp_path)]) == entry.EXIT_INVALID
    assert entry.main(["sweep", "--out", str(tmp_path)]) == entry.EXIT_INVALID
    assert entry.main(["synthesize", "--q", "-1", "--out", str(tmp_path)]) == entry.EXIT_INVALID


def test_propagation_failure_exit_code(monkeypatch):
    def fail(args):
        raise PropagationError("step-size underflow", 1e-3)

    monkeypatch.setattr(entry, "dispatch", fail)
    assert entry.main(["synthesize"]) == entry.EXIT_NOT_CONVERGED


def test_unexpected_failure_exit_code(monkeypatch):
    def fail(args):
        raise RuntimeError("boom")

    monkeypatch.setattr(entry, "dispatch", fail)
    assert entry.main(["synthesize"]) == entry.EXIT_FAILURE


def test_wavefunctions_writes_outputs(tmp_path):
    code = entry.main(["wavefunctions", "--N", "2", "--x=-6:6:201", "--out", str(tmp_path), "--plot-script"])
    assert code == entry.EXIT_OK
    lines = (tmp_path / "wavefunctions.csv").read_text().splitlines()
    assert lines[0] == ",".join(WAVEFUNCTION_COLUMNS)
    assert len(lines) == 1 + 3 * 201
    assert (tmp_path / "wavefunctions.gp").exists()
    assert entry.main(["wavefunctions", "--N", "2", "--x", "0:1", "--out", str(tmp_path)]) == entry.EXIT_INVALID
