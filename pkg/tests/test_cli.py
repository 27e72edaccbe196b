import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from markovlab.cli import main
from markovlab.config import RunConfig, config_from_dict, dump_config, parse_config
from markovlab.errors import ConfigError
from markovlab.models import TAGS, default_params
from markovlab.runner import EXPECTED, run, suite


@pytest.fixture(autouse=True)
def out_root(tmp_path, monkeypatch):
    monkeypatch.setenv("MARKOVLAB_OUT", str(tmp_path))
    return tmp_path


@pytest.mark.parametrize("tag", TAGS)
def test_config_roundtrip_defaults(tag):
    cfg = config_from_dict({"model": tag})
    assert parse_config(dump_config(cfg)) == cfg


@given(st.floats(0.1, 5), st.integers(2, 500), st.lists(st.complex_numbers(max_magnitude=3, allow_nan=False,
                                                                           allow_infinity=False), min_size=1,
                                                          max_size=4).filter(lambda v: any(abs(x) > 0.1 for x in v)))
def test_config_roundtrip_property(t_end, n, amps):
    cfg = config_from_dict({"model": "model2", "time": {"t_end": t_end, "n_points": n},
                            "params": {"system_amplitudes": [[a.real, a.imag] for a in amps], "eta": 0.3},
                            "paths": ["oracle", "zassenhaus:3"], "variants": {"weighting": "inverse-jhat4"}})
    again = parse_config(dump_config(cfg))
    assert again == cfg
    assert dump_config(again) == dump_config(cfg)


@pytest.mark.parametrize("bad", [
    {"model": "model9"},
    {"model": "model2", "time": {"n_points": 1}},
    {"model": "model2", "time": {"t_end": 0}},
    {"model": "model2", "paths": []},
    {"model": "model2", "paths": ["zassenhaus:12"]},
    {"model": "model2", "params": {"nope": 1}},
    {"model": "model2", "variants": {"reading": "other"}},
    {"model": "model2", "extra": 1},
])
def test_config_validation(bad):
    with pytest.raises(ConfigError):
        config_from_dict(bad)


def test_run_model2_writes_artifacts(out_root):
    cfg = config_from_dict({"model": "model2", "paths": ["oracle", "closedform"],
                            "time": {"t_end": 10, "n_points": 41}})
    res = run(cfg)
    names = {f.name for f in res.files}
    assert {"trajectory_oracle.csv", "trajectory_closedform.csv", "comparison.csv", "verdict.json",
            "manifest.json"} <= names
    header = (res.outdir / "comparison.csv").read_text().splitlines()[0]
    assert header == "t,maxabs_closedform__oracle"


def test_run_is_deterministic(tmp_path):
    cfg = config_from_dict({"model": "model3", "time": {"t_end": 5, "n_points": 33}})
    a = run(cfg, tmp_path / "a")
    b = run(cfg, tmp_path / "b")
    assert (a.outdir / "trajectory_oracle.csv").read_bytes() == (b.outdir / "trajectory_oracle.csv").read_bytes()


def test_run_model1_without_coupling_is_constant_diagonal():
    cfg = config_from_dict({"model": "model1", "params": {"eta": 0.0}})
    assert run(cfg).verdict["coherence"]["classification"] == "constant-diagonal"


def test_run_model5_flat_dissipation_column(out_root):
    code = main(["run", "--model", "model5", "--set", "spectral={kind: flat, j0: 0.5}", "--output", "m5"])
    assert code == 0
    lines = (out_root / "m5" / "trajectory_oracle.csv").read_text().splitlines()
    col = lines[0].split(",").index("c_0_0")
    c = np.array([float(r.split(",")[col]) for r in lines[1:]])
    assert np.max(np.abs(c - 0.5)) <= 1e-8


def test_discrepancy_is_exit_zero_and_flagged(out_root, capsys):
    code = main(["run", "--model", "model4a", "--path", "oracle", "--path", "closedform",
                 "--variant", "reading=printed", "--t-end", "5", "--n-points", "40"])
    assert code == 0
    assert "DISCREPANCY" in capsys.readouterr().out
    rec = json.loads((out_root / "model4a" / "DISCREPANCY.json").read_text())
    assert rec["kind"] == "DISCREPANCY" and not rec["passed"]


def test_exit_codes(tmp_path):
    assert main(["run", "--model", "model9"]) == 1
    assert main(["bogus"]) == 1
    assert main(["run", "--model", "model4b", "--t-end", "20"]) == 2
    bad = tmp_path / "bad.yaml"
    bad.write_text("model: [unclosed")
    assert main(["run", str(bad)]) == 1


def test_config_file_and_print_config(tmp_path, capsys):
    f = tmp_path / "c.yaml"
    f.write_text("model: model3\nparams:\n  eta: 0.3\ntime:\n  t_end: 4\n  n_points: 40\n")
    assert main(["run", str(f), "--set", "beta=1.5", "--print-config"]) == 0
    cfg = parse_config(capsys.readouterr().out)
    assert cfg.params.eta == 0.3 and cfg.params.beta == 1.5 and cfg.n_points == 40


def test_compare_verb(out_root, capsys):
    assert main(["run", "--model", "model2", "--path", "oracle", "--path", "zassenhaus:2",
                 "--variant", "split=environment", "--t-end", "3", "--n-points", "35"]) == 0
    d = out_root / "model2"
    assert main(["compare", str(d / "trajectory_oracle.csv"), str(d / "trajectory_zassenhaus2.csv"),
                 "--out", str(out_root / "cmp.csv")]) == 0
    vals = np.loadtxt(out_root / "cmp.csv", delimiter=",", skiprows=1)
    assert vals[:, 1].max() < 1e-12


def test_verdict_verb(capsys):
    assert main(["verdict", "--model", "model3", "--t-end", "10", "--n-points", "64"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["verdict"] == "non-Markovian"
    assert out["commutator"]["classification"] == "general"


def test_suite_default_passes_and_outputs_agree(out_root, capsys):
    assert main(["suite"]) == 0
    data = json.loads((out_root / "suite" / "suite.json").read_text())
    table = (out_root / "suite" / "suite.txt").read_text()
    assert len(data["rows"]) == 6
    for row in data["rows"]:
        line = next(l for l in table.splitlines() if l.startswith(row["model"] + " "))
        assert row["verdict"] in line and row["coherence"] in line and row["commutator"] in line


def test_suite_without_commutator_fails_row():
    rows = suite({"model4b": {"beta": 0.0}}, tags=["model4b"])
    assert not rows[0]["passed"]
    assert rows[0]["commutator"] == "commuting"
    assert main(["suite", "--set", "model4b.beta=0"]) == 2
