import csv
import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from machlab import cli
from machlab import experiments as ex
from machlab.config import AUTO, ExperimentConfig
from machlab.diagnostics import ConvergenceReport
from machlab.errors import ConfigError
from machlab.initial import PRESETS, make_initial_state, random_state
from machlab.projection import project_Q
from machlab.rsw import RswState
from machlab.snapshot import read_snapshot, write_snapshot

CHEAP = """
[grid]
n_periodic = 32
n_wall = 17

[physics]
epsilons = 0.2, 0.1, 0.05

[run]
t_end = 0.1
experiment = strong
"""


def test_config_round_trip():
    cfg = ExperimentConfig(kind="annulus", epsilons=(0.3, 0.1), record_every=5, seed=4)
    assert ExperimentConfig.from_string(cfg.to_ini()) == cfg
    assert ExperimentConfig.from_string(ExperimentConfig().to_ini()).record_every == AUTO
    one = ExperimentConfig.from_string("[physics]\nepsilon = 0.05\n")
    assert one.epsilons == (0.05,)


@pytest.mark.parametrize("text", [
    "[grid]\ncolour = red\n",
    "[output]\nx = 1\n",
    "[grid]\nn_wall = 16\n",
    "[grid]\nn_periodic = many\n",
    "[physics]\nepsilons = 0.1, 0.2\n",
    "[physics]\nepsilons = 0.0\n",
    "[run]\nic_preset = tsunami\n",
    "[run]\nexperiment = vibes\n",
    "[run]\ncfl = 2\n",
    "not a config",
])
def test_config_errors(text):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_string(text)


def test_config_from_manifest(tmp_path):
    cfg = ExperimentConfig(epsilons=(0.2, 0.1, 0.05), t_end=0.1)
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps({"config": cfg.to_ini()}))
    assert ExperimentConfig.from_file(path) == cfg
    (tmp_path / "bad.json").write_text("{}")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_file(tmp_path / "bad.json")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_file(tmp_path / "missing.ini")


@pytest.mark.parametrize("preset", PRESETS)
def test_initial_presets_satisfy_invariants(preset):
    kind = "annulus" if preset == "annulus_harmonic" else "channel"
    cfg = ExperimentConfig(kind=kind, n_periodic=32, n_wall=17, ic_preset=preset,
                           amplitude_noise=0.1)
    U = make_initial_state(cfg, 0.1)
    U.check()


def test_ill_prepared_fraction():
    cfg = ExperimentConfig()
    for eps in cfg.epsilons:
        U = make_initial_state(cfg, eps)
        frac = project_Q(U).fast.norm() / U.norm()
        assert 0.2 <= frac <= 0.8
    well = make_initial_state(cfg.with_(ic_preset="well_prepared"), 0.1)
    assert project_Q(well).fast.norm() < 1e-10 * well.norm()


def test_vacuum_preset_rejected():
    with pytest.raises(ConfigError, match="non-vacuum"):
        make_initial_state(ExperimentConfig(amplitude_fast=20.0), 0.2)


@pytest.mark.parametrize("encoding", ["text", "binary"])
def test_snapshot_round_trip(tmp_path, coarse, encoding):
    U = random_state(coarse, np.random.default_rng(1), 0.1)
    path = write_snapshot(tmp_path / "s", U, encoding)
    V, header = read_snapshot(path)
    assert header["encoding"] == encoding
    assert V.grid is U.grid and V.epsilon == U.epsilon and V.time == U.time
    assert np.array_equal(V.packed(), U.packed())
    R, _ = read_snapshot(path, RswState)
    assert isinstance(R, RswState)


def test_snapshot_errors(tmp_path, coarse):
    U = random_state(coarse, np.random.default_rng(1), 0.1)
    with pytest.raises(ConfigError):
        write_snapshot(tmp_path / "s", U, "hdf5")
    (tmp_path / "junk").write_text("kind = channel\n")
    with pytest.raises(ConfigError):
        read_snapshot(tmp_path / "junk")


def test_cli_config_error(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[grid]\nshape = round\n")
    assert cli.main(["ladder", "--config", str(bad), "--quiet"]) == cli.EXIT_CONFIG
    assert "configuration error" in capsys.readouterr().err


def test_cli_too_few_points(tmp_path):
    cfgfile = tmp_path / "two.ini"
    cfgfile.write_text(CHEAP.replace("0.2, 0.1, 0.05", "0.2, 0.1"))
    assert cli.main(["ladder", "--config", str(cfgfile), "--out", str(tmp_path / "o"),
                     "--quiet"]) == cli.EXIT_NUMERICAL
    manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert manifest["status"] == "insufficient surviving points"


def test_cli_threshold_failure(tmp_path, monkeypatch):
    cfgfile = tmp_path / "c.ini"
    cfgfile.write_text(CHEAP)
    flat = ConvergenceReport([0.2, 0.1, 0.05], [1.0, 1.0, 1.0], 0.0, 0.0, 0.0)
    monkeypatch.setattr(ex, "run_experiment", lambda *a, **k: flat)
    args = ["ladder", "--config", str(cfgfile), "--quiet"]
    assert cli.main(args) == cli.EXIT_OK
    assert cli.main(args + ["--assert"]) == cli.EXIT_THRESHOLD


@pytest.fixture(scope="module")
def cheap_runs(tmp_path_factory):
    cfg = ExperimentConfig.from_string(CHEAP)
    outs = [tmp_path_factory.mktemp(f"run{i}") for i in range(3)]
    reports = [ex.run_experiment(cfg, outs[0]), ex.run_experiment(cfg, outs[1]),
               ex.run_experiment(cfg, outs[2], workers=2)]
    return outs, reports


def test_ladder_artifacts(cheap_runs):
    outs, reports = cheap_runs
    out = outs[0]
    with open(out / "report.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [float(r["epsilon"]) for r in rows] == [0.2, 0.1, 0.05]
    assert rows[0]["slope_running"] == "" and rows[-1]["slope_running"] != ""
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "ok"
    assert manifest["fitted_slope"] == pytest.approx(reports[0].fitted_slope)
    assert ExperimentConfig.from_string(manifest["config"]) == ExperimentConfig.from_string(CHEAP)
    for name in manifest["checksums"]:
        assert (out / name).exists()
    root = ET.parse(out / "report.svg").getroot()
    assert root.tag.endswith("svg")
    for eps in (0.2, 0.1, 0.05):
        point = json.loads((out / "points" / f"eps_{eps:g}" / "point.json").read_text())
        assert point["status"] == "ok" and point["max_norm_ratio"] < 3


def test_ladder_is_deterministic(cheap_runs):
    outs, _ = cheap_runs
    first = (outs[0] / "report.csv").read_bytes()
    assert (outs[1] / "report.csv").read_bytes() == first
    assert (outs[2] / "report.csv").read_bytes() == first


def test_cli_commands_write_outputs(tmp_path):
    cfgfile = tmp_path / "c.ini"
    cfgfile.write_text(CHEAP.replace("0.2, 0.1, 0.05", "0.2").replace("t_end = 0.1", "t_end = 0.02"))
    for cmd in ("simulate", "simulate-inc", "decompose"):
        out = tmp_path / cmd
        assert cli.main([cmd, "--config", str(cfgfile), "--out", str(out), "--quiet"]) == 0
    assert (tmp_path / "simulate" / "timeseries.csv").exists()
    assert (tmp_path / "simulate-inc" / "timeseries.csv").exists()
    summary = json.loads((tmp_path / "decompose" / "decomposition.json").read_text())
    assert 0 < summary["fast_fraction"] < 1
    rsw_cfg = tmp_path / "r.ini"
    rsw_cfg.write_text(cfgfile.read_text() + "ic_preset = rsw_ill_prepared\n")
    assert cli.main(["rsw", "--config", str(rsw_cfg), "--out", str(tmp_path / "rsw"),
                     "--quiet"]) == 0
    with open(tmp_path / "rsw" / "timeseries.csv") as fh:
        assert "k_integral" in next(csv.reader(fh))


def test_check_invariants_command(tmp_path, capsys):
    cfgfile = tmp_path / "a.ini"
    cfgfile.write_text("[grid]\nkind = annulus\n")
    assert cli.main(["check-invariants", "--config", str(cfgfile), "--states", "2",
                     "--quiet"]) == cli.EXIT_OK
    out = capsys.readouterr().out
    assert "harmonic P h = h" in out and "FAIL" not in out
