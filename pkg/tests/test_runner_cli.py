"""Config parsing, scenario manifests, determinism, and the CLI contract."""

import json
import os

import numpy as np
import pytest

from euler2d import cli
from euler2d import runner as R
from euler2d.errors import InvalidConfig


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------

def test_parse_flat_config():
    text = """
    # comment line
    scenario = "kirchhoff"
    n = 48            # trailing comment
    dt = 0.02
    T = 1.0
    lambda = [0.5, 1.0, 2.0]
    h = "const"
    seed = 3
    """
    data = R.parse_config_text(text)
    assert data["scenario"] == "kirchhoff"
    assert data["n"] == 48
    assert data["dt"] == 0.02
    assert data["lambda"] == [0.5, 1.0, 2.0]
    cfg = R.config_from_mapping(data)
    assert cfg.lambdas == [0.5, 1.0, 2.0]
    assert cfg.seed == 3


def test_parse_rejects_garbage():
    with pytest.raises(InvalidConfig):
        R.parse_config_text("just words\n")
    with pytest.raises(InvalidConfig):
        R.parse_config_text("x = one two\n")
    with pytest.raises(InvalidConfig):
        R.config_from_mapping({"scenario": "kirchhoff", "nope": 3})
    with pytest.raises(InvalidConfig):
        R.config_from_mapping({"n": 48})  # no scenario


@pytest.mark.parametrize(
    "overrides",
    [
        {"n": -2},
        {"dt": 0.0},
        {"T": 0.35, "dt": 0.1},  # not an integer number of steps
        {"lambdas": [0.5, -1.0]},
        {"scenario": "unknown"},
        {"h": "cubic"},
    ],
)
def test_config_validation(overrides):
    base = {"scenario": "kirchhoff", "n": 16, "dt": 0.05, "T": 0.5}
    base.update(overrides)
    with pytest.raises(InvalidConfig):
        R.config_from_mapping(base)


def test_pair_scenario_needs_dominating_zeta():
    with pytest.raises(InvalidConfig):
        R.config_from_mapping(
            {"scenario": "pair_shift", "zeta": "const", "h": "power:0.25"}
        )


# ---------------------------------------------------------------------------
# scenario runs
# ---------------------------------------------------------------------------

def test_growthbound_audit_run(tmp_path):
    cfg = R.config_from_mapping(
        {"scenario": "growthbound_audit", "h": "quarterlog", "out": str(tmp_path)}
    )
    result = R.run_config(cfg)
    assert any("GLOBAL_WELL_POSEDNESS" in line for line in result.summary)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["constants"]["tier"] == "GLOBAL_WELL_POSEDNESS"
    assert (tmp_path / "audit.csv").exists()


def test_pair_shift_zero_perturbation(tmp_path):
    cfg = R.config_from_mapping(
        {
            "scenario": "pair_shift",
            "n": 16,
            "dt": 0.05,
            "T": 0.25,
            "epsilon": 0.0,
            "out": str(tmp_path),
        }
    )
    result = R.run_config(cfg)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["constants"]["aT"] <= 1e-12
    assert manifest["constants"]["M_final"] == 0.0
    rows = (tmp_path / "stability.csv").read_text().splitlines()
    assert rows[0] == "t,eta,L,M,Q,J_sup"


def test_outputs_are_byte_identical(tmp_path):
    payload = {
        "scenario": "pair_shift",
        "n": 16,
        "dt": 0.05,
        "T": 0.25,
        "epsilon": 0.01,
        "seed": 7,
    }
    outs = []
    for sub in ("one", "two"):
        out = tmp_path / sub
        cfg = R.config_from_mapping({**payload, "out": str(out)})
        R.run_config(cfg)
        blobs = {}
        for name in sorted(os.listdir(out)):
            raw = (out / name).read_bytes()
            if name.endswith(".json"):
                # the manifest echoes the out path; normalize it away
                raw = raw.replace(str(out).encode(), b"OUT")
            blobs[name] = raw
        outs.append(blobs)
    assert outs[0] == outs[1]


def test_morrey_sweep_run(tmp_path):
    cfg = R.config_from_mapping(
        {"scenario": "morrey_sweep", "h": "power:0.25", "out": str(tmp_path)}
    )
    result = R.run_config(cfg)
    assert result.constants["stable"]
    assert (tmp_path / "morrey.csv").exists()


def test_convergence_table(tmp_path):
    cfg = R.config_from_mapping(
        {"scenario": "rankine_steady", "n": 12, "dt": 0.1, "T": 0.5, "out": str(tmp_path)}
    )
    result = R.run_convergence(cfg, levels=2)
    errors = result.constants["errors"]
    assert len(errors) == 2
    assert errors[1] < errors[0]
    table = (tmp_path / "convergence.csv").read_text().splitlines()
    assert table[0] == "level,n,dt,error,observed_order"
    assert (tmp_path / "level0" / "manifest.json").exists()


def test_convergence_rejects_non_numeric_scenarios(tmp_path):
    cfg = R.config_from_mapping({"scenario": "growthbound_audit", "out": str(tmp_path)})
    with pytest.raises(InvalidConfig):
        R.run_convergence(cfg, levels=2)
    cfg2 = R.config_from_mapping({"scenario": "kirchhoff", "out": str(tmp_path)})
    with pytest.raises(InvalidConfig):
        R.run_convergence(cfg2, levels=1)


# ---------------------------------------------------------------------------
# CLI (thin client against the in-process service)
# ---------------------------------------------------------------------------

def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_cli_run_success(tmp_path, capsys):
    cfg = _write(
        tmp_path,
        "audit.cfg",
        'scenario = "growthbound_audit"\nh = "power:0.25"\n',
    )
    code = cli.main(["run", cfg, "--out", str(tmp_path / "out")])
    captured = capsys.readouterr()
    assert code == 0
    assert "tier WELL_POSEDNESS" in captured.out
    assert "manifest:" in captured.out


def test_cli_invalid_config_exit_2(tmp_path, capsys):
    cfg = _write(tmp_path, "bad.cfg", 'scenario = "zzz"\n')
    assert cli.main(["run", cfg]) == 2
    assert cli.main(["run", str(tmp_path / "missing.cfg")]) == 2


def test_cli_hypothesis_violation_exit_3(tmp_path, capsys):
    cfg = _write(
        tmp_path,
        "hv.cfg",
        'scenario = "pair_shift"\nzeta = "linear"\nn = 16\ndt = 0.05\nT = 0.25\n'
        f'out = "{tmp_path / "hv_out"}"\n',
    )
    assert cli.main(["run", cfg]) == 3
    assert "hypothesis_violation" in capsys.readouterr().err


def test_cli_threads_and_out_override(tmp_path, capsys):
    cfg = _write(
        tmp_path,
        "pair.cfg",
        'scenario = "pair_shift"\nn = 16\ndt = 0.05\nT = 0.25\nepsilon = 0.01\n',
    )
    out = tmp_path / "cli_out"
    code = cli.main(["run", cfg, "--out", str(out), "--threads", "1"])
    assert code == 0
    assert (out / "manifest.json").exists()


def test_cli_convergence(tmp_path, capsys):
    cfg = _write(
        tmp_path,
        "conv.cfg",
        f'scenario = "rankine_steady"\nn = 12\ndt = 0.1\nT = 0.5\nout = "{tmp_path / "conv"}"\n',
    )
    code = cli.main(["convergence", cfg, "--levels", "2"])
    assert code == 0
    assert "level 1" in capsys.readouterr().out
