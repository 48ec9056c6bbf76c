from __future__ import annotations

import copy
import csv
import json
from pathlib import Path

import numpy as np
import pytest

from plpcontrol import cli, experiment
from plpcontrol.errors import ConfigError, DivergenceError
from plpcontrol.experiment import (
    STEP_COLUMNS,
    SWEEP_COLUMNS,
    default_patterns,
    load_config,
    parse_config,
    pattern_stats_cmd,
    run_compare,
    run_single,
    run_sweep,
    sls_check,
    sweep_patterns,
)
from plpcontrol.models import ModeChain
from plpcontrol.patterns import PatternCollection

ROOT = Path(__file__).resolve().parents[1]

SWITCHING = {
    "name": "switching",
    "network": {"nodes": 4, "edges": [[[0, 1], [1, 2], [2, 3]], [[0, 1], [1, 2], [2, 3], [3, 0]]], "coupling_gain": 0.2},
    "chain": {"tpm": [[0.8, 0.2], [0.3, 0.7]], "initial_mode": 0, "dwell": 5},
    "disturbance": {"bound": 0.005},
    "sls": {"horizon": 3, "hops": 1},
    "horizon": 40,
    "seeds": [0, 1],
    "excitation": 0.1,
    "timing": "off",
}

SINGLE_MODE = {
    "name": "single",
    "network": {"nodes": 3, "edges": [[[0, 1], [1, 2]]]},
    "chain": {"tpm": [[1.0]]},
    "disturbance": {"bound": 0.01},
    "sls": {"horizon": 3, "hops": 1},
    "horizon": 30,
    "seeds": [0],
    "timing": "off",
}


def _config(base, **overrides):
    data = copy.deepcopy(base)
    data.update(overrides)
    return data


def _read_rows(path: Path):
    with path.open(newline="", encoding="utf-8") as handle:
        return list(csv.DictReader(handle))


def test_case_study_config_is_valid():
    cfg = load_config(ROOT / "configs" / "case_study.json")

    assert cfg.network.nodes == 6
    assert len(cfg.network.edges) == 3
    assert cfg.controllers == ["plp", "baseline-sls", "robust-sls"]
    assert cfg.refresh_data_driven is True


@pytest.mark.parametrize(
    "data",
    [
        _config(SWITCHING, colour="red"),
        _config(SWITCHING, sls={"horizon": 3, "depth": 2}),
        _config(SWITCHING, chain={"tpm": [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]}),
        _config(SWITCHING, chain={"tpm": [[0.5, 0.4], [0.3, 0.7]]}),
        _config(SWITCHING, controllers=["plp", "lqr"]),
        _config(SWITCHING, patterns=[[0, 2]]),
        _config(SWITCHING, patterns=[[0, 1], [1]]),
        _config(SWITCHING, network={"nodes": 4, "edges": [[[0, 9]]]}),
        _config(SWITCHING, seeds=[]),
        _config(SWITCHING, timing="cpu"),
        {"network": SWITCHING["network"]},
    ],
)
def test_invalid_configs_are_rejected(data):
    with pytest.raises(ConfigError):
        parse_config(data)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.json")


def test_default_patterns():
    assert default_patterns(1) == [(0,)]
    assert default_patterns(3) == [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)]


def test_chain_generators():
    cyclic = parse_config(_config(SWITCHING, chain={"generator": {"kind": "cyclic", "stay": 0.4}}))
    tpm = experiment.build_chain(cyclic, 2).tpm

    assert np.allclose(tpm, [[0.4, 0.6], [0.6, 0.4]])
    random = parse_config(_config(SWITCHING, chain={"generator": {"kind": "random", "seed": 3}}))
    assert np.allclose(experiment.build_chain(random, 2).tpm.sum(axis=1), 1.0)


def test_single_mode_controllers_coincide(tmp_path):
    rows = run_compare(parse_config(_config(SINGLE_MODE, output_dir=str(tmp_path))))
    by_name = {row["controller"]: row for row in rows}

    for metric in ("effort_mean", "peak_state_mean", "rms_state_mean"):
        values = [float(by_name[name][metric]) for name in ("plp", "baseline-sls", "robust-sls")]
        assert max(values) - min(values) <= 1e-9


def test_compare_writes_a_row_per_controller(tmp_path):
    rows = run_compare(parse_config(_config(SWITCHING, output_dir=str(tmp_path))))

    summary = _read_rows(tmp_path / "summary.csv")
    assert [row["controller"] for row in summary] == ["plp", "baseline-sls", "robust-sls"]
    assert summary[0]["synth_bound_ok"] == "1"
    assert float(summary[2]["effort_ratio_vs_robust"]) == pytest.approx(1.0)
    assert len(rows) == 3

    steps = _read_rows(tmp_path / "runs" / "plp_seed0.csv")
    assert list(steps[0]) == STEP_COLUMNS
    assert len(steps) == 40
    efforts = [float(row["cum_effort"]) for row in steps]
    assert all(b >= a for a, b in zip(efforts, efforts[1:]))
    assert (tmp_path / "runs" / "plp_seed0_provenance.csv").exists()

    runs = _read_rows(tmp_path / "runs.csv")
    assert len({row["realization"] for row in runs if row["seed"] == "0"}) == 1


def test_same_config_same_bytes(tmp_path):
    first = tmp_path / "first"
    second = tmp_path / "second"
    run_compare(parse_config(_config(SWITCHING)), out_dir=first)
    run_compare(parse_config(_config(SWITCHING)), out_dir=second)

    assert (first / "summary.csv").read_bytes() == (second / "summary.csv").read_bytes()
    assert (first / "runs" / "baseline-sls_seed1.csv").read_bytes() == (second / "runs" / "baseline-sls_seed1.csv").read_bytes()


def test_true_mode_ablation_bounds_plp_syntheses(tmp_path):
    cfg = parse_config(_config(SWITCHING, true_modes=True, horizon=60, chain={"tpm": [[0.2, 0.8], [0.7, 0.3]], "dwell": 5}))
    plp = run_single(cfg, "plp", 0, tmp_path)
    baseline = run_single(cfg, "baseline-sls", 0, tmp_path)

    assert plp.realization == baseline.realization
    assert plp.synth_bound_ok(2)
    assert plp.model_syntheses <= 2
    assert plp.model_syntheses <= baseline.synth_count


def test_divergence_flushes_partial_output(tmp_path, monkeypatch):
    def exploding_simulate(system, modes, controller, disturbance, horizon, seed=0, x0=None):
        for t in range(3):
            controller(t, np.asarray(x0, dtype=float), int(modes[t]))
        raise DivergenceError(3)

    monkeypatch.setattr(experiment, "simulate", exploding_simulate)
    cfg = parse_config(_config(SWITCHING, true_modes=True))

    with pytest.raises(DivergenceError):
        run_single(cfg, "baseline-sls", 0, tmp_path)
    assert len(_read_rows(tmp_path / "baseline-sls_seed0.csv")) == 3


def test_pattern_stats_without_oracle():
    rows = pattern_stats_cmd(ModeChain(tpm=np.full((2, 2), 0.5)), PatternCollection.of([(0, 0)]), trials=0)

    assert float(rows[0]["closed_form"]) == pytest.approx(6.0)
    assert float(rows[1]["closed_form"]) == 1.0
    assert "oracle" not in rows[0]


def test_pattern_stats_with_oracle():
    rows = pattern_stats_cmd(ModeChain(tpm=np.full((2, 2), 0.5)), PatternCollection.of([(0, 0)]), trials=2_000, seed=1)

    assert float(rows[0]["oracle_se"]) > 0.0
    assert rows[1]["within_3se"] == 1


def test_sls_check_reports_every_mode():
    rows = sls_check(parse_config(_config(SWITCHING)))

    assert [(row["source"], row["mode"]) for row in rows] == [("model-based", 0), ("model-based", 1), ("robust", 0), ("robust", 1)]
    for row in rows[:2]:
        assert float(row["achievability_residual"]) <= 1e-8
        assert row["stabilized"] == 1


def test_seed_ranges():
    assert cli.parse_seed_range("3") == [3]
    assert cli.parse_seed_range("0..4") == [0, 1, 2, 3, 4]


def _write(tmp_path: Path, data) -> str:
    path = tmp_path / "config.json"
    path.write_text(json.dumps(data), encoding="utf-8")
    return str(path)


def test_cli_rejects_bad_config(tmp_path):
    assert cli.main(["compare", "--config", _write(tmp_path, _config(SWITCHING, colour="red"))]) == 2


def test_cli_rejects_reducible_chain(tmp_path):
    data = _config(SWITCHING, chain={"tpm": [[1.0, 0.0], [0.0, 1.0]]})
    assert cli.main(["pattern-stats", "--config", _write(tmp_path, data), "--oracle-trials", "0"]) == 2


def test_cli_reports_divergence(tmp_path, monkeypatch):
    def diverging(*args, **kwargs):
        raise DivergenceError(7)

    monkeypatch.setattr(cli, "run_single", diverging)
    assert cli.main(["simulate", "--config", _write(tmp_path, SWITCHING), "--out", str(tmp_path)]) == 3


def test_cli_simulate_writes_steps(tmp_path):
    code = cli.main(["simulate", "--config", _write(tmp_path, SWITCHING), "--out", str(tmp_path), "--controller", "robust-sls", "--seed", "2"])

    assert code == 0
    rows = _read_rows(tmp_path / "runs" / "robust-sls_seed2.csv")
    assert len(rows) == 40
    assert rows[0]["est_mode"] == ""


def test_cli_pattern_stats_prints_csv(tmp_path, capsys):
    code = cli.main(["pattern-stats", "--config", _write(tmp_path, SWITCHING), "--out", str(tmp_path), "--oracle-trials", "0"])

    assert code == 0
    printed = capsys.readouterr().out
    assert printed.startswith("quantity,index,closed_form")
    assert (tmp_path / "pattern_stats.csv").exists()


def test_compare_run_uses_stored_data(tmp_path):
    cfg = parse_config(
        {
            "name": "refresh",
            "network": {"nodes": 3, "edges": [[[0, 1], [1, 2]], [[0, 1], [1, 2], [2, 0]]], "coupling_gain": 0.2},
            "chain": {"tpm": [[0.1, 0.9], [0.9, 0.1]], "initial_mode": 0, "dwell": 20},
            "disturbance": {"bound": 0.001},
            "sls": {"horizon": 2, "hops": None},
            "horizon": 120,
            "seeds": [0],
            "excitation": 0.2,
            "timing": "off",
        }
    )
    plp = run_single(cfg, "plp", 0, tmp_path)

    assert cfg.refresh_data_driven is True
    assert plp.data_syntheses >= 1
    assert plp.synth_bound_ok(2)


def test_case_study_directional_claims(tmp_path):
    cfg = load_config(ROOT / "configs" / "case_study.json")
    rows = run_compare(cfg, out_dir=tmp_path)
    by_name = {row["controller"]: row for row in rows}
    plp = by_name["plp"]

    assert float(plp["synth_ms_mean"]) < float(by_name["baseline-sls"]["synth_ms_mean"])
    assert plp["synth_bound_ok"] == 1
    assert float(plp["effort_ratio_vs_robust"]) <= 1.05
    assert float(plp["peak_ratio_vs_robust"]) <= 1.10


def test_sweep_patterns_enumerate_switching_strings():
    assert sweep_patterns(2, 2) == [(0, 1), (1, 0)]
    assert sweep_patterns(3, 3, length=3) == [(0, 0, 1), (0, 0, 2), (0, 1, 0)]
    with pytest.raises(ConfigError):
        sweep_patterns(2, 3)
    with pytest.raises(ConfigError):
        sweep_patterns(1, 1)


def test_sweep_writes_a_row_per_point(tmp_path):
    cfg = parse_config(_config(SWITCHING, horizon=20, seeds=[0]))
    rows = run_sweep(cfg, nodes=[4, 5], sizes=[1, 2], out_dir=tmp_path)

    table = _read_rows(tmp_path / "sweep.csv")
    assert len(rows) == 4
    assert list(table[0]) == SWEEP_COLUMNS
    assert [(row["nodes"], row["num_patterns"]) for row in table] == [("4", "1"), ("4", "2"), ("5", "1"), ("5", "2")]
    assert all(float(row["synth_count_mean"]) >= 1 for row in table)
    assert (tmp_path / "sweep" / "nodes5_patterns2" / "plp_seed0.csv").exists()


def test_cli_sweep_writes_the_table(tmp_path):
    path = _write(tmp_path, _config(SWITCHING, horizon=20))
    code = cli.main(["sweep", "--config", path, "--out", str(tmp_path), "--pattern-sizes", "1,2", "--seeds", "0"])

    assert code == 0
    rows = _read_rows(tmp_path / "sweep.csv")
    assert [row["num_patterns"] for row in rows] == ["1", "2"]
    assert {row["nodes"] for row in rows} == {"4"}
    assert cli.main(["sweep", "--config", path, "--out", str(tmp_path), "--pattern-sizes", "3"]) == 2
