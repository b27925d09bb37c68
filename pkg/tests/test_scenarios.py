import json
from pathlib import Path

import pytest

from matconc.cli import run_config, shipped_config_dir
from matconc.config import ExperimentConfig, load_config
from matconc.errors import ConfigError, OracleCapError
from matconc.report import CSV_HEADER, overall_status, to_csv, to_json
from matconc.scenarios import SCENARIOS, run_scenario, validate_config

SHIPPED = sorted(shipped_config_dir().glob("*.toml"))


def markov_cfg(**kw):
    base = {
        "scenario": "markov",
        "dim": 2,
        "trials": 0,
        "seed": 11,
        "distribution": {"kind": "tight_example", "p": 0.25},
        "matrices": {"A": [[2.0, 0.5], [0.5, 1.0]]},
    }
    base.update(kw)
    return ExperimentConfig.from_dict(base)


def strip_clock(report):
    return {k: v for k, v in report.items() if k != "wall_clock_s"}


def test_one_config_per_scenario():
    assert sorted(p.stem for p in SHIPPED) == sorted(SCENARIOS)


@pytest.mark.parametrize("path", SHIPPED, ids=lambda p: p.stem)
def test_shipped_configs_round_trip_and_validate(path):
    cfg = load_config(path)
    assert ExperimentConfig.from_toml(cfg.to_toml()) == cfg
    validate_config(cfg)
    # bound mode is cheap and must work for every scenario
    assert run_scenario(cfg, "bound").bounds


def test_markov_tight_example_oracle_only():
    report = run_config(markov_cfg())
    assert report["bounds"][0]["value"] == 0.25
    assert report["exact_prob"] == 0.25
    assert report["estimate"] is None
    assert report["status"] == "tight"
    assert report["anti_order_reference"] == 0.5
    assert list(report)[-1] == "wall_clock_s"


def test_bound_mode_has_no_verdicts():
    report = run_config(markov_cfg(trials=500), mode="bound")
    assert report["exact_prob"] is None and report["estimate"] is None
    assert report["status"] == "bound_only"


def test_verify_with_trials():
    report = run_config(markov_cfg(trials=4000))
    est = report["estimate"]
    assert est["trials"] == 4000 and est["ci_low"] <= 0.25 <= est["ci_high"]
    assert {v["source"] for v in report["verdicts"]} == {"exact", "estimate"}


def test_same_seed_identical_bytes():
    a = run_config(markov_cfg(trials=3000))
    b = run_config(markov_cfg(trials=3000))
    assert to_json(strip_clock(a)) == to_json(strip_clock(b))
    c = run_config(markov_cfg(trials=3000, seed=12))
    assert c["estimate"] != a["estimate"]


def test_unknown_scenario():
    cfg = markov_cfg(scenario="nope")
    with pytest.raises(ConfigError, match="unknown scenario"):
        run_scenario(cfg)


def test_missing_matrix_named():
    cfg = markov_cfg(matrices={})
    with pytest.raises(ConfigError, match="matrices.A"):
        run_scenario(cfg)


def test_bad_matrix_shape_named():
    cfg = markov_cfg(matrices={"A": [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]})
    with pytest.raises(ConfigError, match="A"):
        run_scenario(cfg)


def test_wrong_distribution_kind():
    cfg = markov_cfg(distribution={"kind": "rademacher"})
    with pytest.raises(ConfigError, match="distribution.kind"):
        run_scenario(cfg)


def test_unknown_field_and_bad_types():
    with pytest.raises(ConfigError, match="unknown config fields"):
        ExperimentConfig.from_dict({"scenario": "markov", "dim": 2, "bogus": 1})
    with pytest.raises(ConfigError, match="dim"):
        ExperimentConfig.from_dict({"scenario": "markov", "dim": 0})
    with pytest.raises(ConfigError, match="trials"):
        ExperimentConfig.from_dict({"scenario": "markov", "dim": 2, "trials": -1})
    with pytest.raises(ConfigError, match="invalid TOML"):
        ExperimentConfig.from_toml("scenario = ")


def test_enumerate_without_oracle_is_error():
    cfg = load_config(shipped_config_dir() / "hoeffding.toml")
    with pytest.raises(OracleCapError):
        run_scenario(cfg, "enumerate")


def test_verify_records_skipped_oracle():
    cfg = load_config(shipped_config_dir() / "chernoff_kl.toml")
    big = ExperimentConfig.from_dict({**cfg.to_dict(), "trials": 200, "params": {**cfg.params, "n": 40}})
    out = run_scenario(big, "verify")
    assert out.exact_prob is None and "exact_skipped" in out.notes
    assert out.estimate is not None


def test_seed_from_environment(monkeypatch):
    base = markov_cfg(trials=2000).to_dict()
    del base["seed"]
    cfg = ExperimentConfig.from_dict(base)
    monkeypatch.setenv("MATCONC_SEED", "11")
    assert run_config(cfg)["estimate"] == run_config(markov_cfg(trials=2000))["estimate"]
    monkeypatch.setenv("MATCONC_SEED", "x")
    with pytest.raises(ConfigError):
        run_config(cfg)


def test_csv_layout():
    report = run_config(markov_cfg(trials=1000))
    lines = to_csv([report]).splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert len(lines) == 2
    fields = lines[1].split(",")
    assert fields[0] == "markov" and fields[2] == "0.25" and fields[-1] == "tight"


def test_report_is_json_serializable_and_rounded():
    report = run_config(load_config(shipped_config_dir() / "laplace.toml"))
    text = to_json(report)
    assert json.loads(text)["config"] == report["config"]
    for b in report["bounds"]:
        assert len(repr(b["value"]).replace("0.", "").lstrip("0")) <= 17


def test_overall_status_order():
    assert overall_status([]) == "bound_only"
    assert overall_status(["pass", "tight"]) == "tight"
    assert overall_status(["tight", "violation", "pass"]) == "violation"


def test_config_output_field(tmp_path: Path):
    cfg = markov_cfg(output=str(tmp_path / "r.json"))
    assert ExperimentConfig.from_toml(cfg.to_toml()).output == cfg.output
