import csv
import json
from pathlib import Path

import pytest

from stopbounds.cli import CSV_COLUMNS, main


def write_config(tmp_path: Path, name: str, payload: dict) -> Path:
    path = tmp_path / name
    path.write_text(json.dumps(payload, indent=2))
    return path


def read_rows(path: Path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


BASE = {
    "name": "pm-threshold",
    "distribution": {"family": "point-mass", "params": {"value": 1.0}},
    "region": {"family": "constant", "level": 5.0, "orientation": "le",
               "kind": "continuity"},
    "schedule": {"kind": "all-naturals"},
    "seed": 3,
}


def test_bound_command_basic_row(tmp_path):
    cfg = dict(BASE, bounds=["T10-upper"])
    path = write_config(tmp_path, "cfg.json", cfg)
    out = tmp_path / "rep.csv"
    assert main(["bound", str(path), "--out", str(out)]) == 0
    rows = read_rows(out)
    assert len(rows) == 1
    row = rows[0]
    assert row["theorem"] == "T10-upper"
    assert row["direction"] == "upper"
    assert float(row["value"]) == pytest.approx(6.0, abs=1e-6)
    assert row["applicable"] == "true"
    assert row["config_hash"] and row["seed"] == "3"


def test_bound_command_flags_missing_support(tmp_path):
    cfg = dict(BASE)
    cfg["distribution"] = {"family": "exponential", "params": {"rate": 1.0}}
    cfg["bounds"] = ["T15-hyperplane-bounded"]
    path = write_config(tmp_path, "cfg.json", cfg)
    out = tmp_path / "rep.csv"
    assert main(["bound", str(path), "--out", str(out)]) == 0
    rows = read_rows(out)
    assert rows[0]["applicable"] == "false"
    assert rows[0]["verdict"] == ""


def test_bound_command_empty_list_header_only(tmp_path):
    cfg = dict(BASE, bounds=[])
    path = write_config(tmp_path, "cfg.json", cfg)
    out = tmp_path / "rep.csv"
    assert main(["bound", str(path), "--out", str(out)]) == 0
    content = out.read_text().strip().splitlines()
    assert content == [",".join(CSV_COLUMNS)]


def test_bound_command_config_errors(tmp_path):
    path = write_config(tmp_path, "cfg.json", {"name": "broken"})
    assert main(["bound", str(path)]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["bound", str(bad)]) == 2
    cfg = dict(BASE, bounds=["T10-upper"])
    cfg["distribution"] = {"family": "product-of-scalars", "params": {"components": [
        {"family": "point-mass", "params": {"value": 1.0}},
        {"family": "point-mass", "params": {"value": 1.0}}]}}
    path = write_config(tmp_path, "mismatch.json", cfg)
    assert main(["bound", str(path)]) == 2  # region is scalar, walk is 2-d


def test_certify_anchor_scenario_exits_zero(tmp_path):
    cfg = {
        "name": "bern-threshold",
        "distribution": {"family": "bernoulli-affine",
                         "params": {"x0": 0, "x1": 1, "p": 0.5}},
        "region": {"family": "constant", "level": 5.0, "orientation": "ge",
                   "kind": "stopping"},
        "schedule": {"kind": "all-naturals"},
        "bounds": ["T8-lower", "T16-chenlorden-II", "vipformula", "T-UseWald-lower"],
        "simulate": {"n_runs": 20000},
        "seed": 5,
    }
    path = write_config(tmp_path, "cfg.json", cfg)
    out = tmp_path / "rep.csv"
    assert main(["certify", str(path), "--out", str(out)]) == 0
    rows = {r["theorem"]: r for r in read_rows(out)}
    assert float(rows["T8-lower"]["value"]) == pytest.approx(10.0, abs=1e-9)
    assert float(rows["T16-chenlorden-II"]["value"]) == pytest.approx(12.0, abs=1e-6)
    assert float(rows["vipformula"]["value"]) == pytest.approx(12.0, abs=1e-6)
    mc = float(rows["T8-lower"]["mc_mean"])
    assert abs(mc - 10.0) <= 4.0 * float(rows["T8-lower"]["mc_stderr"])
    assert all(r["verdict"] == "pass" for r in rows.values())


def test_certify_fails_on_wrong_manual_bound(tmp_path):
    cfg = {
        "name": "bern-threshold-bad",
        "distribution": {"family": "bernoulli-affine",
                         "params": {"x0": 0, "x1": 1, "p": 0.5}},
        "region": {"family": "constant", "level": 5.0, "orientation": "ge",
                   "kind": "stopping"},
        "schedule": {"kind": "all-naturals"},
        "bounds": ["T8-lower"],
        "manual_bounds": [{"theorem": "manual-too-small", "direction": "upper",
                           "value": 9.0}],
        "simulate": {"n_runs": 4000},
        "seed": 5,
    }
    path = write_config(tmp_path, "cfg.json", cfg)
    out = tmp_path / "rep.csv"
    assert main(["certify", str(path), "--out", str(out)]) == 1
    rows = {r["theorem"]: r for r in read_rows(out)}
    assert rows["manual-too-small"]["verdict"] == "fail"
    assert rows["T8-lower"]["verdict"] == "pass"


def test_certify_brownian_drift_only_zero_stderr(tmp_path):
    cfg = {
        "name": "brown-drift",
        "region": {"family": "constant", "level": 4.0, "orientation": "le",
                   "kind": "continuity"},
        "brownian": {"drift": 0.5, "diffusion": 0.0},
        "bounds": ["Brown1"],
        "simulate": {"n_runs": 64, "dt": 0.0078125, "horizon": 64.0},
        "seed": 1,
    }
    path = write_config(tmp_path, "cfg.json", cfg)
    out = tmp_path / "rep.csv"
    assert main(["certify", str(path), "--out", str(out)]) == 0
    row = read_rows(out)[0]
    assert float(row["mc_mean"]) == 8.0
    assert float(row["mc_stderr"]) == 0.0
    assert row["verdict"] == "pass"


def test_certify_all_truncated_exits_with_diagnostic(tmp_path, capsys):
    cfg = {
        "name": "never-stops",
        "distribution": {"family": "point-mass", "params": {"value": 1.0}},
        "region": {"family": "constant", "level": 1e9, "orientation": "ge",
                   "kind": "stopping"},
        "schedule": {"kind": "all-naturals"},
        "bounds": ["T8-lower"],
        "simulate": {"n_runs": 20, "horizon": 50},
        "seed": 1,
    }
    path = write_config(tmp_path, "cfg.json", cfg)
    assert main(["certify", str(path), "--out", str(tmp_path / "rep.csv")]) == 3
    assert "horizon" in capsys.readouterr().err


def test_validate_command_rows_and_counterexample(tmp_path):
    cfg = {
        "name": "validators",
        "validators": [
            {"which": "convex-mean", "case": "unit-square", "samples": 4000},
            {"which": "convex-mean", "case": "two-point", "samples": 2000},
            {"which": "perspective", "gfun": "square", "trials": 4000},
            {"which": "perspective", "gfun": "neg-square", "trials": 1000},
            {"which": "jensen-T3", "gfun": "square",
             "distribution": {"family": "bernoulli-affine",
                              "params": {"x0": 0, "x1": 1, "p": 0.5}},
             "runs": 5000},
        ],
        "seed": 2,
    }
    path = write_config(tmp_path, "cfg.json", cfg)
    out = tmp_path / "rep.csv"
    assert main(["validate", str(path), "--out", str(out)]) == 0
    rows = read_rows(out)
    verdicts = {r["theorem"]: r["verdict"] for r in rows}
    assert verdicts["convex-mean"] == "pass"
    assert verdicts["perspective-convexity"] == "fail"  # injected non-convex case
    passes = [r for r in rows if r["verdict"] == "pass"]
    assert len(passes) == 4


def test_validate_empty_list_header_only(tmp_path):
    path = write_config(tmp_path, "cfg.json", {"name": "empty", "validators": []})
    out = tmp_path / "rep.csv"
    assert main(["validate", str(path), "--out", str(out)]) == 0
    assert out.read_text().strip().splitlines() == [",".join(CSV_COLUMNS)]


def test_validate_unknown_tag_errors(tmp_path):
    path = write_config(tmp_path, "cfg.json",
                        {"validators": [{"which": "no-such-check"}]})
    assert main(["validate", str(path)]) == 2


def test_report_schema_stable_and_json_format(tmp_path):
    cfg = dict(BASE, bounds=["T10-upper", "T8-lower"])
    path = write_config(tmp_path, "cfg.json", cfg)
    out_csv = tmp_path / "rep.csv"
    out_json = tmp_path / "rep.json"
    assert main(["bound", str(path), "--out", str(out_csv)]) == 0
    assert main(["bound", str(path), "--out", str(out_json), "--format", "json"]) == 0
    header = out_csv.read_text().splitlines()[0]
    assert header == ",".join(CSV_COLUMNS)
    data = json.loads(out_json.read_text())
    assert [d["theorem"] for d in data] == ["T10-upper", "T8-lower"]
    assert set(data[0]) == set(CSV_COLUMNS)


def test_seed_and_runs_overrides(tmp_path):
    cfg = {
        "name": "bern",
        "distribution": {"family": "bernoulli-affine",
                         "params": {"x0": 0, "x1": 1, "p": 0.5}},
        "region": {"family": "constant", "level": 5.0, "orientation": "ge",
                   "kind": "stopping"},
        "schedule": {"kind": "all-naturals"},
        "bounds": ["T8-lower"],
        "simulate": {"n_runs": 50000},
        "seed": 5,
    }
    path = write_config(tmp_path, "cfg.json", cfg)
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["certify", str(path), "--seed", "9", "--runs", "2000",
                 "--out", str(out1)]) == 0
    assert main(["certify", str(path), "--seed", "9", "--runs", "2000",
                 "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    row = read_rows(out1)[0]
    assert row["seed"] == "9"


def test_worker_count_bit_identical_reports(tmp_path):
    base = {
        "name": "bern",
        "distribution": {"family": "bernoulli-affine",
                         "params": {"x0": 0, "x1": 1, "p": 0.5}},
        "region": {"family": "constant", "level": 5.0, "orientation": "ge",
                   "kind": "stopping"},
        "schedule": {"kind": "all-naturals"},
        "bounds": ["T8-lower", "T16-chenlorden-II"],
        "seed": 5,
    }
    outs = []
    for workers in (1, 8):
        cfg = dict(base, simulate={"n_runs": 20000, "workers": workers})
        path = write_config(tmp_path, f"cfg{workers}.json", cfg)
        out = tmp_path / f"rep{workers}.csv"
        assert main(["certify", str(path), "--out", str(out)]) == 0
        outs.append(out.read_text())
    # strip the config hash column: worker count is part of the config
    def strip(text):
        return [",".join(c for i, c in enumerate(line.split(",")) if i != 8)
                for line in text.splitlines()]

    assert strip(outs[0]) == strip(outs[1])
