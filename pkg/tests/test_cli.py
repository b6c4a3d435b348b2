"""Command line surface: exit codes, output formats, artifact side effects."""

import json
import shutil
from datetime import datetime

import numpy as np
import pytest

from conftest import SCENARIO_DIR
from tgsim.cli import main
from tgsim.spectral import Series, write_series_csv

T0 = datetime(2026, 7, 1)


# ------------------------------------------------------------- validate


def test_validate_ok_is_quiet(capsys):
    rc = main(["validate", "--config", str(SCENARIO_DIR / "null.yaml")])
    out, err = capsys.readouterr()
    assert rc == 0
    assert out == ""
    assert err == ""


def test_validate_verbose_confirms(capsys):
    path = SCENARIO_DIR / "null.yaml"
    rc = main(["validate", "--config", str(path), "--verbose"])
    out, _ = capsys.readouterr()
    assert rc == 0
    assert out.strip() == f"{path}: ok"


def test_validate_json_contract(capsys, tmp_path):
    rc = main(["validate", "--config", str(SCENARIO_DIR / "null.yaml"), "--json"])
    out, _ = capsys.readouterr()
    assert rc == 0
    assert json.loads(out) == {"schema": 1, "valid": True, "problems": []}

    bad = tmp_path / "bad.yaml"
    bad.write_text("schema_version: 1\nsimulation:\n  span_s: 3600\n")
    rc = main(["validate", "--config", str(bad), "--json"])
    out, _ = capsys.readouterr()
    assert rc == 1
    payload = json.loads(out)
    assert payload["schema"] == 1
    assert payload["valid"] is False
    assert "feeders: at least one feeder is required" in payload["problems"]


def test_validate_problems_go_to_stderr(capsys, tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("schema_version: 1\nsimulation:\n  span_s: 3600\n")
    rc = main(["validate", "--config", str(bad)])
    out, err = capsys.readouterr()
    assert rc == 1
    assert out == ""
    assert "error: feeders: at least one feeder is required" in err


def test_validate_missing_file(capsys, tmp_path):
    rc = main(["validate", "--config", str(tmp_path / "nope.yaml")])
    _, err = capsys.readouterr()
    assert rc == 2
    assert err.startswith("error:")


# ------------------------------------------------------------------ run


def test_run_writes_artifacts_and_reports(capsys, tmp_path):
    out_dir = tmp_path / "nullrun"
    rc = main(["run", "--config", str(SCENARIO_DIR / "null.yaml"), "--out", str(out_dir)])
    out, _ = capsys.readouterr()
    assert rc == 0
    lines = out.splitlines()
    assert lines[0] == "peak load: 0.000 kW"
    assert lines[1] == "energy: 0.000 kWh"
    assert lines[2] == "price mean/sigma: 0.0 / 0.0"
    assert lines[3] == "ufls events: 0"
    assert lines[4] == "oscillation detected: no"
    assert (out_dir / "summary.json").exists()
    assert (out_dir / "manifest.json").exists()


def test_run_reports_oscillation(capsys, tmp_path):
    rc = main([
        "run", "--config", str(SCENARIO_DIR / "scarcity_sync.yaml"),
        "--out", str(tmp_path / "sync"),
    ])
    out, _ = capsys.readouterr()
    assert rc == 0
    assert "oscillation detected: yes" in out.splitlines()


def test_run_json_payload(capsys, tmp_path):
    rc = main([
        "run", "--config", str(SCENARIO_DIR / "null.yaml"),
        "--out", str(tmp_path / "nulljson"), "--json",
    ])
    out, _ = capsys.readouterr()
    assert rc == 0
    payload = json.loads(out)
    assert payload["schema"] == 1
    assert payload["oscillation"] is False
    assert payload["summary"]["peak_load_kw"] == 0.0
    assert payload["manifest"]["seed"] == 1
    assert payload["out_dir"].endswith("nulljson")


def test_run_seed_override_lands_in_the_manifest(capsys, tmp_path):
    rc = main([
        "run", "--config", str(SCENARIO_DIR / "null.yaml"),
        "--out", str(tmp_path / "seeded"), "--seed", "123",
    ])
    capsys.readouterr()
    assert rc == 0
    manifest = json.loads((tmp_path / "seeded" / "manifest.json").read_text())
    assert manifest["seed"] == 123


def test_run_honours_the_out_env_root(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("TGSIM_OUT", str(tmp_path / "envroot"))
    rc = main(["run", "--config", str(SCENARIO_DIR / "null.yaml")])
    capsys.readouterr()
    assert rc == 0
    assert (tmp_path / "envroot" / "null" / "summary.json").exists()


def test_run_error_codes(capsys, tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("feeders: [unclosed")
    assert main(["run", "--config", str(bad)]) == 1
    assert main(["run", "--config", str(tmp_path / "nope.yaml")]) == 2
    capsys.readouterr()


# --------------------------------------------------------------- report


def test_report_summarizes_a_run_dir(capsys, scenario_runs):
    run, _ = scenario_runs["storage_arb"]
    rc = main(["report", str(run.out_dir)])
    out, _ = capsys.readouterr()
    assert rc == 0
    assert "peak_load_kw: 160.0" in out
    assert "settlement_residual: 0.0" in out


def test_report_json_payload(capsys, scenario_runs):
    run, _ = scenario_runs["two_settlement"]
    rc = main(["report", str(run.out_dir), "--json"])
    out, _ = capsys.readouterr()
    assert rc == 0
    payload = json.loads(out)
    assert payload["schema"] == 1
    assert payload["mean_price"] == 32.0
    assert payload["settlement"]["residual"] == 0.0


def test_report_writes_the_duration_curve(capsys, scenario_runs, tmp_path):
    run, _ = scenario_runs["storage_arb"]
    rc = main(["report", str(run.out_dir), "--out", str(tmp_path / "plots")])
    out, _ = capsys.readouterr()
    assert rc == 0
    curve = (tmp_path / "plots" / "price_duration.csv").read_text().splitlines()
    assert curve[0] == "fraction_at_or_above,price"
    # eight feeder intervals; prices descend and fractions climb to one
    rows = [tuple(map(float, line.split(","))) for line in curve[1:]]
    assert len(rows) == 8
    assert [p for _, p in rows] == sorted((p for _, p in rows), reverse=True)
    assert rows[-1][0] == 1.0
    assert f"wrote {tmp_path / 'plots' / 'price_duration.csv'}" in out


def test_report_compare_mode(capsys, scenario_runs):
    first, second = scenario_runs["storage_arb"]
    rc = main(["report", str(second.out_dir), "--against", str(first.out_dir)])
    out, _ = capsys.readouterr()
    assert rc == 0
    lines = out.splitlines()
    assert lines[0].startswith("base: peak 160.000 kW, energy ")
    assert lines[1].startswith("other: peak 160.000 kW, energy ")
    assert any(line.startswith("peak reduction: ") for line in lines)
    assert any(line.startswith("energy delta: ") for line in lines)


def test_report_compare_span_mismatch(capsys, scenario_runs):
    null_run, _ = scenario_runs["null"]
    arb_run, _ = scenario_runs["storage_arb"]
    rc = main(["report", str(arb_run.out_dir), "--against", str(null_run.out_dir)])
    _, err = capsys.readouterr()
    assert rc == 1
    assert "span mismatch" in err


def test_report_missing_summary(capsys, tmp_path):
    rc = main(["report", str(tmp_path)])
    _, err = capsys.readouterr()
    assert rc == 2
    assert "no summary.json" in err


def test_report_corrupt_artifacts(capsys, tmp_path):
    broken = tmp_path / "broken"
    broken.mkdir()
    (broken / "summary.json").write_text("{}")
    (broken / "load.csv").write_text("")
    rc = main(["report", str(broken)])
    _, err = capsys.readouterr()
    assert rc == 1
    assert "empty file" in err
    # same directory without the csv at all is an I/O failure instead
    (broken / "load.csv").unlink()
    rc = main(["report", str(broken)])
    capsys.readouterr()
    assert rc == 2


# -------------------------------------------------------------- spectra


def series_csv(path, values, period_s=900.0):
    write_series_csv(Series(T0, period_s, np.asarray(values, dtype=float)), path)
    return str(path)


def test_spectra_writes_psd(capsys, tmp_path):
    t = np.arange(8)
    load_path = series_csv(tmp_path / "load.csv", 10.0 + np.sin(2 * np.pi * t / 8))
    rc = main(["spectra", "--load", load_path, "--out", str(tmp_path / "spec")])
    out, _ = capsys.readouterr()
    assert rc == 0
    psd = (tmp_path / "spec" / "psd.csv").read_text().splitlines()
    assert psd[0] == "frequency_hz,amplitude"
    assert len(psd) == 1 + 8 // 2 + 1  # header + rfft bins
    assert "wrote" in out


def test_spectra_convolution_and_shift(capsys, tmp_path):
    load_path = series_csv(tmp_path / "load.csv", [5.0, 6.0, 7.0, 8.0, 7.0, 6.0, 5.0, 4.0])
    impact_path = series_csv(tmp_path / "impact.csv", [0.1, 0.2, 0.1])
    rc = main([
        "spectra", "--load", load_path, "--impact", impact_path,
        "--shift", "0.5", "--out", str(tmp_path / "spec"), "--json",
    ])
    out, _ = capsys.readouterr()
    assert rc == 0
    payload = json.loads(out)
    assert payload["schema"] == 1
    assert payload["samples"] == 8
    assert (tmp_path / "spec" / "convolution.csv").exists()
    shift = payload["shift"]
    assert set(shift) == {"impact_at_zero_shift", "impact_at_shift", "impact_change"}
    assert shift["impact_change"] == shift["impact_at_shift"] - shift["impact_at_zero_shift"]


def test_spectra_off_grid_shift_fails_cleanly(capsys, tmp_path):
    load_path = series_csv(tmp_path / "load.csv", [5.0, 6.0, 7.0, 8.0])
    impact_path = series_csv(tmp_path / "impact.csv", [0.1, 0.2])
    rc = main([
        "spectra", "--load", load_path, "--impact", impact_path,
        "--shift", "0.3", "--out", str(tmp_path / "spec"),
    ])
    _, err = capsys.readouterr()
    assert rc == 1
    assert err.startswith("error:")


def test_spectra_input_errors(capsys, tmp_path):
    rc = main(["spectra", "--load", str(tmp_path / "nope.csv")])
    _, err = capsys.readouterr()
    assert rc == 2
    assert err.startswith("error:")
    irregular = tmp_path / "irregular.csv"
    irregular.write_text(
        "time,value\n"
        "2026-07-01T00:00:00,1.0\n"
        "2026-07-01T00:15:00,2.0\n"
        "2026-07-01T00:33:00,3.0\n"
    )
    rc = main(["spectra", "--load", str(irregular)])
    _, err = capsys.readouterr()
    assert rc == 1
    assert err.startswith("error:")


# --------------------------------------------------------------- golden


def test_golden_regenerates_pinned_summaries(capsys, tmp_path):
    scen = tmp_path / "scenarios"
    scen.mkdir()
    for stem in ("null", "two_settlement"):
        shutil.copy(SCENARIO_DIR / f"{stem}.yaml", scen / f"{stem}.yaml")
    rc = main(["golden", "--scenarios", str(scen), "--out", str(tmp_path / "runs"), "--verbose"])
    out, _ = capsys.readouterr()
    assert rc == 0
    assert "null: regenerated" in out
    for stem in ("null", "two_settlement"):
        fresh = (scen / "golden" / f"{stem}.summary.json").read_bytes()
        pinned = (SCENARIO_DIR / "golden" / f"{stem}.summary.json").read_bytes()
        assert fresh == pinned, f"{stem} golden is stale"


def test_golden_error_codes(capsys, tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    rc = main(["golden", "--scenarios", str(empty), "--out", str(tmp_path / "runs")])
    _, err = capsys.readouterr()
    assert rc == 2
    assert "no scenario configs" in err
    scen = tmp_path / "scen"
    scen.mkdir()
    (scen / "broken.yaml").write_text("schema_version: 99\n")
    rc = main(["golden", "--scenarios", str(scen), "--out", str(tmp_path / "runs")])
    _, err = capsys.readouterr()
    assert rc == 1
    assert "broken.yaml" in err
