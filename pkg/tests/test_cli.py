"""Command line behavior: exit codes, seeds, and byte-stable outputs."""

import json
import re

import numpy as np
import pytest

from simflow import Dataset, NormalNormal, substream
from simflow.cli import main

TIMING = re.compile(rb'"timing_seconds": [^,\n]+')


def _stable(path):
    return TIMING.sub(b'"timing_seconds": X', path.read_bytes())


def _write_data(path, n=12, theta=0.4, seed=3):
    model = NormalNormal(n_obs=n)
    y = model.simulate_data(np.array([theta]), substream(seed, 0))
    y.to_csv(path)
    return path


def test_sbc_happy_path(tmp_path):
    out = tmp_path / "run"
    rc = main(["sbc", "--model", "normal-normal", "--S", "200", "--M", "19",
               "--seed", "42", "--out", str(out)])
    assert rc == 0
    payload = json.loads((out / "report.json").read_text())
    assert payload["status"] == "ok"
    assert payload["command"] == "sbc"
    assert payload["seed_provenance"]["seed"] == 42
    assert payload["results"]["s"] == 200
    assert "threads" not in payload["config"].get("pipeline", {})
    assert list(out.glob("*.svg"))


def test_missing_model_is_config_error(tmp_path, capsys):
    rc = main(["sbc", "--out", str(tmp_path / "x")])
    assert rc == 2
    assert "error:" in capsys.readouterr().err
    assert not (tmp_path / "x" / "report.json").exists()


def test_unknown_format_rejected(tmp_path):
    rc = main(["sbc", "--model", "normal-normal", "--S", "50", "--M", "9",
               "--out", str(tmp_path / "x"), "--formats", "json,exe"])
    assert rc == 2


def test_abc_budget_failure_writes_partial_report(tmp_path):
    data = _write_data(tmp_path / "data.csv")
    out = tmp_path / "abc"
    rc = main(["abc", "--model", "normal-normal", "--data", str(data),
               "--M", "500", "--tolerance", "0.000001",
               "--max-proposals", "2000", "--out", str(out)])
    assert rc == 3
    payload = json.loads((out / "report.json").read_text())
    assert payload["status"] == "error"
    assert payload["error"]["type"] == "BudgetError"
    assert "acceptance_rate" in payload["error"]["diagnostics"]


def test_dry_run_prints_seed_plan(tmp_path, capsys):
    out = tmp_path / "dry"
    rc = main(["sbc", "--model", "normal-normal", "--seed", "7",
               "--out", str(out), "--dry-run"])
    assert rc == 0
    text = capsys.readouterr().out
    assert "seed: 7 (from flag)" in text
    assert "stream (seed, 0, i)" in text
    assert not out.exists()


def test_seed_resolution_order(tmp_path, capsys, monkeypatch):
    cfg = tmp_path / "cfg.ini"
    cfg.write_text("[pipeline]\nseed = 9\n")

    def seed_line(argv):
        assert main(argv) == 0
        return capsys.readouterr().out.splitlines()[0]

    base = ["sbc", "--model", "normal-normal", "--dry-run",
            "--out", str(tmp_path / "o")]
    monkeypatch.setenv("SIMFLOW_SEED", "5")
    assert seed_line(base + ["--config", str(cfg), "--seed", "4"]) == \
        "seed: 4 (from flag)"
    assert seed_line(base + ["--config", str(cfg)]) == "seed: 9 (from config)"
    assert seed_line(base) == "seed: 5 (from env)"
    monkeypatch.delenv("SIMFLOW_SEED")
    assert seed_line(base) == "seed: 0 (from default)"
    monkeypatch.setenv("SIMFLOW_SEED", "ten")
    assert main(base) == 2


def test_reports_byte_identical_across_runs_and_threads(tmp_path):
    outs = [tmp_path / f"r{i}" for i in range(3)]
    argv = ["sbc", "--model", "normal-normal", "--S", "120", "--M", "19",
            "--seed", "11"]
    assert main(argv + ["--out", str(outs[0])]) == 0
    assert main(argv + ["--out", str(outs[1])]) == 0
    assert main(argv + ["--out", str(outs[2]), "--threads", "2"]) == 0
    ref = _stable(outs[0] / "report.json")
    assert _stable(outs[1] / "report.json") == ref
    assert _stable(outs[2] / "report.json") == ref
    svg_names = sorted(p.name for p in outs[0].glob("*.svg"))
    assert svg_names
    for name in svg_names:
        ref_svg = (outs[0] / name).read_bytes()
        assert (outs[1] / name).read_bytes() == ref_svg
        assert (outs[2] / name).read_bytes() == ref_svg


def test_csv_format_writes_pvalues(tmp_path):
    out = tmp_path / "csv"
    rc = main(["sbc", "--model", "normal-normal", "--S", "60", "--M", "9",
               "--out", str(out), "--formats", "json,csv"])
    assert rc == 0
    lines = (out / "pvalues.csv").read_text().strip().splitlines()
    assert lines[0] == "target,index,pvalue"
    assert len(lines) == 61
    assert not list(out.glob("*.svg"))


def test_render_unknown_kind_warns(tmp_path, capsys):
    report = tmp_path / "report.json"
    report.write_text('{"results": {"kind": "mystery"}}\n')
    rc = main(["render", "--report", str(report), "--out", str(tmp_path / "r")])
    assert rc == 0
    assert "no figure renderer" in capsys.readouterr().err


def test_render_regenerates_figures(tmp_path):
    out = tmp_path / "first"
    assert main(["sbc", "--model", "normal-normal", "--S", "80", "--M", "9",
                 "--seed", "2", "--out", str(out)]) == 0
    svg = next(out.glob("*.svg"))
    redo = tmp_path / "redo"
    assert main(["render", "--report", str(out / "report.json"),
                 "--out", str(redo)]) == 0
    assert (redo / svg.name).read_bytes() == svg.read_bytes()


def test_elicit_from_expert_csv(tmp_path):
    expert = tmp_path / "expert.csv"
    rows = ["target,probe,value"]
    for probe, value in zip((0.1, 0.25, 0.5, 0.75, 0.9),
                            (3.1, 4.6, 6.3, 8.2, 10.0)):
        rows.append(f"count,{probe},{value}")
    expert.write_text("\n".join(rows) + "\n")
    out = tmp_path / "el"
    rc = main(["elicit", "--expert-csv", str(expert), "--sims", "2000",
               "--max-iter", "60", "--seed", "1", "--out", str(out),
               "--formats", "json,csv"])
    assert rc == 0
    payload = json.loads((out / "report.json").read_text())
    lam = payload["results"]["lam"]
    assert len(lam) == 2 and all(v > 0 for v in lam)
    assert (out / "loss_trace.csv").exists()


def test_compare_two_models(tmp_path):
    data = _write_data(tmp_path / "data.csv", n=1, theta=0.5)
    cfg = tmp_path / "cmp.ini"
    cfg.write_text(
        "[compare]\nmodels = near, far\n"
        "[model:near]\nname = normal-normal\nn_obs = 1\n"
        "[model:far]\nname = normal-normal\nmu0 = 30.0\nn_obs = 1\n"
    )
    out = tmp_path / "cmp"
    rc = main(["compare", "--config", str(cfg), "--data", str(data),
               "--S", "20000", "--seed", "0", "--out", str(out)])
    assert rc == 0
    payload = json.loads((out / "report.json").read_text())
    models = payload["results"]["models"]
    assert models["near"]["posterior_prob"] > 0.99
    assert "near/far" in payload["results"]["log_bayes_factors"]


def test_evidence_single_model(tmp_path):
    data = _write_data(tmp_path / "data.csv", n=1, theta=0.5)
    out = tmp_path / "ev"
    rc = main(["compare", "--model", "normal-normal", "--model-params",
               "n_obs=1", "--data", str(data), "--S", "5000",
               "--out", str(out)])
    assert rc == 0
    payload = json.loads((out / "report.json").read_text())
    assert payload["results"]["kind"] == "evidence"
    assert np.isfinite(payload["results"]["log_evidence"])


def test_sensitivity_sweep_via_config(tmp_path):
    cfg = tmp_path / "sweep.ini"
    cfg.write_text(
        "[model]\nname = normal-normal\nn_obs = 5\n"
        "[sweep]\npipeline = sbc\ns = 60\nm = 9\nvary_model_tau0 = 0.5|2.0\n"
    )
    out = tmp_path / "sw"
    rc = main(["sensitivity", "--mode", "sweep", "--config", str(cfg),
               "--seed", "3", "--out", str(out), "--formats", "json,csv"])
    assert rc == 0
    payload = json.loads((out / "report.json").read_text())
    rows = payload["results"]["rows"]
    assert len(rows) == 2
    assert all(r["status"] == "ok" for r in rows)
    assert [r["model_tau0"] for r in rows] == [0.5, 2.0]
    sweep_lines = (out / "sweep.csv").read_text().strip().splitlines()
    assert len(sweep_lines) == 3


def test_power_scale_pipeline(tmp_path):
    data = _write_data(tmp_path / "data.csv", n=10)
    out = tmp_path / "ps"
    rc = main(["sensitivity", "--model", "normal-normal", "--model-params",
               "n_obs=10", "--data", str(data), "--M", "800",
               "--alphas", "0.5,1.0,2.0", "--seed", "4", "--out", str(out)])
    assert rc == 0
    payload = json.loads((out / "report.json").read_text())
    axes = payload["results"]["axes"]
    unit = [e for e in axes["likelihood"] if e["alpha"] == 1.0][0]
    assert unit["ess"] == 800.0
