import csv
import json

import pytest

from menuabc.cli import main
from menuabc.report import comparison_rows, histogram_rows, write_report
from menuabc.simulator import BehaviorSummary, ConditionStats

SMALL_BUDGETS = {"train_episodes": 5000, "n_sessions": 300, "subset": 300,
                 "n_init": 3, "n_acquisitions": 2, "rejection_samples": 20}


def config(tmp_path, study, **extra):
    p = tmp_path / f"{study}.json"
    p.write_text(json.dumps({"study": study, "budgets": SMALL_BUDGETS, **extra}))
    return str(p)


def test_infer_writes_artifacts(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["infer", "--config", config(tmp_path, "study1"), "--out", str(out)]) == 0
    for name in ("samples.csv", "posterior.json", "summary_obs.json", "summary_map.json",
                 "report.csv", "report_histograms.csv", "manifest.json", "timings.csv"):
        assert (out / name).exists(), name
    post = json.loads((out / "posterior.json").read_text())
    rec = post["recovery"]["f_dur"]
    assert rec["truth"] == 300.0 and rec["abs_error"] == abs(rec["estimate"] - 300.0)
    assert "MAP" in capsys.readouterr().out


def test_same_seed_same_samples(tmp_path):
    cfg = config(tmp_path, "study1")
    for d in ("a", "b"):
        assert main(["infer", "--config", cfg, "--seed", "4", "--out", str(tmp_path / d)]) == 0
    assert (tmp_path / "a" / "samples.csv").read_bytes() == \
        (tmp_path / "b" / "samples.csv").read_bytes()


def test_manifest_replays_run(tmp_path):
    out = tmp_path / "run"
    main(["infer", "--config", config(tmp_path, "study1"), "--seed", "2", "--out", str(out)])
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["master_seed"] == 2 and manifest["preset_version"] == 1
    replay = tmp_path / "replay.json"
    cfg = manifest["config"]
    cfg["out"] = str(tmp_path / "replayed")
    replay.write_text(json.dumps(cfg))
    assert main(["infer", "--config", str(replay)]) == 0
    assert (out / "samples.csv").read_bytes() == \
        (tmp_path / "replayed" / "samples.csv").read_bytes()


def test_study2_v3_four_theta_columns(tmp_path):
    out = tmp_path / "v3"
    assert main(["infer", "--config", config(tmp_path, "study2-v3"), "--out", str(out)]) == 0
    header = (out / "samples.csv").read_text().splitlines()[0].split(",")
    assert header[4:8] == ["f_dur", "d_sel", "p_rec", "p_sem"]
    assert set(csv.DictReader(open(out / "samples.csv")).__next__()) >= {"origin", "discrepancy"}


def test_report_subcommand_rebuilds(tmp_path):
    out = tmp_path / "run"
    main(["infer", "--config", config(tmp_path, "study1"), "--out", str(out)])
    before = (out / "report.csv").read_bytes()
    (out / "report.csv").unlink()
    assert main(["report", "--out", str(out)]) == 0
    assert (out / "report.csv").read_bytes() == before


def test_simulate_and_reject(tmp_path):
    cfg = config(tmp_path, "study3")
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "s"),
                 "--theta", "p_rec=1", "p_sem=0"]) == 0
    assert (tmp_path / "s" / "sessions.csv").exists()
    assert main(["reject", "--config", cfg, "--out", str(tmp_path / "r"), "--workers", "2"]) == 0
    rows = list(csv.DictReader(open(tmp_path / "r" / "samples.csv")))
    assert len(rows) == 20 and sum(int(r["accepted"]) for r in rows) == 1


def test_bad_config_nonzero_exit(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"study": "study1", "fdur": 1}))
    assert main(["infer", "--config", str(p)]) == 2
    assert "fdur" in capsys.readouterr().err


def test_bad_theta(tmp_path):
    assert main(["simulate", "--config", config(tmp_path, "study1"),
                 "--theta", "p_rec=0.5", "--out", str(tmp_path / "x")]) == 2


def test_failed_run_nonzero(tmp_path):
    p = tmp_path / "obs.json"
    p.write_text(json.dumps({"conditions": {}}))
    cfg = config(tmp_path, "study1", observed=str(p))
    assert main(["infer", "--config", cfg, "--out", str(tmp_path / "o")]) == 1


# -- report tables ---------------------------------------------------------------

def _summary(shift=0.0):
    hist = {"edges_ms": [0.0, 100.0, 200.0], "mass": [0.25, 0.5, 0.25]}
    return BehaviorSummary({c: ConditionStats(10, 900.0 + shift, 300.0, 3.0 + shift / 100, hist,
                                              None) for c in ("all", "abs", "pre")})


def test_identical_summaries_zero_error():
    rows = comparison_rows(_summary(), _summary())
    assert len(rows) == 9 and all(r["abs_error"] == 0.0 for r in rows)


def test_report_units():
    rows = {(r["condition"], r["statistic"]): r for r in comparison_rows(_summary(), _summary(50.0))}
    assert rows[("all", "tct_mean")]["abs_error"] == pytest.approx(0.5)  # 50 ms in 100 ms units
    assert rows[("all", "tct_mean")]["unit"] == "100ms"
    assert rows[("pre", "n_fixations_mean")]["abs_error"] == pytest.approx(0.5)
    assert rows[("pre", "n_fixations_mean")]["unit"] == "count"


def test_histogram_csv_normalized(tmp_path):
    write_report(_summary(), _summary(10.0), tmp_path / "r.csv", tmp_path / "h.csv")
    rows = list(csv.DictReader(open(tmp_path / "h.csv")))
    for cond in ("all", "abs", "pre"):
        mass = [float(r["observed_mass"]) for r in rows if r["condition"] == cond]
        assert sum(mass) == pytest.approx(1.0)
    assert len(histogram_rows(_summary(), _summary())) == 9
