import csv
import datetime as dt
import json
import os

import numpy as np
import pytest

from maxid.cli import block_maxima, fmt_float, main, read_matrix_csv
from maxid.margins import GevMargin, from_frechet

SIM = {
    "model": {"measure": {"family": "M3", "beta": 1.0}, "corr": {"lambda": 0.5, "nu": 1.0}},
    "sites": "uniform:4",
    "n": 2190,
    "mode": "exact_elliptical",
}


def write_json(path, doc):
    with open(path, "w") as fh:
        json.dump(doc, fh)
    return str(path)


def read_bytes(path):
    with open(path, "rb") as fh:
        return fh.read()


def test_fmt_float():
    assert fmt_float(0.1) == "0.10000000000000001"
    assert fmt_float(float("nan")) == "nan"


def test_block_maxima_rules():
    dates = [dt.date(2001, 1, 1) + dt.timedelta(days=k) for k in range(28)]
    vals = np.arange(28, dtype=float)[:, None]
    vals[7:12] = np.nan
    keys, mx = block_maxima(dates, vals, "weekly")
    assert len(keys) == 4
    assert mx[0, 0] == 6.0 and np.isnan(mx[1, 0]) and mx[3, 0] == 27.0
    keys, mx = block_maxima(dates, vals, "monthly")
    assert keys == [2001 * 12] and mx[0, 0] == 27.0


def test_simulate_is_deterministic_across_threads(tmp_path):
    cfg = write_json(tmp_path / "sim.json", {**SIM, "n": 1000})
    assert main(["simulate", cfg, "--out", str(tmp_path / "a"), "--seed", "5", "--threads", "1"]) == 0
    assert main(["simulate", cfg, "--out", str(tmp_path / "b"), "--seed", "5", "--threads", "3"]) == 0
    for name in ("model_scale.csv", "frechet.csv", "sites.csv"):
        assert read_bytes(tmp_path / "a" / name) == read_bytes(tmp_path / "b" / name)
    man = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert man["seed"] == 5 and set(man["outputs"]) == {"model_scale.csv", "frechet.csv", "sites.csv"}
    assert main(["simulate", cfg, "--out", str(tmp_path / "c"), "--seed", "6", "--threads", "1"]) == 0
    assert read_bytes(tmp_path / "a" / "frechet.csv") != read_bytes(tmp_path / "c" / "frechet.csv")


def test_seed_from_environment(tmp_path, monkeypatch):
    cfg = write_json(tmp_path / "sim.json", {**SIM, "n": 50})
    monkeypatch.setenv("MAXID_SEED", "5")
    assert main(["simulate", cfg, "--out", str(tmp_path / "a")]) == 0
    monkeypatch.delenv("MAXID_SEED")
    assert main(["simulate", cfg, "--out", str(tmp_path / "b"), "--seed", "5"]) == 0
    assert read_bytes(tmp_path / "a" / "frechet.csv") == read_bytes(tmp_path / "b" / "frechet.csv")


def test_changed_inputs_need_force(tmp_path):
    data = tmp_path / "daily.csv"
    data.write_text("date,a\n2001-01-01,1.0\n2001-01-02,2.0\n")
    out = str(tmp_path / "bm")
    assert main(["blockmax", str(data), "--scales", "daily", "--out", out]) == 0
    data.write_text("date,a\n2001-01-01,1.0\n2001-01-02,3.0\n")
    assert main(["blockmax", str(data), "--scales", "daily", "--out", out]) == 2
    assert main(["blockmax", str(data), "--scales", "daily", "--out", out, "--force"]) == 0


def test_config_errors(tmp_path):
    data = tmp_path / "daily.csv"
    data.write_text("date,a\n2001-13-01,1.0\n")
    assert main(["blockmax", str(data), "--out", str(tmp_path / "x")]) == 2
    assert main(["margins", "--input", "hourly=x.csv", "--out", str(tmp_path / "y")]) == 2
    bad = write_json(tmp_path / "bad.json", {"model": {"measure": {"family": "M3"}}, "sites": "grid:2"})
    assert main(["simulate", bad, "--out", str(tmp_path / "z")]) == 2


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """Daily series from a known max-id process through every command."""
    root = tmp_path_factory.mktemp("pipe")
    cfg = write_json(root / "sim.json", SIM)
    assert main(["simulate", cfg, "--out", str(root / "sim"), "--seed", "1", "--threads", "1"]) == 0
    _, ids, u = read_matrix_csv(str(root / "sim" / "frechet.csv"))
    truth = GevMargin(10.0, 2.0, 0.1)
    start = dt.date(2000, 1, 1)
    with open(root / "daily.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", *ids])
        for k, row in enumerate(u):
            w.writerow([(start + dt.timedelta(days=k)).isoformat(), *[fmt_float(v) for v in from_frechet(row, truth)]])
    run = lambda *a: main([*a, "--seed", "1", "--threads", "1"])
    codes = {}
    codes["blockmax"] = run("blockmax", str(root / "daily.csv"), "--out", str(root / "bm"))
    codes["margins"] = run("margins", "--input", f"weekly={root / 'bm' / 'weekly.csv'}",
                           "--input", f"monthly={root / 'bm' / 'monthly.csv'}", "--out", str(root / "mg"))
    codes["transform"] = run("transform", str(root / "bm" / "weekly.csv"), "--margins", str(root / "mg" / "margins.json"),
                             "--scale", "weekly", "--out", str(root / "tr"))
    codes["fit"] = run("fit", str(root / "tr" / "frechet.csv"), "--sites", str(root / "sim" / "sites.csv"),
                       "--variants", "m3,schlather", "--fix-nu", "1", "--cutoff", "1.5", "--out", str(root / "fit"))
    codes["diagnose"] = run("diagnose", str(root / "tr" / "frechet.csv"), "--sites", str(root / "sim" / "sites.csv"),
                            "--fits", str(root / "fit" / "fit_m3_free.json"), "--subset-size", "2",
                            "--n-subsets", "2", "--levels", "1,2,5", "--out", str(root / "dg"))
    return root, codes


@pytest.mark.slow
def test_pipeline_exit_codes(pipeline):
    _, codes = pipeline
    assert codes == {k: 0 for k in ("blockmax", "margins", "transform", "fit", "diagnose")}


@pytest.mark.slow
def test_pipeline_outputs(pipeline):
    root, _ = pipeline
    counts = json.loads((root / "bm" / "manifest.json").read_text())["block_counts"]
    assert counts["daily"] == 2190 and counts["weekly"] == 313
    mg = json.loads((root / "mg" / "margins.json").read_text())
    assert len(mg["sites"]) == 4 and mg["failed"] == []
    # weekly maxima of a daily GEV(10, 2, 0.1) margin
    for s in mg["sites"]:
        assert 0.0 < s["xi"] < 0.25
    _, _, u = read_matrix_csv(str(root / "tr" / "frechet.csv"))
    assert np.all(u[np.isfinite(u)] > 0)
    fit = json.loads((root / "fit" / "fit_m3_free.json").read_text())
    assert fit["psi_hat"]["nu"] == 1.0 and fit["converged"]
    with open(root / "fit" / "comparison.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["rank"] for r in rows] == ["1", "2", "3"]
    assert {r["model"] for r in rows} == {"m3:free", "m3:beta0", "schlather:free"}
    with open(root / "dg" / "theta.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert rows and "theta_m3_free" in rows[0]


@pytest.mark.slow
def test_pipeline_fit_is_reproducible(pipeline, tmp_path):
    root, _ = pipeline
    args = ["fit", str(root / "tr" / "frechet.csv"), "--sites", str(root / "sim" / "sites.csv"), "--variants", "m3",
            "--fix-nu", "1", "--cutoff", "1.5", "--seed", "1"]
    assert main([*args, "--threads", "2", "--out", str(tmp_path / "f")]) == 0
    assert read_bytes(tmp_path / "f" / "fit_m3_free.json") == read_bytes(root / "fit" / "fit_m3_free.json")


def test_cutoff_must_be_positive(tmp_path):
    assert main(["fit", "x.csv", "--sites", "s.csv", "--cutoff", "0", "--out", str(tmp_path)]) == 2
    assert not os.path.exists(tmp_path / "manifest.json")
