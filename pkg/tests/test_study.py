import math

import numpy as np
import pytest

from maxid.errors import ConfigError, EmptyLevel
from maxid.study import (
    StudyConfig,
    aggregate_recovery,
    aggregate_table1,
    empirical_extremal_coefficient,
    run_study,
    simulate_dataset,
)


def test_presets_and_round_trip():
    cfg = StudyConfig.preset("table1-smoke")
    assert (cfg.replicates, cfg.D, cfg.n) == (10, 30, 50)
    assert [c["beta"] for c in StudyConfig.preset("recovery").cells] == [0.5, 1.0, 2.0]
    assert StudyConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ConfigError):
        StudyConfig.preset("nope")
    with pytest.raises(ConfigError):
        StudyConfig.from_dict({**cfg.to_dict(), "extra": 1})
    with pytest.raises(ConfigError):
        StudyConfig("recovery", 1, 5, 10, ({"family": "M3", "beta": -1.0, "lambda": 0.5},))


def test_simulate_dataset_streams():
    cfg = StudyConfig("recovery", 3, 5, 20, ({"family": "M3", "beta": 1.0, "lambda": 0.5},), seed=4)
    s0, u0 = simulate_dataset(cfg, 0, 0)
    s0b, u0b = simulate_dataset(cfg, 0, 0)
    _, u1 = simulate_dataset(cfg, 0, 1)
    assert np.array_equal(u0, u0b) and np.array_equal(s0.coords, s0b.coords)
    assert not np.array_equal(u0, u1)
    assert u0.shape == (20, 5) and np.all(u0 > 0)


def test_empirical_theta_independent_and_dependent():
    gen = np.random.default_rng(0)
    n = 200_000
    indep = -1.0 / np.log(gen.uniform(size=(n, 3)))
    res = empirical_extremal_coefficient(indep, [1.0, 3.0], transform="none")
    assert np.all(np.abs(res["theta"] - 3.0) < 4 * res["se"])
    col = -1.0 / np.log(gen.uniform(size=n))
    comon = np.column_stack([col, col])
    res = empirical_extremal_coefficient(comon, [1.0, 3.0], transform="none")
    assert np.all(np.abs(res["theta"] - 1.0) < 4 * res["se"])


def test_empirical_theta_omits_unusable_levels():
    u = np.array([[1.0, 2.0], [3.0, 1.5], [0.5, 0.6]])
    res = empirical_extremal_coefficient(u, [0.1, 2.5, 100.0], transform="none")
    assert res["omitted"] == [0.1, 100.0] and len(res["z"]) == 1
    with pytest.raises(EmptyLevel):
        empirical_extremal_coefficient(u, [0.1], transform="none")


def test_aggregate_table1():
    cells = StudyConfig.preset("table1-smoke").cells
    raw = [
        {"cell": 0, "status": "ok", "p1": 0.05, "p2": 0.12, "beta1": 0.0, "beta2": 2.1, "lambda1": 0.5,
         "lambda2": 0.5, "delta_pl": 10.0},
        {"cell": 0, "status": "ok", "p1": 0.09, "p2": 0.13, "beta1": 0.0, "beta2": 1.9, "lambda1": 0.5,
         "lambda2": 0.6, "delta_pl": 5.0},
        {"cell": 0, "status": "failed"},
    ]
    (agg,) = aggregate_table1(raw, [0.122], cells)
    assert agg["mean_p2"] == pytest.approx(0.125)
    assert agg["E1"] == pytest.approx(np.mean([0.072, 0.032]) / 0.122)
    assert agg["frac_p1_below_truth_minus_0.04"] == 0.5
    assert agg["frac_delta_pl_positive"] == 1.0
    assert agg["failed"] == 1 and agg["cell_failed"]


def test_aggregate_recovery():
    cells = StudyConfig.preset("recovery").cells[:1]
    raw = [{"cell": 0, "status": "ok", "alpha": 1.0, "beta": b, "lambda": 0.5, "nu": 1.0} for b in (0.2, 0.5, 0.9)]
    (agg,) = aggregate_recovery(raw, cells)
    assert agg["median_beta"] == 0.5 and agg["iqr_beta"] == pytest.approx(0.35)
    assert not agg["cell_failed"]


@pytest.mark.slow
def test_recovery_study_independent_of_workers(tmp_path):
    cells = ({"family": "M3", "beta": 1.0, "lambda": 0.5},)
    a = run_study(StudyConfig("recovery", 2, 5, 20, cells, seed=3, workers=1))
    b = run_study(StudyConfig("recovery", 2, 5, 20, cells, seed=3, workers=2))
    pa = a.write(str(tmp_path / "a"))
    pb = b.write(str(tmp_path / "b"))
    for x, y in zip(pa, pb):
        assert open(x, "rb").read() == open(y, "rb").read()
    assert a.cells[0]["median_beta"] == b.cells[0]["median_beta"]
    assert all(r["status"] == "ok" for r in a.raw)


@pytest.mark.slow
def test_diagnostics_scenario():
    cfg = StudyConfig("diagnostics", 1, 6, 400, ({"family": "M3", "beta": 1.0, "lambda": 0.5},), seed=2)
    rep = run_study(cfg)
    (cell,) = rep.cells
    assert cell["levels_used"] > 0
    assert cell["frac_model_inside_ci"] >= 0.6
    rows = rep.curves["theta_cell0"]
    assert all(1.0 <= r["theta_true"] <= 2.0 + 1e-9 for r in rows)
    assert not math.isnan(rows[0]["theta_true"])
