"""Acceptance criteria 1-12, each at its stated tolerance.

Every test records a one-line PASS/FAIL verdict that is printed in the
terminal summary. Criteria 5 and 6 run their smoke presets by default and
the desk-scale presets with ``MAXID_ACCEPTANCE_FULL=1``. Criterion 9 is
non-blocking: its verdict is reported but never fails the run.
"""

import csv
import datetime as dt
import json
import math
import os
import time

import numpy as np
import pytest
from scipy import stats

from conftest import CRITERIA, FULL
from maxid.cli import fmt_float, main, read_matrix_csv
from maxid.fit import PairWeights, ParamVector, full_loglik, full_nll_oracle, pairwise_nll
from maxid.margins import GevMargin, block_factor, gev_cdf, gev_quantile, rescale_gev
from maxid.measures import FiniteMeasureSpec, RadialMeasure, tail_mass
from maxid.model import (
    CorrelationModel,
    MaxIdProcess,
    SiteConfig,
    bivariate_terms,
    exponent_V,
    exponent_V_partial,
    joint_exceed_prob,
    marginal_quantile,
    marginal_V,
    theta_level,
)
from maxid.numerics import RngStream, bivariate_normal_cdf
from maxid.simulate import SimulationConfig, estimate_p_mc, simulate_exact, simulate_finite
from maxid.study import StudyConfig, run_study

pytestmark = pytest.mark.slow


def record(k, ok, detail, blocking=True):
    CRITERIA[k] = ("PASS" if ok else "FAIL", detail + ("" if blocking else " [non-blocking]"))
    print(f"criterion {k}: {'PASS' if ok else 'FAIL'} {detail}")
    if blocking:
        assert ok, detail


def pair_process(m, rho, lam=1.0):
    """Two sites whose exponential correlation is ``rho``."""
    h = -lam * math.log(rho) if rho > 0 else 1e3 * lam
    return MaxIdProcess(m, CorrelationModel(lam, 1.0), SiteConfig.from_coords([[0, 0], [h, 0]]))


# ---------------------------------------------------------------------------


def test_criterion_01_measure_normalization():
    t0 = time.perf_counter()
    worst = 0.0
    betas = np.linspace(0.0, 5.0, 20)
    for fam, alphas in (("M1", np.linspace(0.0, 0.95, 20)), ("M2", np.linspace(0.1, 10.0, 20)), ("M3", [1.0] * 20)):
        for a in alphas:
            for b in betas:
                worst = max(worst, abs(tail_mass(RadialMeasure(fam, a, b), 1.0) - 1.0))
    elapsed = time.perf_counter() - t0
    record(1, worst == 0.0 and elapsed < 1.0, f"max |T(1) - 1| = {worst:.1e} over 3x20x20, {elapsed:.2f} s")


def test_criterion_02_max_stable_oracles():
    t0 = time.perf_counter()
    levels = (0.5, 1.0, 10.0, 100.0)
    p = pair_process(RadialMeasure("M2", 1.0, 0.0), 0.5)
    err_s = max(abs(theta_level(p, (0, 1), z) - 1.5) for z in levels)
    err_t = 0.0
    for alpha in (2.0, 5.0):
        for rho in (0.0, 0.3, 0.5, 0.9):
            q = pair_process(RadialMeasure("M2", alpha, 0.0), rho)
            exact = 2 * stats.t.cdf(math.sqrt((alpha + 1) * (1 - rho) / (1 + rho)), alpha + 1)
            err_t = max(err_t, max(abs(theta_level(q, (0, 1), z) - exact) for z in levels))
    elapsed = time.perf_counter() - t0
    ok = err_s <= 2e-3 and err_t <= 3e-3 and elapsed < 60
    record(2, ok, f"Schlather max err {err_s:.1e} (tol 2e-3), extremal-t max err {err_t:.1e} (tol 3e-3), {elapsed:.1f} s")


def test_criterion_03_simulation_cdf():
    t0 = time.perf_counter()
    sites = SiteConfig.from_coords([[0.0, 0.0], [0.3, 0.1], [0.1, 0.4]])
    p = MaxIdProcess(RadialMeasure("M3", beta=1.0), CorrelationModel(0.5, 1.0), sites)
    n = 100_000
    z = simulate_exact(p, SimulationConfig(n, rng=RngStream(2024, 3)))
    q = {k: marginal_quantile(p.measure, k) for k in (0.3, 0.5, 0.7, 0.9, 0.97)}
    vectors = [
        (q[0.5], q[0.5], q[0.5]), (q[0.9], q[0.9], q[0.9]), (q[0.3], q[0.7], q[0.9]), (q[0.97], q[0.5], q[0.7]),
        (q[0.7], q[0.7], q[0.3]), (q[0.9], q[0.3], q[0.97]), (q[0.97], q[0.97], q[0.97]), (q[0.3], q[0.3], q[0.3]),
        (q[0.5], q[0.9], q[0.7]), (q[0.7], q[0.97], q[0.5]),
    ]
    worst = 0.0
    for k, v in enumerate(vectors):
        ref = math.exp(-exponent_V(p, v, rng=RngStream(77, k), target_err=1e-4))
        emp = float(np.mean(np.all(z <= np.array(v), axis=1)))
        worst = max(worst, abs(emp - ref) / math.sqrt(ref * (1 - ref) / n))
    elapsed = time.perf_counter() - t0
    record(3, worst <= 3.0 and elapsed < 300, f"max |emp - model| = {worst:.2f} binomial SE over 10 vectors, {elapsed:.0f} s")


def test_criterion_04_table1_truth_row():
    t0 = time.perf_counter()
    grid = SiteConfig.grid(6)
    target = {0.0: 0.041, 0.5: 0.076, 1.0: 0.097, 2.0: 0.122}
    lines, ok = [], True
    for k, (beta, ref) in enumerate(target.items()):
        psi = ParamVector("M3", beta=beta, lam=0.5, nu=1.0, fixed={"beta"} if beta == 0 else set())
        p = psi.process(grid)
        val, err = joint_exceed_prob(p, grid, 0.99, rng=RngStream(4, k), target_err=2e-3)
        mc, se = estimate_p_mc(p, grid, 0.99, 20_000, rng=RngStream(40, k))
        agree = abs(val - mc) <= 3 * math.sqrt(err**2 + se**2)
        ok &= abs(val - ref) <= 0.01 and agree
        lines.append(f"b={beta:g}: {val:.4f} (target {ref}, MC {mc:.4f}±{se:.4f})")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 900
    record(4, ok, "; ".join(lines) + f"; {elapsed:.0f} s")


def test_criterion_05_misspecification_bias(tmp_path):
    t0 = time.perf_counter()
    name = "table1" if FULL else "table1-smoke"
    rep = run_study(StudyConfig.preset(name, workers=os.cpu_count() or 1))
    rep.write(str(tmp_path / "table1"))
    (cell,) = [c for c in rep.cells if c["beta"] == 2.0]
    elapsed = time.perf_counter() - t0
    ok = (
        cell["frac_p1_below_truth_minus_0.04"] >= 0.9
        and abs(cell["mean_p2"] - 0.122) <= 0.02
        and cell["frac_delta_pl_positive"] == 1.0
        and (FULL or elapsed < 1200)
    )
    record(5, ok, (
        f"[{name}] truth {cell['truth_p']:.4f}; p1 < truth-0.04 in {cell['frac_p1_below_truth_minus_0.04']:.0%}; "
        f"mean p2 {cell['mean_p2']:.4f} (target 0.122±0.02); dpl>0 in {cell['frac_delta_pl_positive']:.0%}; "
        f"{elapsed:.0f} s"
    ))


def test_criterion_06_parameter_recovery(tmp_path):
    name = "recovery" if FULL else "recovery-smoke"
    rep = run_study(StudyConfig.preset(name, workers=os.cpu_count() or 1))
    rep.write(str(tmp_path / "recovery"))
    ok, parts = True, []
    for c in rep.cells:
        b, mb, ml = c["true_beta"], c["median_beta"], c["median_lambda"]
        ok &= abs(mb - b) <= 0.25 * b and 0.4 <= ml <= 0.65
        parts.append(f"b={b:g}: median b {mb:.3f}, median lambda {ml:.3f}")
    record(6, ok, f"[{name}] " + "; ".join(parts))


def _fd_case(gen):
    fam = gen.choice(["M1", "M2", "M3"])
    alpha = gen.uniform(0.1, 0.8) if fam == "M1" else gen.uniform(0.5, 5.0)
    m = RadialMeasure(fam, alpha, gen.uniform(0.0, 3.0))
    rho = gen.uniform(0.05, 0.95)
    zq = marginal_quantile(m, 0.5)
    z = zq * np.exp(gen.uniform(-1.0, 1.0, 2))
    return pair_process(m, rho), z


def test_criterion_07_derivatives_and_normalization():
    gen = np.random.default_rng(7)
    worst1 = worst12 = 0.0
    for _ in range(50):
        p, (z1, z2) = _fd_case(gen)
        h1, h2 = 1e-3 * z1, 1e-3 * z2
        V = lambda a, b: exponent_V(p, (a, b))
        # fourth-order central differences
        d1 = (-V(z1 + 2 * h1, z2) + 8 * V(z1 + h1, z2) - 8 * V(z1 - h1, z2) + V(z1 - 2 * h1, z2)) / (12 * h1)
        d2 = (-V(z1, z2 + 2 * h2) + 8 * V(z1, z2 + h2) - 8 * V(z1, z2 - h2) + V(z1, z2 - 2 * h2)) / (12 * h2)
        g1, g2 = 1e-2 * z1, 1e-2 * z2

        def mixed(a, b):
            return (V(z1 + a, z2 + b) - V(z1 + a, z2 - b) - V(z1 - a, z2 + b) + V(z1 - a, z2 - b)) / (4 * a * b)

        d12 = (4 * mixed(g1 / 2, g2 / 2) - mixed(g1, g2)) / 3
        v1 = exponent_V_partial(p, (z1, z2), "1")
        v2 = exponent_V_partial(p, (z1, z2), "2")
        v12 = exponent_V_partial(p, (z1, z2), "both")
        worst1 = max(worst1, abs(v1 - d1) / abs(v1), abs(v2 - d2) / abs(v2))
        worst12 = max(worst12, abs(v12 - d12) / abs(v12))
    masses = []
    for m, rho in ((RadialMeasure("M3", beta=1.0), 0.5), (RadialMeasure("M2", 2.0, 0.5), 0.8)):
        lo = math.log(marginal_quantile(m, 1e-7))
        hi = math.log(marginal_quantile(m, 1 - 1e-7))
        x, w = np.polynomial.legendre.leggauss(100)
        t = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
        w = 0.5 * (hi - lo) * w
        zz = np.exp(t)
        a, b = np.meshgrid(zz, zz, indexing="ij")
        v, v1, v2, v12 = bivariate_terms(m, a.ravel(), b.ravel(), np.full(a.size, rho), h=0.05)
        dens = (np.exp(-v) * (v1 * v2 - v12)).reshape(a.shape)
        masses.append(float(np.einsum("i,j,ij,i,j->", w, w, dens, zz, zz)))
    ok = worst1 <= 1e-5 and worst12 <= 1e-4 and all(abs(mm - 1) <= 1e-3 for mm in masses)
    record(7, ok, f"V1/V2 max rel err {worst1:.1e} (tol 1e-5), V12 {worst12:.1e} (tol 1e-4), "
                  f"density masses {masses[0]:.5f}, {masses[1]:.5f}")


def test_criterion_08_full_likelihood():
    sites2 = SiteConfig.from_coords([[0, 0], [0.3, 0.1]])
    psi = ParamVector("M3", beta=1.0, lam=0.5, fixed={"nu"})
    p2 = psi.process(sites2)
    z = simulate_exact(p2, SimulationConfig(10, rng=RngStream(8, 0)))
    u = 1.0 / marginal_V(p2.measure, z)
    w = PairWeights.from_sites(sites2, 1.0)
    diff = abs(pairwise_nll(psi, u, sites2, w) - full_nll_oracle(psi, u, sites2))
    sites3 = SiteConfig.from_coords([[0, 0], [0.3, 0.1], [0.1, 0.4]])
    p3 = psi.process(sites3)
    lo = math.log(marginal_quantile(p3.measure, 1e-5))
    hi = math.log(marginal_quantile(p3.measure, 1 - 1e-5))
    x, wq = np.polynomial.legendre.leggauss(14)
    t = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
    wq = 0.5 * (hi - lo) * wq * np.exp(t)
    zz = np.exp(t)
    total = 0.0
    for i in range(14):
        for j in range(14):
            for k in range(14):
                total += wq[i] * wq[j] * wq[k] * math.exp(full_loglik(p3, np.array([zz[i], zz[j], zz[k]]), rng=0))
    ok = diff <= 1e-8 * abs(full_nll_oracle(psi, u, sites2)) and abs(total - 1) <= 5e-3
    record(8, ok, f"D=2 |pairwise - full| = {diff:.1e}; D=3 density mass {total:.5f} (tol 5e-3)")


def test_criterion_09_eta_consistency():
    beta, rho = 2.0, 0.5
    p = pair_process(RadialMeasure("M3", beta=beta), rho, lam=0.5)
    n = 1_000_000
    z = simulate_exact(p, SimulationConfig(n, rng=RngStream(9, 0)))
    probs = np.geomspace(5e-3, 5e-4, 12)
    joint = []
    for q in probs:
        t1, t2 = np.quantile(z[:, 0], 1 - q), np.quantile(z[:, 1], 1 - q)
        joint.append(np.mean((z[:, 0] > t1) & (z[:, 1] > t2)))
    slope = np.polyfit(np.log(probs), np.log(joint), 1)[0]
    eta = 1.0 / slope
    exact = ((1 + rho) / 2) ** (beta / (beta + 2))
    record(9, abs(eta - exact) <= 0.08, f"eta_hat = {eta:.4f} vs {exact:.4f} (tol 0.08)", blocking=False)


def test_criterion_10_gev_scaling():
    gen = np.random.default_rng(10)
    worst_scale = worst_semi = 0.0
    for _ in range(500):
        g = GevMargin(gen.uniform(-10, 10), gen.uniform(0.1, 5), gen.uniform(-0.5, 0.5), gen.uniform(0.05, 1.0))
        k = int(gen.choice([7, 30, 182]))
        m = block_factor(g, k)
        zs = gev_quantile(g, gen.uniform(0.01, 0.999, 10))
        worst_scale = max(worst_scale, float(np.max(np.abs(gev_cdf(rescale_gev(g, m), zs) - gev_cdf(g, zs) ** m))))
        a, b = gen.uniform(0.5, 50, 2)
        lhs, rhs = rescale_gev(rescale_gev(g, a), b), rescale_gev(g, a * b)
        worst_semi = max(worst_semi, *(abs(getattr(lhs, f) - getattr(rhs, f)) / max(1.0, abs(getattr(rhs, f)))
                                      for f in ("mu", "sigma", "xi")))
    ok = worst_scale <= 1e-12 and worst_semi <= 1e-12
    record(10, ok, f"scaling identity max err {worst_scale:.1e}, semigroup max err {worst_semi:.1e} (tol 1e-12)")


def test_criterion_11_finite_measure():
    n = 200_000
    worst_b = 0.0
    for c in (5.0, 10.0):
        spec = FiniteMeasureSpec(c, np.array([[1.0, 0.3], [0.3, 1.0]]), allow_small_c=True)
        _, boundary = simulate_finite(spec, n, rng=RngStream(11, int(c)))
        p0 = math.exp(-c)
        worst_b = max(worst_b, abs(boundary.mean() - p0) / math.sqrt(p0 * (1 - p0) / n))
    spec = FiniteMeasureSpec(10.0, np.array([[1.0, 0.6], [0.6, 1.0]]))
    z, _ = simulate_finite(spec, n, rng=RngStream(11, 99))
    worst_c = 0.0
    for v in ((0.5, 0.5), (1.0, 1.5), (1.5, 0.8), (2.0, 2.0), (1.2, 1.2)):
        ref = math.exp(-spec.c * (1 - bivariate_normal_cdf(v[0], v[1], 0.6)))
        emp = float(np.mean(np.all(z <= np.array(v), axis=1)))
        worst_c = max(worst_c, abs(emp - ref) / math.sqrt(ref * (1 - ref) / n))
    ok = worst_b <= 3 and worst_c <= 3
    record(11, ok, f"boundary freq max {worst_b:.2f} SE, CDF max {worst_c:.2f} SE (tol 3)")


def _outputs(d):
    out = {}
    for root, _, files in os.walk(d):
        for f in files:
            if f != "manifest.json":
                p = os.path.join(root, f)
                with open(p, "rb") as fh:
                    out[os.path.relpath(p, d)] = fh.read()
    return out


def test_criterion_12_determinism(tmp_path):
    sim = tmp_path / "sim.json"
    sim.write_text(json.dumps({"model": {"measure": {"family": "M3", "beta": 1.0}, "corr": {"lambda": 0.5}},
                               "sites": "uniform:4", "n": 730}))
    runs = {}

    def run(tag, threads, *args):
        out = str(tmp_path / f"{tag}_{threads}")
        code = main([*args, "--out", out, "--seed", "12", "--threads", str(threads)])
        assert code == 0, (tag, code)
        runs.setdefault(tag, []).append(_outputs(out))
        return out

    for threads in (1, 3):
        s = run("simulate", threads, "simulate", str(sim))
    _, ids, u = read_matrix_csv(os.path.join(s, "frechet.csv"))
    daily = tmp_path / "daily.csv"
    with open(daily, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", *ids])
        for k, row in enumerate(u):
            d = dt.date(2001, 1, 1) + dt.timedelta(days=k)
            w.writerow([d.isoformat(), *[fmt_float(x) for x in 20 + 3 * np.log(row)]])
    for threads in (1, 3):
        bm = run("blockmax", threads, "blockmax", str(daily), "--scales", "weekly,monthly")
        mg = run("margins", threads, "margins", "--input", f"weekly={bm}/weekly.csv", "--input", f"monthly={bm}/monthly.csv")
        tr = run("transform", threads, "transform", f"{bm}/weekly.csv", "--margins", f"{mg}/margins.json", "--scale", "weekly")
        ft = run("fit", threads, "fit", f"{tr}/frechet.csv", "--sites", f"{s}/sites.csv", "--variants", "m3",
                 "--fix-nu", "1", "--cutoff", "1.5")
        run("diagnose", threads, "diagnose", f"{tr}/frechet.csv", "--sites", f"{s}/sites.csv",
            "--fits", f"{ft}/fit_m3_free.json", "--subset-size", "3", "--n-subsets", "2", "--levels", "1,2")
    cfg = tmp_path / "study.json"
    cfg.write_text(json.dumps({"scenario": "recovery", "replicates": 2, "D": 5, "n": 20,
                               "cells": [{"family": "M3", "beta": 1.0, "lambda": 0.5}]}))
    for threads in (1, 3):
        run("study", threads, "study", str(cfg))
    same = {tag: all(o == outs[0] for o in outs[1:]) and bool(outs[0]) for tag, outs in runs.items()}
    record(12, all(same.values()), "byte-identical outputs at 1 and 3 workers: "
           + ", ".join(f"{k} {'yes' if v else 'NO'}" for k, v in same.items()))
