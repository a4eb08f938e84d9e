"""Simulation studies and extremal-coefficient diagnostics.

Every replicate owns a fixed block of random streams derived from the study
seed, its cell index and its replicate index, so reports do not depend on
the number of workers or on the order in which replicates finish. Simulated
model-scale data are standardized to unit Fréchet with the true marginal
exponent ``V_m`` before fitting.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigError, EmptyLevel, InvalidParameters, MaxIdError
from .fit import (
    FitConfig,
    PairWeights,
    PairwiseLikelihood,
    ParamVector,
    fit_model,
    fit_pairwise,
    initial_range,
)
from .margins import empirical_to_frechet, to_frechet
from .model import (
    MaxIdProcess,
    SiteConfig,
    joint_exceed_prob,
    marginal_V,
    theta_level,
)
from .numerics import RngStream
from .simulate import SimulationConfig, simulate_exact

__all__ = [
    "StudyConfig",
    "StudyReport",
    "run_table1",
    "run_recovery",
    "run_study",
    "aggregate_table1",
    "aggregate_recovery",
    "empirical_extremal_coefficient",
    "model_vs_empirical_report",
    "write_rows_csv",
]

SCENARIOS = ("table1", "recovery", "diagnostics")
#: stream ids reserved per replicate: sites, simulation chunks, probabilities
_STREAMS_PER_REPLICATE = 1000
_REPLICATES_PER_CELL = 10**6
#: fraction of failed replicates above which a cell is marked failed
MAX_FAILED_FRACTION = 0.10


def _cell_dict(family="M3", alpha=1.0, beta=0.0, lam=0.5, nu=1.0):
    return {"family": family, "alpha": float(alpha), "beta": float(beta), "lambda": float(lam), "nu": float(nu)}


@dataclass(frozen=True)
class StudyConfig:
    """Configuration of a simulation study.

    Parameters
    ----------
    scenario : {"table1", "recovery", "diagnostics"}
    replicates : int
        Replicates ``R`` per cell.
    D, n : int
        Sites per replicate and replicates of the process per dataset.
    cells : tuple of dict
        Generating parameters, each with keys ``family``, ``alpha``,
        ``beta``, ``lambda`` and ``nu``.
    seed : int
    workers : int
        Threads running replicates; results do not depend on it.
    cutoff : float
        Pair distance cutoff ``δ``.
    fixed : tuple of str
        Components held at their true values in the fits; ``nu`` by default.
    grid_k : int
        Side of the probe grid on ``[0, 1]²``.
    prob_level : float
        Marginal probability defining the exceedance level.
    prob_target_err : float
        Relative 99% error target for the exceedance probabilities.
    levels : tuple of float
        Fréchet levels of the diagnostics scenario.
    subset_size : int
        Sites per subset in the diagnostics scenario.
    data_scale : {"model", "frechet"}
        Scale of the simulated data handed to the fits. ``"model"`` fits the
        process draws directly, so the margins inform ``β``; ``"frechet"``
        first maps them to unit-Fréchet margins with the true marginal
        exponent and fits the dependence structure alone.
    """

    scenario: str
    replicates: int
    D: int
    n: int
    cells: tuple
    seed: int = 0
    workers: int = 1
    cutoff: float = 0.5
    fixed: tuple = ("nu",)
    grid_k: int = 6
    prob_level: float = 0.99
    prob_target_err: float = 5e-3
    levels: tuple = (0.5, 1.0, 2.0, 5.0, 10.0)
    subset_size: int = 2
    data_scale: str = "model"

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}")
        if self.replicates < 1 or self.D < 2 or self.n < 2:
            raise ConfigError("need R >= 1, D >= 2 and n >= 2")
        if self.replicates > _REPLICATES_PER_CELL:
            raise ConfigError("too many replicates per cell")
        if not self.cells:
            raise ConfigError("at least one parameter cell is required")
        cells = []
        for c in self.cells:
            missing = {"family", "beta", "lambda"} - set(c)
            if missing:
                raise ConfigError(f"cell is missing {sorted(missing)}")
            cells.append(_cell_dict(c["family"], c.get("alpha", 1.0), c["beta"], c["lambda"], c.get("nu", 1.0)))
        object.__setattr__(self, "cells", tuple(cells))
        object.__setattr__(self, "fixed", tuple(self.fixed))
        object.__setattr__(self, "levels", tuple(float(v) for v in self.levels))
        if self.workers < 1:
            raise ConfigError("workers must be positive")
        if self.data_scale not in ("model", "frechet"):
            raise ConfigError(f"unknown data scale {self.data_scale!r}")
        for c in cells:
            self.true_params(c)

    @staticmethod
    def true_params(cell) -> ParamVector:
        try:
            return ParamVector(cell["family"], alpha=cell["alpha"], beta=cell["beta"], lam=cell["lambda"], nu=cell["nu"],
                               fixed=frozenset({"beta"}) if cell["beta"] == 0 else frozenset())
        except InvalidParameters as exc:
            raise ConfigError(f"invalid cell {cell}: {exc}") from exc

    def to_dict(self) -> dict:
        d = asdict(self)
        d["cells"] = [dict(c) for c in self.cells]
        d["fixed"] = list(self.fixed)
        d["levels"] = list(self.levels)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "StudyConfig":
        d = dict(d)
        d["cells"] = tuple(d.get("cells", ()))
        for key in ("fixed", "levels"):
            if key in d:
                d[key] = tuple(d[key])
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown study settings {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def preset(cls, name: str, **overrides) -> "StudyConfig":
        """Named configurations.

        ``table1`` (R=50, D=30, n=50, β ∈ {0, 0.5, 1, 2}), ``table1-smoke``
        (10 replicates of the β=2 cell), ``table1-full`` (R=1000),
        ``recovery`` (R=100, D=15, n=50, β ∈ {0.5, 1, 2}),
        ``recovery-smoke`` (R=10) and ``diagnostics``.
        """
        t1 = tuple(_cell_dict("M3", beta=b) for b in (0.0, 0.5, 1.0, 2.0))
        rec = tuple(_cell_dict("M3", beta=b) for b in (0.5, 1.0, 2.0))
        presets = {
            "table1": dict(scenario="table1", replicates=50, D=30, n=50, cells=t1),
            "table1-smoke": dict(scenario="table1", replicates=10, D=30, n=50, cells=(_cell_dict("M3", beta=2.0),)),
            "table1-full": dict(scenario="table1", replicates=1000, D=30, n=50, cells=t1),
            "recovery": dict(scenario="recovery", replicates=100, D=15, n=50, cells=rec),
            "recovery-smoke": dict(scenario="recovery", replicates=10, D=15, n=50, cells=rec),
            "diagnostics": dict(scenario="diagnostics", replicates=1, D=10, n=500, cells=(_cell_dict("M3", beta=1.0),)),
        }
        if name not in presets:
            raise ConfigError(f"unknown preset {name!r}; choose from {sorted(presets)}")
        base = presets[name]
        base.update(overrides)
        return cls(**base)


@dataclass
class StudyReport:
    """Aggregates and raw per-replicate records of a study.

    Attributes
    ----------
    config : StudyConfig
    cells : list of dict
        Per-cell aggregates, recomputable from ``raw``.
    raw : list of dict
        One record per replicate.
    curves : dict
        Named row lists for diagnostics CSVs.
    """

    config: StudyConfig
    cells: list
    raw: list
    curves: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        # the worker count never changes results, so it stays out of the report
        cfg = self.config.to_dict()
        cfg.pop("workers")
        return {"config": cfg, "cells": self.cells}

    def write(self, outdir: str) -> list:
        """Write ``report.json``, ``raw.csv`` and ``curves/*.csv``; returns the paths."""
        os.makedirs(outdir, exist_ok=True)
        paths = []
        path = os.path.join(outdir, "report.json")
        with open(path, "w") as fh:
            json.dump(_jsonable(self.to_dict()), fh, indent=2, sort_keys=True)
            fh.write("\n")
        paths.append(path)
        path = os.path.join(outdir, "raw.csv")
        write_rows_csv(path, self.raw)
        paths.append(path)
        for name, rows in sorted(self.curves.items()):
            os.makedirs(os.path.join(outdir, "curves"), exist_ok=True)
            path = os.path.join(outdir, "curves", f"{name}.csv")
            write_rows_csv(path, rows)
            paths.append(path)
        return paths


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g") if math.isfinite(v) else ("nan" if math.isnan(v) else ("inf" if v > 0 else "-inf"))
    if v is None:
        return ""
    return str(v)


def write_rows_csv(path: str, rows: list) -> None:
    """Write dict rows with full round-trip float precision."""
    cols = []
    for r in rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([_fmt(r.get(k)) for k in cols])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


# ---------------------------------------------------------------------------
# replicate machinery


def _streams(cfg: StudyConfig, cell: int, rep: int):
    base = (cell * _REPLICATES_PER_CELL + rep) * _STREAMS_PER_REPLICATE
    root = RngStream(cfg.seed, 0)
    return root.child(base), root.child(base + 1), root.child(base + _STREAMS_PER_REPLICATE // 2)


def simulate_dataset(cfg: StudyConfig, cell: int, rep: int, scale: str | None = None):
    """Sites and data of one replicate.

    Parameters
    ----------
    scale : {"model", "frechet"}, optional
        Defaults to ``cfg.data_scale``.

    Returns
    -------
    sites : SiteConfig
    data : ndarray, shape (n, D)
    """
    site_stream, sim_stream, _ = _streams(cfg, cell, rep)
    truth = cfg.true_params(cfg.cells[cell])
    sites = SiteConfig.uniform(cfg.D, site_stream)
    p = truth.process(sites)
    z = simulate_exact(p, SimulationConfig(cfg.n, rng=sim_stream))
    if (scale or cfg.data_scale) == "model":
        return sites, z
    return sites, 1.0 / marginal_V(p.measure, z)


def _fit_config(cfg: StudyConfig, cell) -> FitConfig:
    fixed = {}
    for name in cfg.fixed:
        key = "lambda" if name == "lam" else name
        fixed[name] = cell[key]
    return FitConfig(cutoff=cfg.cutoff, fixed=fixed, godambe=False, scale=cfg.data_scale)


def _run_replicates(cfg: StudyConfig, fn):
    jobs = [(c, r) for c in range(len(cfg.cells)) for r in range(cfg.replicates)]

    def safe(job):
        c, r = job
        rec = {"cell": c, "replicate": r}
        try:
            rec.update(fn(c, r))
            rec["status"] = "ok"
        except (MaxIdError, ArithmeticError, ValueError) as exc:
            rec["status"] = "failed"
            rec["error"] = f"{type(exc).__name__}: {exc}"
        return rec

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            return list(pool.map(safe, jobs))
    return [safe(j) for j in jobs]


def _grid(cfg: StudyConfig) -> SiteConfig:
    return SiteConfig.grid(cfg.grid_k)


def _truth_probability(cfg: StudyConfig, cell: int) -> float:
    truth = cfg.true_params(cfg.cells[cell])
    grid = _grid(cfg)
    p = truth.process(grid)
    val, _ = joint_exceed_prob(p, grid, cfg.prob_level, rng=RngStream(cfg.seed, cell + 1),
                               target_err=cfg.prob_target_err)
    return val


# ---------------------------------------------------------------------------
# misspecification study


def _table1_replicate(cfg: StudyConfig, c: int, r: int) -> dict:
    cell = cfg.cells[c]
    sites, u = simulate_dataset(cfg, c, r)
    free, fixed = fit_pairwise(u, sites, cell["family"], _fit_config(cfg, cell))
    _, _, prob_stream = _streams(cfg, c, r)
    grid = _grid(cfg)
    out = {}
    for tag, fit, off in (("1", fixed, 0), ("2", free, 1)):
        ps = fit.psi_hat
        val, err = joint_exceed_prob(ps.process(grid), grid, cfg.prob_level, rng=prob_stream.child(off),
                                     target_err=cfg.prob_target_err)
        out[f"p{tag}"] = val
        out[f"p{tag}_se"] = err
        out[f"beta{tag}"] = ps.beta
        out[f"lambda{tag}"] = ps.lam
        out[f"alpha{tag}"] = ps.alpha
        out[f"nu{tag}"] = ps.nu
        out[f"pl{tag}"] = fit.pl_value
        out[f"converged{tag}"] = fit.converged
        out[f"evals{tag}"] = fit.n_function_evals
    out["delta_pl"] = free.pl_value - fixed.pl_value
    return out


def aggregate_table1(raw: list, truths: list, cells) -> list:
    """Per-cell aggregates of misspecification study records.

    For fit ``i`` (1: ``β = 0`` fixed, 2: ``β`` free) reports the mean
    ``p̂_i`` and the mean relative error ``E_i = mean |p̂_i - p| / p``.
    """
    out = []
    for c, cell in enumerate(cells):
        rows = [r for r in raw if r["cell"] == c]
        ok = [r for r in rows if r["status"] == "ok"]
        truth = truths[c]
        agg = {
            "cell": c,
            "beta": cell["beta"],
            "family": cell["family"],
            "truth_p": truth,
            "replicates": len(rows),
            "failed": len(rows) - len(ok),
            "cell_failed": (len(rows) - len(ok)) > MAX_FAILED_FRACTION * len(rows),
        }
        if ok:
            for tag in ("1", "2"):
                p = np.array([r[f"p{tag}"] for r in ok])
                agg[f"mean_p{tag}"] = float(p.mean())
                agg[f"E{tag}"] = float(np.mean(np.abs(p - truth) / truth))
                agg[f"mean_beta{tag}"] = float(np.mean([r[f"beta{tag}"] for r in ok]))
                agg[f"mean_lambda{tag}"] = float(np.mean([r[f"lambda{tag}"] for r in ok]))
            dpl = np.array([r["delta_pl"] for r in ok])
            p1 = np.array([r["p1"] for r in ok])
            agg["mean_delta_pl"] = float(dpl.mean())
            agg["frac_delta_pl_positive"] = float(np.mean(dpl > 0))
            agg["frac_p1_below_truth_minus_0.04"] = float(np.mean(p1 < truth - 0.04))
        out.append(agg)
    return out


def run_table1(cfg: StudyConfig) -> StudyReport:
    """Misspecification study: ``β = 0`` fixed versus ``β`` free.

    Each replicate draws ``D`` uniform sites, simulates ``n`` exact
    replicates, fits both models by pairwise likelihood and evaluates the
    probability that some site of the probe grid exceeds its
    ``prob_level`` quantile under each fit. Failed replicates are recorded
    and a cell is marked failed when more than 10% of its replicates fail.
    """
    if cfg.scenario != "table1":
        raise ConfigError("run_table1 needs scenario 'table1'")
    raw = _run_replicates(cfg, lambda c, r: _table1_replicate(cfg, c, r))
    truths = [_truth_probability(cfg, c) for c in range(len(cfg.cells))]
    return StudyReport(cfg, aggregate_table1(raw, truths, cfg.cells), raw)


# ---------------------------------------------------------------------------
# recovery study


def _recovery_replicate(cfg: StudyConfig, c: int, r: int) -> dict:
    cell = cfg.cells[c]
    sites, u = simulate_dataset(cfg, c, r)
    fcfg = _fit_config(cfg, cell)
    truth = cfg.true_params(cell)
    fixed = set(fcfg.fixed)
    if cell["beta"] == 0:
        fixed.add("beta")
    start = dict(
        alpha=fcfg.fixed.get("alpha", 0.5 if cell["family"] == "M1" else 1.0),
        beta=0.0 if "beta" in fixed else 0.5,
        nu=fcfg.fixed.get("nu", 1.0),
    )
    lam0 = fcfg.fixed.get("lam", initial_range(u, sites, start["nu"]))
    psi0 = ParamVector(truth.family, lam=lam0, fixed=frozenset(fixed), **start)
    lik = PairwiseLikelihood(u, sites, PairWeights.from_sites(sites, cfg.cutoff), h=fcfg.h, scale=fcfg.scale)
    fit = fit_model(lik, psi0, fcfg)
    ps = fit.psi_hat
    return {
        "alpha": ps.alpha,
        "beta": ps.beta,
        "lambda": ps.lam,
        "nu": ps.nu,
        "pl": fit.pl_value,
        "converged": fit.converged,
        "evals": fit.n_function_evals,
    }


def aggregate_recovery(raw: list, cells) -> list:
    """Median and interquartile range of each estimate per cell."""
    out = []
    for c, cell in enumerate(cells):
        rows = [r for r in raw if r["cell"] == c]
        ok = [r for r in rows if r["status"] == "ok"]
        agg = {
            "cell": c,
            "family": cell["family"],
            "true_alpha": cell["alpha"],
            "true_beta": cell["beta"],
            "true_lambda": cell["lambda"],
            "true_nu": cell["nu"],
            "replicates": len(rows),
            "failed": len(rows) - len(ok),
            "cell_failed": (len(rows) - len(ok)) > MAX_FAILED_FRACTION * len(rows),
        }
        for key in ("alpha", "beta", "lambda", "nu"):
            if ok:
                v = np.array([r[key] for r in ok])
                q25, q50, q75 = np.percentile(v, [25, 50, 75])
                agg[f"median_{key}"] = float(q50)
                agg[f"q25_{key}"] = float(q25)
                agg[f"q75_{key}"] = float(q75)
                agg[f"iqr_{key}"] = float(q75 - q25)
        # joint (α, β) fits lose precision as either grows
        agg["joint_alpha_beta"] = cell["family"] != "M3"
        out.append(agg)
    return out


def run_recovery(cfg: StudyConfig) -> StudyReport:
    """Parameter recovery: repeated pairwise fits at the generating family."""
    if cfg.scenario != "recovery":
        raise ConfigError("run_recovery needs scenario 'recovery'")
    raw = _run_replicates(cfg, lambda c, r: _recovery_replicate(cfg, c, r))
    return StudyReport(cfg, aggregate_recovery(raw, cfg.cells), raw)


# ---------------------------------------------------------------------------
# extremal coefficient diagnostics


def empirical_extremal_coefficient(data, levels, *, transform="rank", margins=None, subset=None) -> dict:
    """Empirical extremal coefficient ``θ̂(z) = -z log p̂(z)``.

    Parameters
    ----------
    data : ndarray, shape (n, D)
    levels : array_like
        Unit-Fréchet levels ``z``.
    transform : {"rank", "margins", "none"}
        Rank-based Fréchet transform, fitted GEV ``margins`` or data already
        on the Fréchet scale.
    margins : sequence of GevMargin, optional
        Needed with ``transform="margins"``.
    subset : sequence of int, optional
        Columns to use.

    Returns
    -------
    dict
        Arrays ``z``, ``theta``, ``se``, ``lo``, ``hi`` and ``p_hat`` at
        the usable levels (``0 < p̂ < 1``) and ``omitted``, the dropped
        levels. ``p̂`` counts complete rows with every value ``≤ z``; the
        delta-method standard error is ``z sqrt{(1 - p̂)/(n p̂)}``.

    Raises
    ------
    EmptyLevel
        If no level is usable.
    """
    x = np.asarray(data, dtype=float)
    if x.ndim != 2:
        raise InvalidParameters("data must be a matrix")
    if subset is not None:
        x = x[:, list(subset)]
        if margins is not None:
            margins = [margins[i] for i in subset]
    if transform == "rank":
        u = empirical_to_frechet(x)
    elif transform == "margins":
        if margins is None or len(margins) != x.shape[1]:
            raise InvalidParameters("one margin per column is required")
        u = np.column_stack([to_frechet(x[:, j], margins[j]) for j in range(x.shape[1])])
    elif transform == "none":
        u = x
    else:
        raise InvalidParameters(f"unknown transform {transform!r}")
    u = u[np.all(np.isfinite(u), axis=1)]
    n = u.shape[0]
    if n < 1:
        raise EmptyLevel("no complete rows")
    rowmax = u.max(axis=1)
    out = {k: [] for k in ("z", "theta", "se", "lo", "hi", "p_hat")}
    omitted = []
    for z in np.asarray(levels, dtype=float):
        p = float(np.mean(rowmax <= z))
        if not 0.0 < p < 1.0:
            omitted.append(float(z))
            continue
        theta = -z * math.log(p)
        se = z * math.sqrt((1.0 - p) / (n * p))
        out["z"].append(float(z))
        out["theta"].append(theta)
        out["se"].append(se)
        out["lo"].append(theta - 1.959964 * se)
        out["hi"].append(theta + 1.959964 * se)
        out["p_hat"].append(p)
    if not out["z"]:
        raise EmptyLevel("p̂(z) is 0 or 1 at every level")
    res = {k: np.array(v) for k, v in out.items()}
    res["omitted"] = omitted
    res["n"] = n
    return res


def model_vs_empirical_report(models: dict, data, subsets, levels, *, transform="rank", margins=None,
                              rng=0, target_err: float = 5e-3) -> list:
    """Empirical and fitted extremal coefficients per subset and level.

    Parameters
    ----------
    models : dict of str to MaxIdProcess
        Fitted processes sharing the data's sites.
    data : ndarray, shape (n, D)
    subsets : sequence of sequence of int
    levels : array_like
        Unit-Fréchet levels.

    Returns
    -------
    list of dict
        Rows with ``subset``, ``z``, the empirical ``theta_emp`` with its
        interval and one ``theta_<name>`` column per model.
    """
    rows = []
    for s_idx, subset in enumerate(subsets):
        subset = list(subset)
        try:
            emp = empirical_extremal_coefficient(data, levels, transform=transform, margins=margins, subset=subset)
        except EmptyLevel:
            emp = {"z": np.array([]), "omitted": list(levels)}
        usable = {float(z): k for k, z in enumerate(emp["z"])}
        for z in np.asarray(levels, dtype=float):
            row = {"subset": "-".join(str(i) for i in subset), "z": float(z)}
            k = usable.get(float(z))
            if k is not None:
                row.update(theta_emp=emp["theta"][k], lo=emp["lo"][k], hi=emp["hi"][k])
            else:
                row.update(theta_emp=float("nan"), lo=float("nan"), hi=float("nan"))
            for name, p in models.items():
                row[f"theta_{name}"] = theta_level(p, subset, float(z), rng=RngStream(int(rng), s_idx),
                                                   target_err=target_err)
            rows.append(row)
    return rows


def run_diagnostics(cfg: StudyConfig) -> StudyReport:
    """Empirical versus true extremal coefficients on simulated data."""
    if cfg.scenario != "diagnostics":
        raise ConfigError("run_diagnostics needs scenario 'diagnostics'")
    curves, cells = {}, []
    for c, cell in enumerate(cfg.cells):
        sites, u = simulate_dataset(cfg, c, 0, scale="frechet")
        truth = cfg.true_params(cell).process(sites)
        gen = RngStream(cfg.seed, c).generator()
        subsets = [sorted(gen.choice(cfg.D, cfg.subset_size, replace=False).tolist()) for _ in range(3)]
        rows = model_vs_empirical_report({"true": truth}, u, subsets, cfg.levels, transform="none", rng=cfg.seed)
        curves[f"theta_cell{c}"] = rows
        inside = [r["lo"] <= r["theta_true"] <= r["hi"] for r in rows if np.isfinite(r["theta_emp"])]
        cells.append({"cell": c, "beta": cell["beta"], "levels_used": len(inside),
                      "frac_model_inside_ci": float(np.mean(inside)) if inside else float("nan")})
    return StudyReport(cfg, cells, [], curves)


def run_study(cfg: StudyConfig) -> StudyReport:
    """Dispatch on ``cfg.scenario``."""
    return {"table1": run_table1, "recovery": run_recovery, "diagnostics": run_diagnostics}[cfg.scenario](cfg)
