"""Command-line interface.

Subcommands ``blockmax``, ``margins``, ``transform``, ``fit``, ``simulate``,
``diagnose`` and ``study`` each write an output directory holding a
``manifest.json`` recording the command, a hash of its configuration, the
seed, the tool version, input digests, timestamps and output digests. The
manifest is written last and marks a completed run.

Exit codes: 0 success, 2 configuration or input error, 3 numerical failure,
4 partial results.
"""

from __future__ import annotations

import argparse
import csv
import datetime as dt
import hashlib
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .errors import (
    ConfigError,
    DegenerateSeries,
    DimensionTooLarge,
    EmptyAfterFilter,
    EmptyLevel,
    InvalidParameters,
    MaxIdError,
    MissingSite,
    NonConvergence,
    NonTermination,
    NotPositiveSemidefinite,
    NumericalDensityFailure,
    OutOfSupport,
    ParseError,
    SingularInformation,
)
from .fit import FitConfig, PairWeights, ParamVector, fit_pairwise
from .margins import BlockSpec, GevMargin, block_factor, fit_gev_joint, from_frechet, gev_cdf, to_frechet
from .model import SiteConfig, marginal_V
from .numerics import RngStream
from .simulate import SimulationConfig, simulate_exact, simulate_truncated
from .study import StudyConfig, model_vs_empirical_report, run_study

__all__ = ["main", "build_parser"]

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_PARTIAL = 0, 2, 3, 4
CONFIG_ERRORS = (ConfigError, InvalidParameters, ParseError, MissingSite, EmptyAfterFilter, DimensionTooLarge,
                 OutOfSupport, DegenerateSeries, NotPositiveSemidefinite, EmptyLevel)
NUMERIC_ERRORS = (NumericalDensityFailure, NonConvergence, SingularInformation, NonTermination)
DEFAULT_SCALES = ("daily", "weekly", "monthly", "yearly")
#: nominal block sizes in days
SCALE_SIZES = {"daily": 1, "weekly": 7, "monthly": 30, "yearly": 182}
EARTH_RADIUS_KM = 6371.0088


# ---------------------------------------------------------------------------
# file helpers


def fmt_float(v) -> str:
    """17 significant digits; ``nan`` for missing values."""
    v = float(v)
    if math.isnan(v):
        return "nan"
    return format(v, ".17g")


def sha256_file(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _parse_float(text: str, path: str, line: int) -> float:
    t = text.strip()
    if t == "" or t.lower() in ("na", "nan", "null"):
        return math.nan
    try:
        return float(t)
    except ValueError:
        raise ParseError(f"{path}:{line}: cannot parse number {text!r}") from None


def read_matrix_csv(path: str):
    """Read ``<index>,<site ids...>`` wide CSV.

    Returns
    -------
    index : list of str
    ids : list of str
    values : ndarray, shape (rows, sites)
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or len(rows[0]) < 2:
        raise ParseError(f"{path}:1: expected a header with at least one site column")
    ids = [h.strip() for h in rows[0][1:]]
    if len(set(ids)) != len(ids):
        raise ParseError(f"{path}:1: duplicate site ids")
    index, vals = [], []
    for k, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(ids) + 1:
            raise ParseError(f"{path}:{k}: expected {len(ids) + 1} fields, got {len(row)}")
        index.append(row[0].strip())
        vals.append([_parse_float(x, path, k) for x in row[1:]])
    return index, ids, np.array(vals, dtype=float).reshape(len(vals), len(ids))


def write_matrix_csv(path: str, index, ids, values, index_name="block_index") -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([index_name, *ids])
        for key, row in zip(index, values):
            w.writerow([key, *(fmt_float(v) for v in row)])


def write_rows(path: str, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt_float(v) if isinstance(v, (float, np.floating)) else v for v in r])


def write_json(path: str, obj) -> None:
    with open(path, "w") as fh:
        json.dump(_clean(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def read_sites_csv(path: str, lonlat: bool = False) -> SiteConfig:
    """Read ``id,x,y`` (or ``id,lon,lat`` with ``lonlat``) site coordinates.

    Longitude/latitude are projected to a local plane in km by the
    equirectangular map about the mean latitude.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or len(rows[0]) != 3:
        raise ParseError(f"{path}:1: expected header id,x,y")
    ids, xy = [], []
    for k, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 3:
            raise ParseError(f"{path}:{k}: expected 3 fields")
        ids.append(row[0].strip())
        xy.append([_parse_float(row[1], path, k), _parse_float(row[2], path, k)])
    xy = np.array(xy, dtype=float)
    if not np.all(np.isfinite(xy)):
        raise ParseError(f"{path}: coordinates must be finite")
    if lonlat:
        lat0 = math.radians(float(np.mean(xy[:, 1])))
        lon0 = float(np.mean(xy[:, 0]))
        x = EARTH_RADIUS_KM * np.radians(xy[:, 0] - lon0) * math.cos(lat0)
        y = EARTH_RADIUS_KM * np.radians(xy[:, 1])
        xy = np.column_stack([x, y - y.mean()])
    return SiteConfig(tuple(ids), xy)


def align_columns(ids, values, sites: SiteConfig) -> np.ndarray:
    """Reorder data columns to the site order; raises MissingSite."""
    pos = {s: k for k, s in enumerate(ids)}
    missing = [s for s in sites.ids if s not in pos]
    if missing:
        raise MissingSite(f"no data column for sites {missing}")
    extra = [s for s in ids if s not in set(sites.ids)]
    if extra:
        raise MissingSite(f"data columns without coordinates: {extra}")
    return values[:, [pos[s] for s in sites.ids]]


# ---------------------------------------------------------------------------
# run manifest


class Run:
    """Output location, config hash and manifest bookkeeping of one command."""

    def __init__(self, command: str, outdir: str, config: dict, seed: int, inputs, force: bool = False):
        self.command = command
        self.outdir = outdir
        self.config = config
        self.seed = int(seed)
        self.inputs = sorted(set(inputs))
        self.outputs = []
        self.started = dt.datetime.now(dt.timezone.utc).isoformat()
        canon = json.dumps(_clean({"command": command, "config": config, "seed": self.seed}), sort_keys=True)
        self.config_hash = hashlib.sha256(canon.encode()).hexdigest()
        self.digests = {p: sha256_file(p) for p in self.inputs}
        os.makedirs(outdir, exist_ok=True)
        self._check_previous(force)

    @property
    def manifest_path(self):
        return os.path.join(self.outdir, "manifest.json")

    def _check_previous(self, force):
        if force or not os.path.exists(self.manifest_path):
            return
        try:
            with open(self.manifest_path) as fh:
                old = json.load(fh)
        except (OSError, ValueError):
            return
        if old.get("config_hash") != self.config_hash:
            return
        changed = [p for p, d in old.get("input_digests", {}).items() if self.digests.get(p, d) != d]
        if changed:
            raise ConfigError(
                f"inputs changed since the recorded run with the same configuration: {changed}; "
                "rerun with --force to overwrite"
            )

    def path(self, name: str) -> str:
        p = os.path.join(self.outdir, name)
        os.makedirs(os.path.dirname(p), exist_ok=True)
        self.outputs.append(p)
        return p

    def finish(self, status: str = "ok", extra: dict | None = None):
        outputs = {os.path.relpath(p, self.outdir): sha256_file(p) for p in sorted(set(self.outputs)) if os.path.exists(p)}
        manifest = {
            "command": self.command,
            "config": self.config,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "tool_version": __version__,
            "input_digests": self.digests,
            "started": self.started,
            "finished": dt.datetime.now(dt.timezone.utc).isoformat(),
            "outputs": outputs,
            "status": status,
        }
        if extra:
            manifest.update(extra)
        tmp = self.manifest_path + ".tmp"
        write_json(tmp, manifest)
        os.replace(tmp, self.manifest_path)


def resolve_seed(seed) -> int:
    if seed is not None:
        return int(seed)
    env = os.environ.get("MAXID_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise ConfigError(f"MAXID_SEED must be an integer, got {env!r}") from None


def _threads(args) -> int:
    return int(args.threads) if args.threads else (os.cpu_count() or 1)


# ---------------------------------------------------------------------------
# blockmax


def _parse_date(text, path, line):
    try:
        return dt.date.fromisoformat(text.strip())
    except ValueError:
        raise ParseError(f"{path}:{line}: cannot parse date {text!r} (expected YYYY-MM-DD)") from None


def read_daily(path: str, fmt: str = "auto"):
    """Read raw daily data as wide (``date,<ids>``) or long (``date,site,value``) CSV.

    Returns
    -------
    dates : list of datetime.date
    ids : list of str
    values : ndarray, shape (days, sites)
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError(f"{path}:1: empty file")
    header = [h.strip() for h in rows[0]]
    if header[0] != "date":
        raise ParseError(f"{path}:1: first column must be 'date'")
    long = fmt == "long" or (fmt == "auto" and header == ["date", "site", "value"])
    if long:
        table, ids = {}, []
        for k, row in enumerate(rows[1:], start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ParseError(f"{path}:{k}: expected 3 fields")
            d = _parse_date(row[0], path, k)
            s = row[1].strip()
            if s not in ids:
                ids.append(s)
            table[(d, s)] = _parse_float(row[2], path, k)
        dates = sorted({d for d, _ in table})
        vals = np.full((len(dates), len(ids)), np.nan)
        di = {d: i for i, d in enumerate(dates)}
        si = {s: j for j, s in enumerate(ids)}
        for (d, s), v in table.items():
            vals[di[d], si[s]] = v
        return dates, ids, vals
    ids = header[1:]
    dates, vals = [], []
    for k, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ParseError(f"{path}:{k}: expected {len(header)} fields, got {len(row)}")
        dates.append(_parse_date(row[0], path, k))
        vals.append([_parse_float(x, path, k) for x in row[1:]])
    if len(set(dates)) != len(dates):
        raise ParseError(f"{path}: duplicate dates")
    order = np.argsort(np.array([d.toordinal() for d in dates]))
    return [dates[i] for i in order], ids, np.array(vals, dtype=float)[order]


def _block_key(scale, d: dt.date, first: dt.date, season_start: int):
    if scale == "daily":
        return d.toordinal()
    if scale == "weekly":
        return (d - first).days // 7
    if scale == "monthly":
        return d.year * 12 + d.month - 1
    if scale == "yearly":
        return d.year if d.month >= season_start else d.year - 1
    raise ConfigError(f"unknown scale {scale!r}")


def block_maxima(dates, values, scale: str, months=None, max_missing: float = 0.5):
    """Per-site maxima over calendar blocks.

    Weekly blocks are consecutive 7-day windows from the first date,
    monthly blocks calendar months and yearly blocks seasons starting at the
    first listed month (calendar years without a month filter). A block
    whose share of missing filtered days exceeds ``max_missing`` is missing.

    Returns
    -------
    keys : list of int
    maxima : ndarray, shape (blocks, sites)
    """
    months = list(months) if months else list(range(1, 13))
    season_start = months[0] if months else 1
    first, last = dates[0], dates[-1]
    by_date = {d: i for i, d in enumerate(dates)}
    expected, rows = {}, {}
    for o in range(first.toordinal(), last.toordinal() + 1):
        d = dt.date.fromordinal(o)
        if d.month not in months:
            continue
        key = _block_key(scale, d, first, season_start)
        expected.setdefault(key, []).append(d)
    keys = sorted(expected)
    out = np.full((len(keys), values.shape[1]), np.nan)
    for b, key in enumerate(keys):
        days = expected[key]
        idx = [by_date[d] for d in days if d in by_date]
        if not idx:
            continue
        block = values[idx]
        present = np.isfinite(block).sum(axis=0)
        with np.errstate(all="ignore"):
            mx = np.nanmax(np.where(np.isfinite(block), block, -np.inf), axis=0)
        ok = present >= (1.0 - max_missing) * len(days)
        out[b] = np.where(ok & (present > 0), mx, np.nan)
    return keys, out


def cmd_blockmax(args) -> int:
    scales = [s.strip() for s in args.scales.split(",") if s.strip()]
    for s in scales:
        if s not in SCALE_SIZES:
            raise ConfigError(f"unknown scale {s!r}; choose from {sorted(SCALE_SIZES)}")
    months = [int(m) for m in args.months.split(",")] if args.months else None
    if months and any(not 1 <= m <= 12 for m in months):
        raise ConfigError("months must lie in 1..12")
    run = Run("blockmax", args.out, {"scales": scales, "months": months, "format": args.format},
              resolve_seed(args.seed), [args.input], args.force)
    dates, ids, vals = read_daily(args.input, args.format)
    if months:
        keep = [i for i, d in enumerate(dates) if d.month in months]
        dates = [dates[i] for i in keep]
        vals = vals[keep]
    if not dates:
        raise EmptyAfterFilter("no observations left after the month filter")
    counts = {}
    for s in scales:
        keys, mx = block_maxima(dates, vals, s, months)
        if not np.any(np.isfinite(mx)):
            raise EmptyAfterFilter(f"no complete {s} block")
        write_matrix_csv(run.path(f"{s}.csv"), range(len(keys)), ids, mx)
        counts[s] = len(keys)
    run.finish(extra={"block_counts": counts})
    print(json.dumps(counts))
    return EXIT_OK


# ---------------------------------------------------------------------------
# margins and transform


def _scale_inputs(specs):
    out = []
    for item in specs:
        if "=" not in item:
            raise ConfigError(f"expected label=path, got {item!r}")
        label, path = item.split("=", 1)
        if label not in SCALE_SIZES:
            raise ConfigError(f"unknown scale {label!r}")
        out.append((label, path))
    out.sort(key=lambda lp: SCALE_SIZES[lp[0]])
    return out


def cmd_margins(args) -> int:
    inputs = _scale_inputs(args.input)
    if not inputs:
        raise ConfigError("at least one --input label=path is required")
    labels = tuple(lbl for lbl, _ in inputs)
    # sizes in units of the finest supplied scale
    base = SCALE_SIZES[labels[0]]
    blocks = BlockSpec(labels, tuple(max(1, round(SCALE_SIZES[lbl] / base)) for lbl in labels))
    run = Run("margins", args.out, {"inputs": list(labels), "sizes": list(blocks.sizes)},
              resolve_seed(args.seed), [p for _, p in inputs], args.force)
    tables = [read_matrix_csv(p) for _, p in inputs]
    ids = tables[0][1]
    for (lbl, p), (_, tids, _) in zip(inputs, tables):
        if set(tids) != set(ids):
            raise MissingSite(f"site ids of {p} differ from {inputs[0][1]}")
    sites_out, failed = [], []
    for sid in ids:
        series = []
        for _, tids, vals in tables:
            col = vals[:, tids.index(sid)]
            series.append(col[np.isfinite(col)])
        try:
            m = fit_gev_joint(series, blocks)
        except (DegenerateSeries, NonConvergence) as exc:
            failed.append({"site_id": sid, "error": f"{type(exc).__name__}: {exc}"})
            continue
        sites_out.append(m.to_dict(sid))
    doc = {"blocks": {"labels": list(blocks.labels), "sizes": list(blocks.sizes)}, "sites": sites_out, "failed": failed}
    write_json(run.path("margins.json"), doc)
    status = "partial" if failed else "ok"
    run.finish(status)
    if failed and sites_out:
        return EXIT_PARTIAL
    if failed:
        return EXIT_NUMERIC
    return EXIT_OK


def read_margins(path: str):
    with open(path) as fh:
        doc = json.load(fh)
    try:
        blocks = BlockSpec(tuple(doc["blocks"]["labels"]), tuple(doc["blocks"]["sizes"]))
        margins = {d["site_id"]: GevMargin.from_dict(d) for d in doc["sites"]}
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"{path}: malformed margins file ({exc})") from None
    return blocks, margins


def cmd_transform(args) -> int:
    blocks, margins = read_margins(args.margins)
    if args.scale not in blocks.labels:
        raise ConfigError(f"scale {args.scale!r} is not in the margins file")
    size = blocks.size_of(args.scale)
    run = Run("transform", args.out, {"scale": args.scale, "inverse": bool(args.inverse)},
              resolve_seed(args.seed), [args.input, args.margins], args.force)
    index, ids, vals = read_matrix_csv(args.input)
    missing = [s for s in ids if s not in margins]
    if missing:
        raise MissingSite(f"no margins for sites {missing}")
    out = np.full_like(vals, np.nan)
    qq = []
    for j, sid in enumerate(ids):
        m = margins[sid]
        f = block_factor(m, size)
        col = vals[:, j]
        ok = np.isfinite(col)
        if args.inverse:
            out[ok, j] = from_frechet(col[ok], m, f)
            continue
        out[ok, j] = to_frechet(col[ok], m, f)
        x = np.sort(col[ok])
        k = x.size
        probs = (np.arange(1, k + 1) - 0.5) / k
        for xi, pi in zip(x, probs):
            model_q = float(from_frechet(-1.0 / math.log(pi), m, f))
            qq.append([sid, float(xi), model_q, float(pi), float(gev_cdf(m, xi) ** f)])
    name = "data.csv" if args.inverse else "frechet.csv"
    write_matrix_csv(run.path(name), index, ids, out)
    if not args.inverse:
        write_rows(run.path("qq.csv"), ["site_id", "observed", "model_quantile", "plotting_position", "model_cdf"], qq)
    run.finish()
    return EXIT_OK


# ---------------------------------------------------------------------------
# fit


VARIANTS = {
    # name: (family, fixed natural values, whether the dual β fits apply)
    "schlather": ("M2", {"alpha": 1.0, "beta": 0.0}),
    "extremal-t": ("M2", {"beta": 0.0}),
    "m3": ("M3", {}),
    "m2": ("M2", {}),
}


def _model_from_json(path):
    with open(path) as fh:
        doc = json.load(fh)
    try:
        meas, cor = doc["measure"], doc["corr"]
        family = meas["family"]
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"{path}: model JSON needs measure and corr sections ({exc})") from None
    fixed = {}
    for name in meas.get("fixed", []):
        if name not in ("alpha", "beta"):
            raise ConfigError(f"{path}: cannot fix measure parameter {name!r}")
        fixed[name] = float(meas[name])
    for name in cor.get("fixed", []):
        key = {"lambda": "lam", "nu": "nu"}.get(name)
        if key is None:
            raise ConfigError(f"{path}: cannot fix correlation parameter {name!r}")
        fixed[key] = float(cor[name])
    init = {k: float(meas[k]) for k in ("alpha", "beta") if k in meas and meas[k] is not None}
    init.update({key: float(cor[name]) for name, key in (("lambda", "lam"), ("nu", "nu")) if name in cor})
    if init.get("beta", 1.0) <= 0:
        init.pop("beta")
    return family, fixed, init


def cmd_fit(args) -> int:
    if not args.cutoff > 0:
        raise ConfigError("--cutoff must be positive")
    seed = resolve_seed(args.seed)
    if args.model:
        family, fixed, init = _model_from_json(args.model)
        variants = {"model": (family, fixed, init)}
    else:
        names = [v.strip() for v in args.variants.split(",") if v.strip()]
        unknown = [v for v in names if v not in VARIANTS]
        if unknown:
            raise ConfigError(f"unknown variants {unknown}; choose from {sorted(VARIANTS)}")
        variants = {v: (VARIANTS[v][0], dict(VARIANTS[v][1]), {}) for v in names}
        if args.fix_nu is not None:
            for v in variants.values():
                v[1]["nu"] = float(args.fix_nu)
    sites = read_sites_csv(args.sites, args.lonlat)
    weights = PairWeights.from_sites(sites, args.cutoff)
    config = {
        "variants": {k: [f, fx, ini] for k, (f, fx, ini) in variants.items()},
        "cutoff": args.cutoff,
        "lonlat": bool(args.lonlat),
        "projection": "equirectangular about the mean latitude (km)" if args.lonlat else "planar",
    }
    inputs = [args.data, args.sites] + ([args.model] if args.model else [])
    run = Run("fit", args.out, config, seed, inputs, args.force)
    _, ids, vals = read_matrix_csv(args.data)
    u = align_columns(ids, vals, sites)
    rows, failures = [], {}
    for name, (family, fixed, init) in variants.items():
        cfg = FitConfig(cutoff=args.cutoff, fixed=fixed, init=init, workers=_threads(args))
        try:
            free, nested = fit_pairwise(u, sites, family, cfg, weights=weights)
        except (MaxIdError, ArithmeticError) as exc:
            failures[name] = f"{type(exc).__name__}: {exc}"
            continue
        pairs = [("free", free)] if "beta" in fixed else [("free", free), ("beta0", nested)]
        for tag, fit in pairs:
            doc = fit.to_dict()
            doc.update(variant=name, fit=tag, config=cfg.to_dict(), seed=seed, weights=weights.summary(),
                       sites=list(sites.ids))
            write_json(run.path(f"fit_{name}_{tag}.json"), doc)
            rows.append([f"{name}:{tag}", family, fit.pl_value,
                         math.nan if fit.clic_star is None else fit.clic_star,
                         fit.psi_hat.alpha, fit.psi_hat.beta, fit.psi_hat.lam, fit.psi_hat.nu, fit.converged])
        if "beta" not in fixed:
            rows[-2].append(free.pl_value - nested.pl_value)
    rows.sort(key=lambda r: (math.inf if math.isnan(r[3]) else r[3], r[0]))
    table = [[k + 1, *r[:9], r[9] if len(r) > 9 else math.nan] for k, r in enumerate(rows)]
    write_rows(run.path("comparison.csv"),
               ["rank", "model", "family", "pl", "clic_star", "alpha", "beta", "lambda", "nu", "converged",
                "delta_pl_free_minus_beta0"], table)
    summary = {"weights": weights.summary(), "failures": failures}
    write_json(run.path("summary.json"), summary)
    status = "ok" if not failures else ("partial" if rows else "failed")
    run.finish(status)
    print(json.dumps(_clean({"fraction_active_pairs": weights.fraction_active, "failures": failures})))
    if failures:
        return EXIT_PARTIAL if rows else EXIT_NUMERIC
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate, diagnose, study


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except ValueError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None


def _sites_from_config(doc, base_dir, seed):
    spec = doc.get("sites")
    if isinstance(spec, str) and spec.startswith("grid:"):
        return SiteConfig.grid(int(spec.split(":", 1)[1]))
    if isinstance(spec, str) and spec.startswith("uniform:"):
        return SiteConfig.uniform(int(spec.split(":", 1)[1]), RngStream(seed, 999_999_999))
    if isinstance(spec, str):
        path = spec if os.path.isabs(spec) else os.path.join(base_dir, spec)
        return read_sites_csv(path)
    if isinstance(spec, list):
        return SiteConfig.from_coords(np.array(spec, dtype=float))
    raise ConfigError("sites must be 'grid:k', 'uniform:D', a CSV path or a coordinate list")


def _params_from_doc(doc) -> ParamVector:
    meas, cor = doc.get("measure", {}), doc.get("corr", {})
    try:
        return ParamVector(meas["family"], alpha=meas.get("alpha", 1.0), beta=meas.get("beta", 0.0),
                           lam=cor["lambda"], nu=cor.get("nu", 1.0),
                           fixed=frozenset({"alpha", "beta", "lam", "nu"}))
    except KeyError as exc:
        raise ConfigError(f"model is missing {exc}") from None


def cmd_simulate(args) -> int:
    doc = _load_json(args.config)
    seed = resolve_seed(args.seed if args.seed is not None else doc.get("seed"))
    psi = _params_from_doc(doc.get("model", {}))
    sites = _sites_from_config(doc, os.path.dirname(os.path.abspath(args.config)), seed)
    n = int(doc.get("n", 100))
    mode = doc.get("mode", "exact_elliptical")
    cfg = SimulationConfig(n, mode=mode, epsilon=doc.get("epsilon"), rng=RngStream(seed, 0),
                           chunk=int(doc.get("chunk", 1024)), workers=_threads(args))
    run = Run("simulate", args.out, doc, seed, [args.config], args.force)
    p = psi.process(sites)
    z = simulate_exact(p, cfg) if mode == "exact_elliptical" else simulate_truncated(p, cfg)
    write_matrix_csv(run.path("model_scale.csv"), range(n), sites.ids, z)
    with np.errstate(divide="ignore"):
        u = np.where(z > 0, 1.0 / marginal_V(p.measure, np.maximum(z, 1e-300)), np.nan)
    write_matrix_csv(run.path("frechet.csv"), range(n), sites.ids, u)
    write_rows(run.path("sites.csv"), ["id", "x", "y"],
               [[sid, float(x), float(y)] for sid, (x, y) in zip(sites.ids, sites.coords)])
    run.finish()
    return EXIT_OK


def _fit_process(path, sites):
    doc = _load_json(path)
    psi = doc.get("psi_hat")
    if psi is None:
        raise ConfigError(f"{path}: not a fit result")
    pv = ParamVector(psi["family"], alpha=psi["alpha"], beta=psi["beta"], lam=psi["lambda"], nu=psi["nu"],
                     fixed=frozenset({"alpha", "beta", "lam", "nu"}))
    name = f"{doc.get('variant', os.path.splitext(os.path.basename(path))[0])}_{doc.get('fit', '')}".strip("_")
    return name, pv.process(sites)


def cmd_diagnose(args) -> int:
    seed = resolve_seed(args.seed)
    sites = read_sites_csv(args.sites, args.lonlat)
    levels = [float(v) for v in args.levels.split(",")]
    cfg = {"levels": levels, "subset_size": args.subset_size, "n_subsets": args.n_subsets,
           "transform": "none", "lonlat": bool(args.lonlat)}
    run = Run("diagnose", args.out, cfg, seed, [args.data, args.sites, *args.fits], args.force)
    _, ids, vals = read_matrix_csv(args.data)
    u = align_columns(ids, vals, sites)
    models = dict(_fit_process(f, sites) for f in args.fits)
    gen = RngStream(seed, 0).generator()
    k = min(args.subset_size, sites.dim)
    subsets = [sorted(gen.choice(sites.dim, k, replace=False).tolist()) for _ in range(args.n_subsets)]
    rows = model_vs_empirical_report(models, u, subsets, levels, transform="none", rng=seed)
    header = list(rows[0].keys()) if rows else ["subset", "z"]
    write_rows(run.path("theta.csv"), header, [[r[h] for h in header] for r in rows])
    run.finish()
    return EXIT_OK


def cmd_study(args) -> int:
    if args.preset:
        cfg = StudyConfig.preset(args.preset)
        inputs = []
    elif args.config:
        cfg = StudyConfig.from_dict(_load_json(args.config))
        inputs = [args.config]
    else:
        raise ConfigError("give a study config JSON or --preset")
    overrides = {}
    if args.seed is not None or "MAXID_SEED" in os.environ:
        overrides["seed"] = resolve_seed(args.seed)
    if args.replicates:
        overrides["replicates"] = args.replicates
    if overrides:
        cfg = StudyConfig.from_dict({**cfg.to_dict(), **overrides})
    cfg_for_hash = {k: v for k, v in cfg.to_dict().items() if k != "workers"}
    run = Run("study", args.out, cfg_for_hash, cfg.seed, inputs, args.force)
    cfg = StudyConfig.from_dict({**cfg.to_dict(), "workers": _threads(args)})
    report = run_study(cfg)
    for p in report.write(args.out):
        run.outputs.append(p)
    failed = any(c.get("cell_failed") for c in report.cells)
    run.finish("partial" if failed else "ok")
    return EXIT_PARTIAL if failed else EXIT_OK


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="maxid", description="Max-id spatial extreme-value models.")
    p.add_argument("--version", action="version", version=f"maxid {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--seed", type=int, default=None, help="random seed (falls back to MAXID_SEED, then 0)")
        sp.add_argument("--threads", type=int, default=None, help="worker threads (default: available cores)")
        sp.add_argument("--force", action="store_true", help="overwrite even if recorded inputs changed")

    sp = sub.add_parser("blockmax", help="block maxima at several time scales")
    sp.add_argument("input", help="daily CSV: date,<site ids> or date,site,value")
    sp.add_argument("--scales", default=",".join(DEFAULT_SCALES))
    sp.add_argument("--months", default=None, help="comma-separated months kept, season order, e.g. 10,11,12,1,2,3")
    sp.add_argument("--format", choices=("auto", "wide", "long"), default="auto")
    common(sp)
    sp.set_defaults(func=cmd_blockmax)

    sp = sub.add_parser("margins", help="joint GEV fits across time scales")
    sp.add_argument("--input", action="append", default=[], help="label=path, e.g. weekly=weekly.csv (repeatable)")
    common(sp)
    sp.set_defaults(func=cmd_margins)

    sp = sub.add_parser("transform", help="map block maxima to the unit-Fréchet scale")
    sp.add_argument("input")
    sp.add_argument("--margins", required=True)
    sp.add_argument("--scale", required=True)
    sp.add_argument("--inverse", action="store_true", help="map Fréchet values back to the data scale")
    common(sp)
    sp.set_defaults(func=cmd_transform)

    sp = sub.add_parser("fit", help="pairwise-likelihood fits")
    sp.add_argument("data", help="Fréchet-scale CSV: block_index,<site ids>")
    sp.add_argument("--sites", required=True, help="CSV id,x,y")
    sp.add_argument("--model", default=None, help="model JSON; overrides --variants")
    sp.add_argument("--variants", default="schlather,extremal-t,m3,m2")
    sp.add_argument("--fix-nu", type=float, default=None, help="hold the smoothness at this value")
    sp.add_argument("--cutoff", type=float, required=True, help="pair distance cutoff")
    sp.add_argument("--lonlat", action="store_true", help="site coordinates are lon/lat degrees")
    common(sp)
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("simulate", help="simulate a max-id process")
    sp.add_argument("config", help="JSON with model, sites, n, mode")
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("diagnose", help="empirical versus fitted extremal coefficients")
    sp.add_argument("data")
    sp.add_argument("--sites", required=True)
    sp.add_argument("--fits", nargs="+", required=True, help="fit JSON files")
    sp.add_argument("--levels", default="0.5,1,2,5,10,20")
    sp.add_argument("--subset-size", type=int, default=5)
    sp.add_argument("--n-subsets", type=int, default=5)
    sp.add_argument("--lonlat", action="store_true")
    common(sp)
    sp.set_defaults(func=cmd_diagnose)

    sp = sub.add_parser("study", help="simulation studies")
    sp.add_argument("config", nargs="?", default=None, help="study config JSON")
    sp.add_argument("--preset", default=None, help="table1, table1-smoke, table1-full, recovery, recovery-smoke, diagnostics")
    sp.add_argument("--replicates", type=int, default=None)
    common(sp)
    sp.set_defaults(func=cmd_study)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERIC_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
