"""Pairwise-likelihood fitting of max-id process models.

Data are on the unit-Fréchet scale. For a candidate parameter vector each
value ``u`` is mapped to the model scale by solving ``V_m(z) = 1/u``, so the
pair contribution is the copula log density

    -V + log(V1 V2 - V12) - Σ_j {2 log u_j + log v_m(z_j)},

with ``v_m = -V_m'``. The pair terms come from the compiled fixed-rule
kernel, which is smooth in the parameters. Optimization is Nelder–Mead on
unconstrained coordinates (log for ``λ``, ``β`` and M2's ``α``; logit for
``ν/2`` and M1's ``α``) with a three-point multistart over the range.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize, special

from . import _kernels
from .errors import (
    ConfigError,
    DimensionTooLarge,
    InvalidParameters,
    NonConvergence,
    NumericalDensityFailure,
    SingularInformation,
)
from .measures import RadialMeasure
from .model import (
    CorrelationModel,
    MaxIdProcess,
    SiteConfig,
    _log_t_iota,
    _radial_rule,
    corr,
    density_log,
    exponent_V,
    marginal_density,
    marginal_level,
)
from .numerics import (
    MvnIntegrator,
    QuadratureSpec,
    as_generator,
    bivariate_normal_cdf,
    integrate_semiinfinite,
)

__all__ = [
    "ParamVector",
    "PairWeights",
    "PairwiseLikelihood",
    "FitConfig",
    "FitResult",
    "pairwise_nll",
    "fit_model",
    "fit_pairwise",
    "godambe",
    "clic_star",
    "full_loglik",
    "full_nll_oracle",
    "initial_range",
]

PARAM_NAMES = ("alpha", "beta", "lam", "nu")
#: kernel step used while fitting; pair terms agree with the finer default
#: step to about 1e-7 relative and estimates to about 1e-5
FIT_STEP = 0.15
_BIG = 1e300


# ---------------------------------------------------------------------------
# parameters and weights


@dataclass(frozen=True)
class ParamVector:
    """Model parameters with per-component fixed flags.

    Parameters
    ----------
    family : {"M1", "M2", "M3"}
    alpha, beta : float
        Radial measure parameters; ``alpha`` is always fixed for M3.
    lam, nu : float
        Range and smoothness of the correlation model.
    fixed : frozenset of str
        Names of components held fixed.
    """

    family: str
    alpha: float = 1.0
    beta: float = 0.0
    lam: float = 0.5
    nu: float = 1.0
    fixed: frozenset = frozenset()

    def __post_init__(self):
        fam = str(self.family).upper()
        fixed = frozenset(self.fixed)
        unknown = fixed - set(PARAM_NAMES)
        if unknown:
            raise InvalidParameters(f"unknown parameter names {sorted(unknown)}")
        if fam == "M3":
            object.__setattr__(self, "alpha", 1.0)
            fixed = fixed | {"alpha"}
        object.__setattr__(self, "family", fam)
        object.__setattr__(self, "fixed", fixed)
        for name in PARAM_NAMES:
            object.__setattr__(self, name, float(getattr(self, name)))
        # validates the domains
        self.measure()
        self.corr_model()
        if "beta" not in fixed and not self.beta > 0:
            raise InvalidParameters("a free beta must start above 0")
        if fam == "M1" and "alpha" not in fixed and not self.alpha > 0:
            raise InvalidParameters("a free M1 alpha must start above 0")

    @property
    def free(self) -> tuple:
        return tuple(n for n in PARAM_NAMES if n not in self.fixed)

    def measure(self) -> RadialMeasure:
        return RadialMeasure(self.family, self.alpha, self.beta)

    def corr_model(self) -> CorrelationModel:
        return CorrelationModel(self.lam, self.nu)

    def process(self, sites: SiteConfig) -> MaxIdProcess:
        return MaxIdProcess(self.measure(), self.corr_model(), sites)

    def _to(self, name, v):
        if name == "alpha":
            return special.logit(v) if self.family == "M1" else math.log(v)
        if name == "nu":
            return special.logit(v / 2.0)
        return math.log(v)

    def _from(self, name, x):
        if name == "alpha":
            if self.family == "M1":
                return float(min(special.expit(x), 1.0 - 1e-12))
            return math.exp(min(max(x, -20.0), 6.0))
        if name == "nu":
            return float(max(2.0 * special.expit(x), 1e-6))
        if name == "beta":
            return math.exp(min(max(x, -40.0), 4.0))
        return math.exp(min(max(x, -30.0), 30.0))

    def to_internal(self) -> np.ndarray:
        return np.array([self._to(n, getattr(self, n)) for n in self.free])

    def with_internal(self, x) -> "ParamVector":
        vals = {n: self._from(n, float(v)) for n, v in zip(self.free, x)}
        return replace(self, **vals)

    def natural_jacobian(self) -> np.ndarray:
        """``d natural / d internal`` for each free component."""
        out = []
        for n in self.free:
            v = getattr(self, n)
            if n == "alpha" and self.family == "M1":
                out.append(v * (1.0 - v))
            elif n == "nu":
                out.append(v * (1.0 - v / 2.0))
            else:
                out.append(v)
        return np.array(out)

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "alpha": self.alpha,
            "beta": self.beta,
            "lambda": self.lam,
            "nu": self.nu,
            "fixed": sorted(self.fixed),
        }


@dataclass(frozen=True)
class PairWeights:
    """Pair weights ``ω_{j1 j2}``; binary distance cutoffs by default.

    Attributes
    ----------
    cutoff : float
        Distance ``δ``; pairs closer than ``δ`` get weight 1.
    omega : ndarray, shape (D, D)
        Symmetric weight matrix with zero diagonal.
    """

    cutoff: float
    omega: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.omega, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1] or not np.allclose(w, w.T):
            raise ConfigError("weights must form a symmetric matrix")
        if np.any(w < 0):
            raise ConfigError("weights must be nonnegative")
        w = w.copy()
        np.fill_diagonal(w, 0.0)
        if not np.any(w > 0):
            raise ConfigError("no active pairs: increase the cutoff distance")
        object.__setattr__(self, "omega", w)

    @classmethod
    def from_sites(cls, sites: SiteConfig, cutoff: float) -> "PairWeights":
        if not cutoff > 0:
            raise ConfigError("cutoff must be positive")
        return cls(float(cutoff), (sites.distances < cutoff).astype(float))

    @property
    def pairs(self):
        i, j = np.nonzero(np.triu(self.omega, 1) > 0)
        return i, j, self.omega[i, j]

    @property
    def n_active(self) -> int:
        return int(len(self.pairs[0]))

    @property
    def fraction_active(self) -> float:
        d = self.omega.shape[0]
        return self.n_active / (d * (d - 1) / 2)

    def scaled(self, factor: float) -> "PairWeights":
        return PairWeights(self.cutoff, self.omega * factor)

    def summary(self) -> dict:
        return {
            "cutoff": self.cutoff,
            "active_pairs": self.n_active,
            "fraction_active": self.fraction_active,
            "weight_sum": float(self.pairs[2].sum()),
        }


# ---------------------------------------------------------------------------
# pairwise likelihood


class PairwiseLikelihood:
    """Pairwise log-likelihood for fixed data, sites and weights.

    Parameters
    ----------
    data : ndarray, shape (n, D)
        Unit-Fréchet data; NaN marks a missing value and drops the pair
        terms that need it.
    sites : SiteConfig
    weights : PairWeights
    h : float
        Trapezoid step of the compiled kernel.
    scale : {"frechet", "model"}
        ``"frechet"`` maps each value to the model scale through the model's
        own margin, so only the dependence structure is fitted (the copula
        likelihood). ``"model"`` takes ``data`` as draws of the process
        itself, so the margins also inform ``α`` and ``β``.
    workers : int
        Threads evaluating fixed blocks of pair terms; the result does not
        depend on it.
    block : int
        Pair terms per block.
    """

    def __init__(self, data, sites: SiteConfig, weights: PairWeights, h: float = _kernels.STEP, workers: int = 1, block: int = 4096,
                 scale: str = "frechet"):
        if scale not in ("frechet", "model"):
            raise InvalidParameters(f"unknown data scale {scale!r}")
        u = np.asarray(data, dtype=float)
        if u.ndim != 2 or u.shape[1] != sites.dim:
            raise InvalidParameters("data must have one column per site")
        if u.shape[0] < 1:
            raise InvalidParameters("need at least one replicate")
        if np.any(u[np.isfinite(u)] <= 0):
            raise InvalidParameters("data must be positive")
        if weights.omega.shape[0] != sites.dim:
            raise InvalidParameters("weights do not match the sites")
        self.u = u
        self.scale = scale
        self.sites = sites
        self.weights = weights
        self.h = float(h)
        self.workers = int(workers)
        self.block = int(block)
        self.n = u.shape[0]
        pi, pj, pw = weights.pairs
        dist = sites.distances
        rep, c1, c2, w, hh, pid = [], [], [], [], [], []
        ok = np.isfinite(u)
        for k, (a, b, wt) in enumerate(zip(pi, pj, pw)):
            rows = np.nonzero(ok[:, a] & ok[:, b])[0]
            rep.append(rows)
            c1.append(np.full(rows.size, a))
            c2.append(np.full(rows.size, b))
            w.append(np.full(rows.size, wt))
            hh.append(np.full(rows.size, dist[a, b]))
            pid.append(np.full(rows.size, k))
        self.rep = np.concatenate(rep)
        self.c1 = np.concatenate(c1)
        self.c2 = np.concatenate(c2)
        self.w = np.concatenate(w)
        self.dist = np.concatenate(hh)
        self.pair_id = np.concatenate(pid)
        self.pair_sites = np.column_stack([pi, pj])
        self.n_terms = self.rep.size
        self.log_u = np.log(np.where(ok, u, 1.0))
        self._cache_key = None
        self._cache_val = None

    # model-scale transform --------------------------------------------------
    def _transform(self, m: RadialMeasure):
        if self.scale == "model":
            return self.log_u, None
        key = m.kernel_params
        if key == self._cache_key:
            return self._cache_val
        fam, alpha, beta = key
        ok = np.isfinite(self.u)
        lu = self.log_u[ok]
        s_grid = np.linspace(-12.0, 12.0, 97)
        vm = _kernels.marginal_terms(np.exp(s_grid), fam, alpha, beta, self.h)[0]
        with np.errstate(divide="ignore"):
            x = -np.log(vm)  # increasing in s; target is log u
        good = np.isfinite(x)
        s0 = np.interp(lu, x[good], s_grid[good])
        z, lvm, _ = _kernels.frechet_to_model(np.exp(lu), s0, fam, alpha, beta, self.h)
        lz_full = np.full(self.u.shape, np.nan)
        lvm_full = np.full(self.u.shape, np.nan)
        lz_full[ok] = np.log(z)
        lvm_full[ok] = lvm
        self._cache_key = key
        self._cache_val = (lz_full, lvm_full)
        return self._cache_val

    def _pair_block(self, args):
        z1, z2, rho, fam, alpha, beta = args
        return _kernels.bivariate_terms(z1, z2, rho, fam, alpha, beta, self.h)

    def term_values(self, psi: ParamVector) -> np.ndarray:
        """Unweighted log-likelihood of every pair term."""
        m = psi.measure()
        lz, lvm = self._transform(m)
        rho = np.asarray(corr(psi.corr_model(), self.dist), dtype=float)
        z1 = np.exp(lz[self.rep, self.c1])
        z2 = np.exp(lz[self.rep, self.c2])
        fam, alpha, beta = m.kernel_params
        starts = range(0, self.n_terms, self.block)
        jobs = [
            (z1[s : s + self.block], z2[s : s + self.block], rho[s : s + self.block], fam, alpha, beta)
            for s in starts
        ]
        if self.workers > 1 and len(jobs) > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                parts = list(pool.map(self._pair_block, jobs))
        else:
            parts = [self._pair_block(j) for j in jobs]
        v, v1, v2, v12 = np.concatenate(parts, axis=1) if parts else np.zeros((4, 0))
        try:
            ld = density_log(v, v1, v2, v12)
        except NumericalDensityFailure as exc:
            k = exc.replicate
            pair = tuple(int(a) for a in self.pair_sites[self.pair_id[k]])
            raise NumericalDensityFailure(str(exc), pair=pair, replicate=int(self.rep[k])) from None
        if lvm is None:
            return ld
        jac = -2.0 * (self.log_u[self.rep, self.c1] + self.log_u[self.rep, self.c2])
        jac -= lvm[self.rep, self.c1] + lvm[self.rep, self.c2]
        return ld + jac

    def replicate_loglik(self, psi: ParamVector) -> np.ndarray:
        """Weighted pairwise log-likelihood of each replicate, shape ``(n,)``."""
        t = self.term_values(psi)
        return np.bincount(self.rep, weights=self.w * t, minlength=self.n)

    def loglik(self, psi: ParamVector) -> float:
        return float(self.replicate_loglik(psi).sum())

    def nll(self, psi: ParamVector) -> float:
        return -self.loglik(psi)


def pairwise_nll(psi: ParamVector, data, sites: SiteConfig, weights: PairWeights, *, on_failure: str = "raise",
                 scale: str = "frechet") -> float:
    """Negative pairwise log-likelihood of Fréchet-scale data.

    Parameters
    ----------
    on_failure : {"raise", "inf"}
        Whether a failing pair term raises or yields ``+inf``.
    scale : {"frechet", "model"}
        Scale of ``data``; see :class:`PairwiseLikelihood`.

    Raises
    ------
    NumericalDensityFailure
        With the pair and replicate of the first failing term.
    """
    lik = PairwiseLikelihood(data, sites, weights, scale=scale)
    try:
        return lik.nll(psi)
    except NumericalDensityFailure:
        if on_failure == "inf":
            return math.inf
        raise


# ---------------------------------------------------------------------------
# Godambe information and CLIC*


def _finite_difference_scores(f, x0, step):
    """Central differences of a vector function, shape ``(len(f(x0)), p)``."""
    cols = []
    for k in range(len(x0)):
        hk = step * max(1.0, abs(x0[k]))
        e = np.zeros_like(x0)
        e[k] = hk
        cols.append((f(x0 + e) - f(x0 - e)) / (2.0 * hk))
    return np.column_stack(cols)


def _finite_difference_hessian(f, x0, step):
    p = len(x0)
    hs = np.array([step * max(1.0, abs(v)) for v in x0])
    f0 = f(x0)
    hess = np.empty((p, p))
    for a in range(p):
        ea = np.zeros(p)
        ea[a] = hs[a]
        hess[a, a] = (f(x0 + ea) - 2.0 * f0 + f(x0 - ea)) / hs[a] ** 2
        for b in range(a):
            eb = np.zeros(p)
            eb[b] = hs[b]
            val = (f(x0 + ea + eb) - f(x0 + ea - eb) - f(x0 - ea + eb) + f(x0 - ea - eb)) / (
                4.0 * hs[a] * hs[b]
            )
            hess[a, b] = hess[b, a] = val
    return hess


@dataclass
class GodambeResult:
    """Sensitivity ``J``, variability ``K`` and standard errors."""

    J: np.ndarray
    K: np.ndarray
    se_internal: np.ndarray
    std_errors: dict
    names: tuple


def godambe(psi_hat: ParamVector, data=None, sites=None, weights=None, *, lik: PairwiseLikelihood | None = None,
            score_step: float = 1e-4, hess_step: float = 1e-3) -> GodambeResult:
    """Godambe sandwich ``J^{-1} K J^{-1}`` at an estimate.

    ``K`` is the empirical covariance of per-replicate scores and ``J`` the
    negative Hessian of the mean per-replicate log-likelihood, both by
    central differences in the internal coordinates. Standard errors are
    ``sqrt(diag(J^{-1} K J^{-1}) / n)`` mapped to the natural scale by the
    delta method.

    Raises
    ------
    SingularInformation
        If ``J`` cannot be inverted.
    """
    lik = lik or PairwiseLikelihood(data, sites, weights)
    x0 = psi_hat.to_internal()
    names = psi_hat.free
    if x0.size == 0:
        empty = np.zeros((0, 0))
        return GodambeResult(empty, empty, np.zeros(0), {}, names)

    def rep_ll(x):
        return lik.replicate_loglik(psi_hat.with_internal(x))

    def mean_ll(x):
        return float(rep_ll(x).mean())

    scores = _finite_difference_scores(rep_ll, x0, score_step)
    K = np.atleast_2d(np.cov(scores, rowvar=False, bias=True))
    J = -_finite_difference_hessian(mean_ll, x0, hess_step)
    J = 0.5 * (J + J.T)
    if not np.all(np.isfinite(J)) or np.linalg.cond(J) > 1e12:
        raise SingularInformation("the sensitivity matrix is singular")
    Jinv = np.linalg.inv(J)
    cov = Jinv @ K @ Jinv / lik.n
    se_int = np.sqrt(np.maximum(np.diag(cov), 0.0))
    se_nat = np.abs(psi_hat.natural_jacobian()) * se_int
    return GodambeResult(J, K, se_int, dict(zip(names, se_nat.tolist())), names)


def clic_weight_constant(weights: PairWeights) -> float:
    """``C = 2 D^{-1} Σ_{j1<j2} ω_{j1 j2}``."""
    d = weights.omega.shape[0]
    return 2.0 * float(np.triu(weights.omega, 1).sum()) / d


def clic_star(fit: "FitResult", weights: PairWeights, D: int | None = None) -> float:
    """Rescaled composite likelihood information criterion (lower is better).

    ``CLIC* = -2 pl / C + 2 tr(J^{-1} K) / C``.
    """
    if fit.J_hat is None or fit.K_hat is None:
        raise SingularInformation("the fit carries no Godambe matrices")
    c = clic_weight_constant(weights)
    if D is not None and D != weights.omega.shape[0]:
        raise InvalidParameters("D does not match the weights")
    if fit.J_hat.size == 0:
        penalty = 0.0
    else:
        try:
            penalty = float(np.trace(np.linalg.solve(fit.J_hat, fit.K_hat)))
        except np.linalg.LinAlgError as exc:
            raise SingularInformation("the sensitivity matrix is singular") from exc
    return -2.0 * fit.pl_value / c + 2.0 * penalty / c


# ---------------------------------------------------------------------------
# optimization


@dataclass(frozen=True)
class FitConfig:
    """Settings for :func:`fit_pairwise`.

    Parameters
    ----------
    cutoff : float
        Pair distance cutoff ``δ``.
    fixed : dict
        Components held at given natural values in every fit, e.g.
        ``{"nu": 1.0}`` or ``{"alpha": 1.0}``.
    init : dict
        Starting natural values; the range defaults to
        :func:`initial_range`.
    starts : tuple of float
        Multipliers of the starting range.
    loose_xatol, xatol : float
        Simplex diameters (internal coordinates) ending the exploratory
        runs and the final polish.
    max_evals : int
        Likelihood evaluations allowed per Nelder–Mead run.
    godambe : bool
        Whether to compute ``J``, ``K``, standard errors and CLIC*.
    h : float
        Kernel trapezoid step.
    workers : int
        Threads for the pair terms.
    scale : {"frechet", "model"}
        Scale of the data; see :class:`PairwiseLikelihood`.
    """

    cutoff: float = 0.5
    fixed: dict = field(default_factory=dict)
    init: dict = field(default_factory=dict)
    starts: tuple = (0.5, 1.0, 2.0)
    loose_xatol: float = 5e-2
    xatol: float = 1e-6
    max_evals: int = 1500
    godambe: bool = True
    h: float = FIT_STEP
    workers: int = 1
    scale: str = "frechet"

    def __post_init__(self):
        if not self.cutoff > 0:
            raise ConfigError("cutoff must be positive")
        if self.scale not in ("frechet", "model"):
            raise ConfigError(f"unknown data scale {self.scale!r}")
        bad = set(self.fixed) - set(PARAM_NAMES)
        if bad:
            raise ConfigError(f"unknown fixed parameters {sorted(bad)}")

    def to_dict(self) -> dict:
        return {
            "cutoff": self.cutoff,
            "fixed": dict(self.fixed),
            "init": dict(self.init),
            "starts": list(self.starts),
            "loose_xatol": self.loose_xatol,
            "xatol": self.xatol,
            "max_evals": self.max_evals,
            "godambe": self.godambe,
            "h": self.h,
            "scale": self.scale,
        }


@dataclass
class FitResult:
    """Outcome of one pairwise-likelihood maximization.

    Attributes
    ----------
    psi_hat : ParamVector
    pl_value : float
        Maximized pairwise log-likelihood.
    J_hat, K_hat : ndarray or None
        Godambe matrices in internal coordinates.
    std_errors : dict
        Natural-scale standard errors of free components.
    ci : dict
        Natural-scale 95% Wald intervals.
    clic_star : float or None
    converged : bool
    n_function_evals : int
    boundary : dict
        Components whose estimate sits at a boundary (``β̂ ≈ 0``), where the
        Wald intervals are unreliable.
    """

    psi_hat: ParamVector
    pl_value: float
    J_hat: np.ndarray | None = None
    K_hat: np.ndarray | None = None
    std_errors: dict = field(default_factory=dict)
    ci: dict = field(default_factory=dict)
    clic_star: float | None = None
    converged: bool = False
    n_function_evals: int = 0
    boundary: dict = field(default_factory=dict)
    message: str = ""

    def to_dict(self) -> dict:
        return {
            "psi_hat": self.psi_hat.to_dict(),
            "pl_value": self.pl_value,
            "J_hat": None if self.J_hat is None else self.J_hat.tolist(),
            "K_hat": None if self.K_hat is None else self.K_hat.tolist(),
            "std_errors": self.std_errors,
            "ci": {k: list(v) for k, v in self.ci.items()},
            "clic_star": self.clic_star,
            "converged": self.converged,
            "n_function_evals": self.n_function_evals,
            "boundary": self.boundary,
            "message": self.message,
        }


def initial_range(data, sites: SiteConfig, nu: float = 1.0) -> float:
    """Range guess from pairwise correlations of log Fréchet data.

    Each pair with sample correlation ``c ∈ (0, 1)`` of ``log u`` suggests
    ``λ = h / (-log c)^{1/ν}``; the median suggestion is returned, clipped
    to ``[0.01, 10]`` times the largest site distance.
    """
    lu = np.log(np.asarray(data, dtype=float))
    dist = sites.distances
    dmax = float(dist.max()) if dist.size > 1 else 1.0
    guesses = []
    for a, b in itertools.combinations(range(sites.dim), 2):
        ok = np.isfinite(lu[:, a]) & np.isfinite(lu[:, b])
        if ok.sum() < 3 or dist[a, b] <= 0:
            continue
        c = np.corrcoef(lu[ok, a], lu[ok, b])[0, 1]
        if 0.0 < c < 1.0:
            guesses.append(dist[a, b] / (-math.log(c)) ** (1.0 / nu))
    lam = float(np.median(guesses)) if guesses else 0.5 * dmax
    return float(np.clip(lam, 0.01 * dmax, 10.0 * dmax))


def _nelder_mead(obj, x0, xatol, max_evals, scale=0.3):
    p = len(x0)
    sim = np.vstack([x0] + [x0 + scale * np.eye(p)[k] for k in range(p)])
    res = optimize.minimize(
        obj,
        x0,
        method="Nelder-Mead",
        options={"initial_simplex": sim, "xatol": xatol, "fatol": np.inf, "maxfev": max_evals},
    )
    return res


def fit_model(lik: PairwiseLikelihood, psi0: ParamVector, config: FitConfig, extra_starts=()) -> FitResult:
    """Maximize the pairwise likelihood over the free components of ``psi0``.

    Runs a loose Nelder–Mead search from each start (the range scaled by
    ``config.starts``, plus any ``extra_starts``), then polishes the best
    point with restarted Nelder–Mead until the simplex diameter falls below
    ``config.xatol`` and a restart no longer improves the likelihood.
    """
    n_evals = 0

    def obj(x):
        nonlocal n_evals
        n_evals += 1
        try:
            val = lik.nll(psi0.with_internal(x))
        except NumericalDensityFailure:
            return _BIG
        return val if np.isfinite(val) else _BIG

    if not psi0.free:
        val = lik.loglik(psi0)
        return FitResult(psi0, val, converged=True, n_function_evals=1)
    starts = [replace(psi0, lam=psi0.lam * f) for f in config.starts] + list(extra_starts)
    best = None
    for st in starts:
        res = _nelder_mead(obj, st.to_internal(), config.loose_xatol, config.max_evals)
        if best is None or res.fun < best.fun:
            best = res
    x, fx = best.x, best.fun
    converged = False
    for attempt in range(5):
        # later restarts only confirm the optimum, so a small simplex suffices
        scale = 1e-2 if attempt == 0 else 1e-4
        res = _nelder_mead(obj, x, config.xatol, config.max_evals, scale=scale)
        improved = res.fun < fx - 1e-9 * max(1.0, abs(fx))
        if res.fun <= fx:
            x, fx = res.x, res.fun
        converged = bool(res.success)
        if not improved and converged:
            break
    psi_hat = psi0.with_internal(x)
    if fx >= _BIG:
        raise NonConvergence("pairwise likelihood is not finite at any start")
    out = FitResult(psi_hat, -fx, converged=converged, n_function_evals=n_evals)
    if psi_hat.free and "beta" in psi_hat.free:
        out.boundary["beta"] = bool(psi_hat.beta < 1e-3)
    if config.godambe:
        try:
            g = godambe(psi_hat, lik=lik)
        except SingularInformation as exc:
            out.message = str(exc)
        else:
            out.J_hat, out.K_hat = g.J, g.K
            out.std_errors = g.std_errors
            out.ci = {
                k: (getattr(psi_hat, k) - 1.959964 * s, getattr(psi_hat, k) + 1.959964 * s)
                for k, s in g.std_errors.items()
            }
            out.clic_star = clic_star(out, lik.weights)
    return out


def fit_pairwise(data, sites: SiteConfig, family: str, config: FitConfig | None = None,
                 weights: PairWeights | None = None):
    """Fit with ``β`` free and with ``β = 0`` fixed.

    Parameters
    ----------
    data : ndarray, shape (n, D)
        Unit-Fréchet data, or model-scale data with ``config.scale="model"``.
    sites : SiteConfig
    family : {"M1", "M2", "M3"}
    config : FitConfig, optional
    weights : PairWeights, optional
        Defaults to the binary cutoff weights of ``config.cutoff``.

    Returns
    -------
    (FitResult, FitResult)
        The ``β``-free fit and the ``β = 0`` fit; when ``config.fixed`` holds
        ``beta``, both entries are the fit at that value. The free fit also starts
        from the ``β = 0`` optimum with a small ``β``, so its likelihood is
        never below the nested fit's beyond optimizer tolerance.
    """
    config = config or FitConfig()
    data = np.asarray(data, dtype=float)
    if data.shape[0] < 2:
        raise InvalidParameters("need at least two replicates")
    weights = weights or PairWeights.from_sites(sites, config.cutoff)
    lik = PairwiseLikelihood(data, sites, weights, h=config.h, workers=config.workers, scale=config.scale)
    fixed_vals = dict(config.fixed)
    nu0 = fixed_vals.get("nu", config.init.get("nu", 1.0))
    lam0 = fixed_vals.get("lam", config.init.get("lam", initial_range(data, sites, nu0)))
    default_alpha = 0.5 if family.upper() == "M1" else 1.0
    base = dict(
        alpha=fixed_vals.get("alpha", config.init.get("alpha", default_alpha)),
        lam=lam0,
        nu=nu0,
    )
    fixed_names = set(fixed_vals) - {"beta"}
    psi_fixed = ParamVector(family, beta=fixed_vals.get("beta", 0.0), fixed=frozenset(fixed_names | {"beta"}), **base)
    fit0 = fit_model(lik, psi_fixed, config)
    if "beta" in fixed_vals:
        return fit0, fit0
    beta0 = config.init.get("beta", 0.5)
    psi_free = ParamVector(family, beta=beta0, fixed=frozenset(fixed_names), **base)
    from_nested = replace(fit0.psi_hat, beta=0.05, fixed=psi_free.fixed)
    fit1 = fit_model(lik, psi_free, config, extra_starts=[from_nested])
    return fit1, fit0


# ---------------------------------------------------------------------------
# full likelihood oracle for small D


def _set_partitions(items):
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        for k in range(len(part)):
            yield part[:k] + [[first] + part[k]] + part[k + 1 :]
        yield [[first]] + part


_ORACLE_SPEC = QuadratureSpec(rel_tol=1e-10, abs_tol=1e-300, max_subdivisions=2000)


def _trivariate_cdf(b, R, n_nodes=48):
    """``Φ_3(b; R)`` for rows of ``b`` by Gauss–Legendre over the first coordinate."""
    b = np.atleast_2d(b)
    x, w = np.polynomial.legendre.leggauss(n_nodes)
    lo = -9.0
    hi = np.minimum(b[:, 0], 9.0)
    out = np.zeros(len(b))
    live = hi > lo
    if not np.any(live):
        return out
    bl = b[live]
    hl = hi[live]
    xs = 0.5 * (hl[:, None] - lo) * x[None, :] + 0.5 * (hl[:, None] + lo)
    ws = 0.5 * (hl[:, None] - lo) * w[None, :]
    r12, r13, r23 = R[0, 1], R[0, 2], R[1, 2]
    s2 = math.sqrt(max(1.0 - r12**2, 1e-300))
    s3 = math.sqrt(max(1.0 - r13**2, 1e-300))
    rc = (r23 - r12 * r13) / (s2 * s3)
    rc = min(max(rc, -1.0), 1.0)
    a2 = (bl[:, 1, None] - r12 * xs) / s2
    a3 = (bl[:, 2, None] - r13 * xs) / s3
    inner = bivariate_normal_cdf(a2, a3, rc)
    pdf = np.exp(-0.5 * xs**2) / math.sqrt(2.0 * math.pi)
    out[live] = np.sum(ws * pdf * inner, axis=1)
    return out


class _GaussianBlocks:
    """Gaussian densities and conditional CDFs for partial derivatives of ``V``."""

    def __init__(self, sigma, rng):
        self.sigma = sigma
        self.d = sigma.shape[0]
        self.gen = as_generator(rng)
        self._integ = {}

    def cdf(self, b, idx, cov):
        """``Φ(b; cov)`` for rows of ``b`` over coordinates ``idx``."""
        k = len(idx)
        if k == 0:
            return np.ones(len(b))
        sd = np.sqrt(np.diag(cov))
        bs = b / sd[None, :]
        R = cov / np.outer(sd, sd)
        if k == 1:
            return special.ndtr(bs[:, 0])
        if k == 2:
            return bivariate_normal_cdf(bs[:, 0], bs[:, 1], R[0, 1])
        if k == 3:
            return _trivariate_cdf(bs, R)
        key = tuple(idx)
        if key not in self._integ:
            self._integ[key] = MvnIntegrator(R, np.zeros(k), self.gen, n_shifts=16)
        return self._integ[key].estimates(bs, 8192).mean(axis=0)

    def partial(self, block, z, m):
        """``V_B = ∂^{|B|} V / ∂z_B`` by one-dimensional radial quadrature."""
        d = self.d
        z = np.asarray(z, dtype=float)
        rest = [j for j in range(d) if j not in block]
        S = self.sigma
        if not block:
            def logf(r):
                r = np.atleast_1d(r)
                with np.errstate(all="ignore"):
                    b = z[None, :] / r[:, None]
                    tails = special.ndtr(-b)
                    # union bounds tame the cancellation in 1 - Φ at small r
                    q = np.clip(1.0 - self.cdf(b, list(range(d)), S), tails.max(axis=1), tails.sum(axis=1))
                    return np.log(q) + _log_t_iota(m, np.log(r))[1] - np.log(r)

            return integrate_semiinfinite(logf, _ORACLE_SPEC, log=True)
        B = list(block)
        Sbb = S[np.ix_(B, B)]
        Sbb_inv = np.linalg.inv(Sbb)
        _, logdet = np.linalg.slogdet(Sbb)
        zb = z[B]
        quad = float(zb @ Sbb_inv @ zb)
        if rest:
            Scb = S[np.ix_(rest, B)]
            cond_cov = S[np.ix_(rest, rest)] - Scb @ Sbb_inv @ Scb.T
            shift = z[rest] - Scb @ Sbb_inv @ zb
        k = len(B)

        def logf(r):
            r = np.atleast_1d(r)
            lr = np.log(r)
            with np.errstate(all="ignore"):
                out = -0.5 * quad / r**2 - 0.5 * logdet - 0.5 * k * math.log(2.0 * math.pi) - k * lr
                if rest:
                    out = out + np.log(self.cdf(shift[None, :] / r[:, None], rest, cond_cov))
                return out + _log_t_iota(m, lr)[1] - lr

        return -integrate_semiinfinite(logf, _ORACLE_SPEC, log=True)


def full_loglik(p: MaxIdProcess, z, rng=0) -> float:
    """Full ``D``-variate log density at model-scale ``z`` for ``D ≤ 5``.

    Sums over all set partitions ``π`` of the sites:
    ``log[exp(-V) Σ_π Π_{B ∈ π} (-V_B)]``. Partial derivatives use the
    Gaussian density of the differentiated block times the conditional
    Gaussian CDF of the rest, integrated over the radius.
    """
    d = p.dim
    if d > 5:
        raise DimensionTooLarge("the full likelihood oracle supports D <= 5")
    z = np.asarray(z, dtype=float)
    g = _GaussianBlocks(p.sigma, rng)
    cache = {}

    def vb(block):
        key = tuple(sorted(block))
        if key not in cache:
            cache[key] = g.partial(key, z, p.measure)
        return cache[key]

    total = 0.0
    for part in _set_partitions(range(d)):
        term = 1.0
        for block in part:
            term *= -vb(block)
        total += term
    if not total > 0:
        raise NumericalDensityFailure("full density is not positive")
    return -vb(()) + math.log(total)


def full_nll_oracle(psi: ParamVector, data, sites: SiteConfig, rng=0) -> float:
    """Negative full log-likelihood of Fréchet-scale data, ``D ≤ 5``.

    Testing oracle only: every replicate is mapped to the model scale with
    ``V_m(z) = 1/u`` and contributes its full log density plus the Jacobian
    ``-Σ_j {2 log u_j + log v_m(z_j)}``.
    """
    u = np.atleast_2d(np.asarray(data, dtype=float))
    d = u.shape[1]
    if d > 5:
        raise DimensionTooLarge("the full likelihood oracle supports D <= 5")
    p = psi.process(sites)
    m = p.measure
    total = 0.0
    for row in u:
        z = np.array([marginal_level(m, 1.0 / x) for x in row])
        jac = -np.sum(2.0 * np.log(row) + np.log(marginal_density(m, z)))
        total += full_loglik(p, z, rng) + jac
    return -total
