"""Max-id processes with Gaussian spectral profiles.

A process ``Z(s) = max_i R_i W_i(s)`` is defined by a radial measure for the
storm amplitudes ``R_i``, a powered-exponential correlation model for the
standard Gaussian profiles ``W_i`` and a finite set of sites. Its law is
``Pr(Z ≤ z) = exp{-V(z)}`` with exponent function

    V(z) = ∫ {1 - Φ_D(z / r; Σ)} f(r) dr.

In two dimensions ``V`` and its partial derivatives reduce, after an
integration by parts in ``r``, to one-dimensional integrals of smooth
positive integrands that are evaluated by adaptive quadrature on
``t = log r``. In higher dimensions the Gaussian orthant probability is
estimated by randomized quasi-Monte Carlo with common random numbers across
the radial nodes, so the radial rule sees a smooth integrand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special

from . import _kernels
from .errors import InvalidParameters, NonConvergence, NumericalDensityFailure
from .measures import FiniteMeasureSpec, RadialMeasure, log_intensity, log_tail_mass
from .numerics import (
    MvnIntegrator,
    QuadratureSpec,
    as_generator,
    bivariate_normal_cdf,
    cholesky_with_jitter,
    integrate_semiinfinite,
    mvn_cdf,
    std_normal_cdf,
)

__all__ = [
    "CorrelationModel",
    "SiteConfig",
    "MaxIdProcess",
    "DependenceSummary",
    "corr",
    "exponent_V",
    "exponent_V_partial",
    "bivariate_terms",
    "bivariate_loglik",
    "marginal_V",
    "marginal_density",
    "marginal_level",
    "marginal_quantile",
    "theta_level",
    "chi_level",
    "eta_coefficient",
    "joint_exceed_prob",
    "finite_model_cdf",
    "finite_model_bivariate_loglik",
]

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
#: default quadrature accuracy for the scalar exponent-function integrals
DEFAULT_SPEC = QuadratureSpec(rel_tol=1e-11, abs_tol=1e-300, max_subdivisions=2000)
#: relative size of negative ``V1 V2 - V12`` accepted as quadrature noise
DENSITY_NOISE = 1e-12


# ---------------------------------------------------------------------------
# correlation model and sites


@dataclass(frozen=True)
class CorrelationModel:
    """Powered-exponential correlation ``ρ(h) = exp{-(h/λ)^ν}``.

    Parameters
    ----------
    lam : float
        Range ``λ > 0`` in site-coordinate units.
    nu : float
        Smoothness ``ν ∈ (0, 2]``.
    """

    lam: float
    nu: float = 1.0

    def __post_init__(self):
        lam, nu = float(self.lam), float(self.nu)
        if not (math.isfinite(lam) and lam > 0):
            raise InvalidParameters(f"range must be positive, got {lam}")
        if not (0.0 < nu <= 2.0):
            raise InvalidParameters(f"smoothness must lie in (0, 2], got {nu}")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "nu", nu)

    def to_dict(self) -> dict:
        return {"family": "powered_exponential", "lambda": self.lam, "nu": self.nu}

    @classmethod
    def from_dict(cls, d: dict) -> "CorrelationModel":
        fam = d.get("family", "powered_exponential")
        if fam != "powered_exponential":
            raise InvalidParameters(f"unsupported correlation family {fam!r}")
        return cls(d["lambda"], d.get("nu", 1.0))


def corr(cm: CorrelationModel, h):
    """Correlation at distance ``h ≥ 0``."""
    h = np.asarray(h, dtype=float)
    if np.any(h < 0):
        raise InvalidParameters("distances must be nonnegative")
    out = np.exp(-((h / cm.lam) ** cm.nu))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class SiteConfig:
    """Sites in the plane.

    Parameters
    ----------
    ids : sequence of str
    coords : array_like, shape (D, 2)
    """

    ids: tuple
    coords: np.ndarray

    def __post_init__(self):
        coords = np.atleast_2d(np.asarray(self.coords, dtype=float))
        ids = tuple(str(i) for i in self.ids)
        if coords.shape != (len(ids), 2):
            raise InvalidParameters("coords must have shape (len(ids), 2)")
        if len(set(ids)) != len(ids):
            raise InvalidParameters("site ids must be unique")
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "ids", ids)

    @property
    def dim(self) -> int:
        return len(self.ids)

    @property
    def distances(self) -> np.ndarray:
        diff = self.coords[:, None, :] - self.coords[None, :, :]
        return np.sqrt((diff**2).sum(axis=-1))

    def subset(self, idx) -> "SiteConfig":
        idx = list(idx)
        return SiteConfig(tuple(self.ids[i] for i in idx), self.coords[idx])

    @classmethod
    def from_coords(cls, coords, prefix: str = "s") -> "SiteConfig":
        coords = np.atleast_2d(np.asarray(coords, dtype=float))
        return cls(tuple(f"{prefix}{i + 1}" for i in range(len(coords))), coords)

    @classmethod
    def grid(cls, k: int, lo: float = 0.0, hi: float = 1.0) -> "SiteConfig":
        """Regular ``k × k`` grid on ``[lo, hi]²``."""
        g = np.linspace(lo, hi, k)
        xx, yy = np.meshgrid(g, g, indexing="ij")
        return cls.from_coords(np.column_stack([xx.ravel(), yy.ravel()]), prefix="g")

    @classmethod
    def uniform(cls, dim: int, rng=None) -> "SiteConfig":
        """``dim`` sites drawn uniformly on the unit square."""
        return cls.from_coords(as_generator(rng).random((dim, 2)))


@dataclass(frozen=True)
class MaxIdProcess:
    """Radial measure, correlation model and sites.

    Attributes
    ----------
    measure : RadialMeasure
    corr_model : CorrelationModel
    sites : SiteConfig
    sigma : ndarray
        Correlation matrix of the Gaussian profile at the sites.
    """

    measure: RadialMeasure
    corr_model: CorrelationModel
    sites: SiteConfig
    sigma: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        sigma = np.asarray(corr(self.corr_model, self.sites.distances), dtype=float)
        sigma = np.atleast_2d(sigma)
        cholesky_with_jitter(sigma)
        object.__setattr__(self, "sigma", sigma)

    @property
    def dim(self) -> int:
        return self.sites.dim

    def with_sites(self, sites: SiteConfig) -> "MaxIdProcess":
        return MaxIdProcess(self.measure, self.corr_model, sites)

    def to_dict(self) -> dict:
        return {"measure": self.measure.to_dict(), "corr": self.corr_model.to_dict()}


@dataclass(frozen=True)
class DependenceSummary:
    """Dependence summaries at one Fréchet level.

    Attributes
    ----------
    level : float
        Unit-Fréchet level ``z``.
    theta : float
        Extremal coefficient at ``z``.
    chi : float
        ``Pr(Z1 > z* | Z2 > z*)`` on standardized margins.
    chi_proxy : float
        ``2 - θ2(z)``.
    """

    level: float
    theta: float
    chi: float
    chi_proxy: float


def _measure_of(p) -> RadialMeasure:
    return p.measure if isinstance(p, MaxIdProcess) else p


# ---------------------------------------------------------------------------
# radial integrals by adaptive quadrature


def _log_t_iota(m: RadialMeasure, t):
    """``log T(e^t)`` and ``log ι(t) = log{f(e^t) e^t}``."""
    r = np.exp(t)
    with np.errstate(all="ignore"):
        return log_tail_mass(m, r), log_intensity(m, r) + t


def _integrate_t(logg, spec):
    """``∫ exp{logg(t)} dt`` over the real line."""

    def logf(r):
        with np.errstate(divide="ignore"):
            t = np.log(r)
        return logg(t) - t

    return integrate_semiinfinite(logf, spec, log=True)


def marginal_V(p, z, spec: QuadratureSpec | None = None):
    """Marginal exponent ``V_m(z) = -log Pr(Z_j ≤ z)``.

    Parameters
    ----------
    p : MaxIdProcess or RadialMeasure
    z : float or array_like
        Model-scale levels, positive.

    Returns
    -------
    float or ndarray
    """
    m = _measure_of(p)
    spec = spec or DEFAULT_SPEC
    zs = np.asarray(z, dtype=float)
    if np.any(zs <= 0):
        raise InvalidParameters("levels must be positive")
    out = np.empty(zs.shape)
    for idx, zi in np.ndenumerate(zs):
        lz = math.log(zi)

        def logg(t, lz=lz):
            lt, _ = _log_t_iota(m, t)
            lx = lz - t
            return lx - 0.5 * np.exp(2.0 * lx) + lt - _LOG_SQRT_2PI

        out[idx] = _integrate_t(logg, spec)
    return out if out.ndim else float(out)


def marginal_density(p, z, spec: QuadratureSpec | None = None):
    """Marginal ``v_m(z) = -dV_m/dz``, so the density is ``v_m e^{-V_m}``."""
    m = _measure_of(p)
    spec = spec or DEFAULT_SPEC
    zs = np.asarray(z, dtype=float)
    out = np.empty(zs.shape)
    for idx, zi in np.ndenumerate(zs):
        lz = math.log(zi)

        def logg(t, lz=lz):
            _, li = _log_t_iota(m, t)
            return -0.5 * np.exp(2.0 * (lz - t)) - t + li - _LOG_SQRT_2PI

        out[idx] = _integrate_t(logg, spec)
    return out if out.ndim else float(out)


def marginal_level(p, target_v: float, spec: QuadratureSpec | None = None) -> float:
    """Level ``z`` with ``V_m(z) = target_v``.

    Bracketed root finding on ``log z``; ``V_m`` is strictly decreasing.
    """
    if not target_v > 0:
        raise InvalidParameters("target exponent must be positive")
    m = _measure_of(p)
    lv = math.log(target_v)

    def f(s):
        return math.log(marginal_V(m, math.exp(s), spec)) - lv

    lo, hi = -1.0, 1.0
    # power-law start: V_m(z) ~ z^{-a} with a the marginal index
    for _ in range(200):
        if f(lo) > 0:
            break
        lo -= 2.0
    else:
        raise NonConvergence("could not bracket the marginal level from below")
    for _ in range(200):
        if f(hi) < 0:
            break
        hi += 2.0
    else:
        raise NonConvergence("could not bracket the marginal level from above")
    s = optimize.brentq(f, lo, hi, xtol=1e-14, rtol=1e-14, maxiter=200)
    return math.exp(s)


def marginal_quantile(p, prob: float, spec: QuadratureSpec | None = None) -> float:
    """Level ``z`` with ``Pr(Z_j ≤ z) = prob``."""
    if not 0.0 < prob < 1.0:
        raise InvalidParameters("prob must lie in (0, 1)")
    return marginal_level(p, -math.log(prob), spec)


def _pair_geometry(z1, z2, rho):
    rho = min(float(rho), 1.0 - 1e-12)
    s = math.sqrt((1.0 - rho) * (1.0 + rho))
    k1 = (z2 / z1 - rho) / s
    k2 = (z1 / z2 - rho) / s
    q = (z1 * z1 - 2.0 * rho * z1 * z2 + z2 * z2) / (s * s)
    return rho, s, k1, k2, q


def _pair_V(m, z1, z2, rho, spec):
    _, _, k1, k2, _ = _pair_geometry(z1, z2, rho)
    lz1, lz2 = math.log(z1), math.log(z2)

    def logg(t):
        lt, _ = _log_t_iota(m, t)
        l1, l2 = lz1 - t, lz2 - t
        a1 = l1 - 0.5 * np.exp(2.0 * l1) + special.log_ndtr(k1 * np.exp(l1))
        a2 = l2 - 0.5 * np.exp(2.0 * l2) + special.log_ndtr(k2 * np.exp(l2))
        return np.logaddexp(a1, a2) + lt - _LOG_SQRT_2PI

    return _integrate_t(logg, spec)


def _pair_V1(m, z1, z2, rho, spec):
    _, _, k1, _, _ = _pair_geometry(z1, z2, rho)
    lz1 = math.log(z1)

    def logg(t):
        _, li = _log_t_iota(m, t)
        l1 = lz1 - t
        return -0.5 * np.exp(2.0 * l1) + special.log_ndtr(k1 * np.exp(l1)) - t + li - _LOG_SQRT_2PI

    return -_integrate_t(logg, spec)


def _pair_V12(m, z1, z2, rho, spec):
    _, s, _, _, q = _pair_geometry(z1, z2, rho)

    def logg(t):
        _, li = _log_t_iota(m, t)
        return -0.5 * q * np.exp(-2.0 * t) - 2.0 * t + li

    return -_integrate_t(logg, spec) / (2.0 * math.pi * s)


def _pair_rho(p, pair):
    if isinstance(p, MaxIdProcess):
        j1, j2 = pair
        return float(p.sigma[j1, j2])
    raise TypeError("a MaxIdProcess is required")


def exponent_V_partial(p: MaxIdProcess, z, which="1", pair=(0, 1), spec: QuadratureSpec | None = None):
    """Partial derivatives of the bivariate exponent function.

    Parameters
    ----------
    p : MaxIdProcess
    z : (float, float)
        Model-scale levels of the two sites.
    which : {"1", "2", "both"}
        ``V1 = ∂V/∂z1``, ``V2 = ∂V/∂z2`` or ``V12 = ∂²V/∂z1∂z2``.
    pair : (int, int)
        Site indices of the pair within ``p``.

    Returns
    -------
    float
    """
    m = p.measure
    spec = spec or DEFAULT_SPEC
    z1, z2 = float(z[0]), float(z[1])
    if z1 <= 0 or z2 <= 0:
        raise InvalidParameters("levels must be positive")
    rho = _pair_rho(p, pair)
    which = str(which)
    if which == "1":
        return _pair_V1(m, z1, z2, rho, spec)
    if which == "2":
        return _pair_V1(m, z2, z1, rho, spec)
    if which in ("both", "12"):
        return _pair_V12(m, z1, z2, rho, spec)
    raise ValueError(f"unknown derivative {which!r}")


# ---------------------------------------------------------------------------
# exponent function in D dimensions


def _radial_rule(m: RadialMeasure, z, panel_res=1.5, order=8):
    """Composite Gauss–Legendre nodes in ``t`` adapted to the integrand.

    The rule is built on the envelope ``Σ_j Φ̄(z_j e^{-t}) ι(t)``, which
    bounds the exponent-function integrand within a factor ``D``. Panel
    edges are equally spaced in ``∫ sqrt(curvature) dt`` so every panel
    spans about ``panel_res`` local curvature scales.
    """
    z = np.asarray(z, dtype=float)
    lz = np.log(z)

    def env(t):
        t = np.atleast_1d(t)
        lx = lz[None, :] - t[:, None]
        lsf = special.log_ndtr(-np.exp(lx))
        _, li = _log_t_iota(m, t)
        with np.errstate(invalid="ignore"):
            out = special.logsumexp(lsf, axis=1) + li
        return np.where(np.isnan(out), -np.inf, out)

    step = 0.02
    c = float(np.mean(lz))
    lo, hi = c - 20.0, c + 20.0
    for _ in range(60):
        t = np.arange(lo, hi + step / 2, step)
        g = env(t)
        peak = np.max(g)
        if not np.isfinite(peak):
            raise NonConvergence("exponent-function integrand vanishes everywhere")
        moved = False
        if g[0] > peak - 40.0:
            lo -= 20.0
            moved = True
        if g[-1] > peak - 40.0:
            hi += 20.0
            moved = True
        if not moved:
            break
    else:
        raise NonConvergence("exponent-function integrand does not decay")
    keep = np.nonzero(g > peak - 40.0)[0]
    i0, i1 = max(keep[0] - 1, 0), min(keep[-1] + 1, len(t) - 1)
    t, g = t[i0 : i1 + 1], g[i0 : i1 + 1]
    curv = np.zeros_like(g)
    with np.errstate(invalid="ignore"):
        curv[1:-1] = -(g[2:] - 2.0 * g[1:-1] + g[:-2]) / step**2
    curv = np.where(np.isfinite(curv) & (g > peak - 30.0), np.maximum(curv, 0.0), 0.0)
    width = t[-1] - t[0]
    dens = np.sqrt(curv + (8.0 / width) ** 2)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * step)])
    n_pan = max(int(math.ceil(cum[-1] / panel_res)), 4)
    edges = np.interp(np.linspace(0.0, cum[-1], n_pan + 1), cum, t)
    x, w = np.polynomial.legendre.leggauss(order)
    a, b = edges[:-1, None], edges[1:, None]
    nodes = (0.5 * (b - a) * x[None, :] + 0.5 * (a + b)).ravel()
    weights = (0.5 * (b - a) * w[None, :]).ravel()
    return nodes, weights


def _exponent_V_qmc(m, sigma, z, rng, target_err, max_points=2**16):
    """``V`` for ``D ≥ 3`` with its Monte-Carlo standard error."""
    nodes, weights = _radial_rule(m, z)
    _, li = _log_t_iota(m, nodes)
    wi = weights * np.exp(li)
    uppers = np.asarray(z, dtype=float)[None, :] * np.exp(-nodes)[:, None]
    ref = np.asarray(z, dtype=float) / np.exp(nodes[np.argmax(wi)])
    integ = MvnIntegrator(sigma, ref, as_generator(rng))
    n, total = 0, 0.0
    n_new = 128
    while True:
        total = total + integ.sums(uppers, n, n_new)
        n = n_new
        per_shift = (1.0 - total / n) @ wi
        val = float(per_shift.mean())
        se = float(per_shift.std(ddof=1) / math.sqrt(len(per_shift)))
        if 2.576 * se <= target_err * val or n >= max_points:
            return val, se
        n_new = 2 * n


def exponent_V(
    p: MaxIdProcess,
    z,
    spec: QuadratureSpec | None = None,
    *,
    rng=None,
    target_err: float = 5e-3,
    full_output: bool = False,
):
    """Exponent function ``V(z) = -log Pr(Z ≤ z)``.

    Parameters
    ----------
    p : MaxIdProcess
    z : array_like, shape (D,)
        Model-scale levels at the sites of ``p``.
    spec : QuadratureSpec, optional
        Radial quadrature accuracy for ``D ≤ 2``.
    rng : RngStream, Generator, int or None
        Randomization for ``D ≥ 3``.
    target_err : float
        Relative 99% error target for ``D ≥ 3``: sampling stops once
        ``2.576 SE ≤ target_err V``.
    full_output : bool
        Also return the standard error (0 for ``D ≤ 2``).

    Returns
    -------
    float, or (float, float) with ``full_output``
    """
    z = np.asarray(z, dtype=float).ravel()
    if z.size != p.dim:
        raise InvalidParameters(f"expected {p.dim} levels, got {z.size}")
    if np.any(z <= 0):
        raise InvalidParameters("levels must be positive")
    spec = spec or DEFAULT_SPEC
    if z.size == 1:
        val, se = marginal_V(p.measure, z[0], spec), 0.0
    elif z.size == 2:
        val, se = _pair_V(p.measure, z[0], z[1], p.sigma[0, 1], spec), 0.0
    else:
        val, se = _exponent_V_qmc(p.measure, p.sigma, z, rng, target_err)
    return (val, se) if full_output else val


# ---------------------------------------------------------------------------
# bivariate likelihood


def bivariate_terms(m: RadialMeasure, z1, z2, rho, h: float = _kernels.STEP):
    """Vectorized ``V, V1, V2, V12`` from the compiled fixed-rule kernel.

    Returns
    -------
    ndarray, shape (4, n)
    """
    fam, alpha, beta = m.kernel_params
    return _kernels.bivariate_terms(z1, z2, rho, fam, alpha, beta, h)


def density_log(v, v1, v2, v12):
    """``-V + log(V1 V2 - V12)`` with the positivity guard.

    Values of ``V1 V2 - V12`` that are negative by less than
    ``DENSITY_NOISE`` relative to ``|V1 V2| + |V12|`` are treated as
    quadrature noise and clamped to 1e-300.

    Raises
    ------
    NumericalDensityFailure
        At the first entry violating the guard; ``replicate`` holds its index.
    """
    v, v1, v2, v12 = (np.asarray(a, dtype=float) for a in (v, v1, v2, v12))
    det = v1 * v2 - v12
    scale = np.abs(v1 * v2) + np.abs(v12)
    bad = ~(det > -DENSITY_NOISE * scale) | ~np.isfinite(det)
    if np.any(bad):
        i = int(np.flatnonzero(bad.ravel())[0])
        raise NumericalDensityFailure(
            f"V1*V2 - V12 = {det.ravel()[i]:.3g} is not positive", replicate=i
        )
    return -v + np.log(np.maximum(det, 1e-300))


def bivariate_loglik(p: MaxIdProcess, z, pair=(0, 1), spec: QuadratureSpec | None = None) -> float:
    """Log density of a pair of model-scale observations.

    ``log[exp(-V) (V1 V2 - V12)]`` with all four terms from adaptive
    quadrature.

    Raises
    ------
    NumericalDensityFailure
        If ``V1 V2 - V12`` is negative beyond quadrature noise.
    """
    m = p.measure
    spec = spec or DEFAULT_SPEC
    z1, z2 = float(z[0]), float(z[1])
    rho = _pair_rho(p, pair)
    v = _pair_V(m, z1, z2, rho, spec)
    v1 = _pair_V1(m, z1, z2, rho, spec)
    v2 = _pair_V1(m, z2, z1, rho, spec)
    v12 = _pair_V12(m, z1, z2, rho, spec)
    try:
        return float(density_log(v, v1, v2, v12))
    except NumericalDensityFailure as exc:
        raise NumericalDensityFailure(str(exc), pair=tuple(pair)) from None


# ---------------------------------------------------------------------------
# dependence summaries


def theta_level(p: MaxIdProcess, subset, z: float, rng=None, target_err: float = 5e-3, full_output=False):
    """Extremal coefficient ``θ(z)`` of a subset of sites at Fréchet level ``z``.

    Margins are standardized through the model: ``z*`` solves
    ``V_m(z*) = 1/z``, and ``θ(z) = z V(z*, ..., z*)``. The result is the
    exponent of ``Pr(all ≤ z*) = exp{-θ/z}`` on the unit-Fréchet scale.

    Returns
    -------
    float, or (float, float) with ``full_output`` (value, standard error)
    """
    subset = list(subset)
    if len(subset) < 2:
        raise InvalidParameters("need at least two sites")
    if not z > 0:
        raise InvalidParameters("level must be positive")
    sub = p.with_sites(p.sites.subset(subset))
    zs = marginal_level(p.measure, 1.0 / z)
    val, se = exponent_V(sub, np.full(len(subset), zs), rng=rng, target_err=target_err, full_output=True)
    return (z * val, z * se) if full_output else z * val


def chi_level(p: MaxIdProcess, pair, z: float, rng=None) -> DependenceSummary:
    """Exact ``χ(z)`` and the ``2 - θ2(z)`` proxy on standardized margins."""
    theta = theta_level(p, pair, z, rng=rng)
    p_marg = -math.expm1(-1.0 / z)
    joint = 1.0 - 2.0 * math.exp(-1.0 / z) + math.exp(-theta / z)
    chi = min(max(joint / p_marg, 0.0), 1.0)
    return DependenceSummary(float(z), float(theta), chi, 2.0 - theta)


def eta_coefficient(cm: CorrelationModel, beta: float, h):
    """Coefficient of tail dependence ``η(h) = {(1 + ρ(h))/2}^{β/(β+2)}``."""
    if beta < 0:
        raise InvalidParameters("beta must be nonnegative")
    rho = np.asarray(corr(cm, h), dtype=float)
    out = ((1.0 + rho) / 2.0) ** (beta / (beta + 2.0))
    return out if out.ndim else float(out)


def joint_exceed_prob(p: MaxIdProcess, grid: SiteConfig, prob_level: float, rng=None, target_err: float = 5e-3):
    """Probability that at least one grid site exceeds its ``prob_level`` quantile.

    Returns
    -------
    prob : float
        ``1 - exp{-V(z, ..., z)}`` with ``z`` the marginal quantile.
    err : float
        Standard error propagated from the Gaussian orthant estimates.
    """
    proc = p.with_sites(grid)
    z = marginal_quantile(p.measure, prob_level)
    val, se = exponent_V(proc, np.full(grid.dim, z), rng=rng, target_err=target_err, full_output=True)
    return float(-math.expm1(-val)), float(math.exp(-val) * se)


# ---------------------------------------------------------------------------
# finite exponent measure model


def finite_model_cdf(spec: FiniteMeasureSpec, z, rng=None, target_err: float = 1e-6) -> float:
    """``exp[-c {1 - Φ_D(z; Σ)}]`` for the finite exponent measure ``c·H``."""
    z = np.asarray(z, dtype=float).ravel()
    if z.size != spec.dim:
        raise InvalidParameters(f"expected {spec.dim} levels, got {z.size}")
    if z.size == 1:
        h = float(std_normal_cdf(z[0]))
    elif z.size == 2:
        h = float(bivariate_normal_cdf(z[0], z[1], spec.corr[0, 1]))
    else:
        h, _ = mvn_cdf(z, spec.corr, target_err=target_err, rng=rng)
    return math.exp(-spec.c * (1.0 - h))


def finite_model_bivariate_loglik(spec: FiniteMeasureSpec, z) -> float:
    """Log density of a pair under the finite-measure model.

    ``V = c(1 - Φ2)``, ``V_j = -c φ(z_j) Φ((z_k - ρ z_j)/s)`` and
    ``V12 = -c φ2(z1, z2)``.
    """
    if spec.dim != 2:
        raise InvalidParameters("the finite-measure pair likelihood needs D = 2")
    z1, z2 = float(z[0]), float(z[1])
    rho = float(spec.corr[0, 1])
    s = math.sqrt(max((1.0 - rho) * (1.0 + rho), 1e-24))
    c = spec.c
    v = c * (1.0 - float(bivariate_normal_cdf(z1, z2, rho)))
    phi1 = math.exp(-0.5 * z1 * z1 - _LOG_SQRT_2PI)
    phi2 = math.exp(-0.5 * z2 * z2 - _LOG_SQRT_2PI)
    v1 = -c * phi1 * float(std_normal_cdf((z2 - rho * z1) / s))
    v2 = -c * phi2 * float(std_normal_cdf((z1 - rho * z2) / s))
    quad = (z1 * z1 - 2.0 * rho * z1 * z2 + z2 * z2) / (s * s)
    v12 = -c * math.exp(-0.5 * quad) / (2.0 * math.pi * s)
    return float(density_log(v, v1, v2, v12))
