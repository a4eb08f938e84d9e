"""GEV margins across temporal block sizes.

A site's daily maxima follow ``G_1 = GEV(μ, σ, ξ)``; maxima over blocks of
``b_k`` days follow ``G_k = G_1^{b_k θ}`` with ``θ`` the extremal index.
Powers of a GEV are again GEV with the same shape, so every scale is handled
by :func:`rescale_gev`. All scales are fitted jointly by maximum likelihood
with shared ``(μ, σ, ξ, θ)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import optimize, special, stats

from .errors import DegenerateSeries, InvalidParameters, NonConvergence, OutOfSupport

__all__ = [
    "GevMargin",
    "BlockSpec",
    "gev_cdf",
    "gev_logpdf",
    "gev_quantile",
    "rescale_gev",
    "block_factor",
    "to_frechet",
    "from_frechet",
    "gev_loglik_joint",
    "fit_gev_joint",
    "empirical_to_frechet",
    "XI_ZERO",
]

#: shapes with ``|ξ|`` below this use the Gumbel formulas
XI_ZERO = 1e-8


@dataclass(frozen=True)
class GevMargin:
    """GEV parameters for the finest time scale plus the extremal index.

    Attributes
    ----------
    mu, sigma, xi : float
        Location, scale (> 0) and shape.
    theta : float
        Extremal index in ``(0, 1]``.
    converged : bool
        Whether the fit that produced the margin converged.
    theta_fixed : bool
        Whether ``θ`` was held at 1 because it is not identifiable.
    """

    mu: float
    sigma: float
    xi: float
    theta: float = 1.0
    converged: bool = True
    theta_fixed: bool = False

    def __post_init__(self):
        if not self.sigma > 0:
            raise InvalidParameters(f"sigma must be positive, got {self.sigma}")
        if not 0.0 < self.theta <= 1.0:
            raise InvalidParameters(f"theta must lie in (0, 1], got {self.theta}")

    def to_dict(self, site_id=None) -> dict:
        d = {
            "mu": self.mu,
            "sigma": self.sigma,
            "xi": self.xi,
            "theta": self.theta,
            "convergence": bool(self.converged),
            "theta_fixed": bool(self.theta_fixed),
        }
        if site_id is not None:
            d = {"site_id": str(site_id), **d}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GevMargin":
        return cls(
            float(d["mu"]),
            float(d["sigma"]),
            float(d["xi"]),
            float(d.get("theta", 1.0)),
            bool(d.get("convergence", True)),
            bool(d.get("theta_fixed", False)),
        )


@dataclass(frozen=True)
class BlockSpec:
    """Named time scales and their block sizes in units of the finest scale."""

    labels: tuple = ("daily", "weekly", "monthly", "yearly")
    sizes: tuple = (1, 7, 30, 182)

    def __post_init__(self):
        labels, sizes = tuple(self.labels), tuple(int(s) for s in self.sizes)
        if len(labels) != len(sizes) or not sizes:
            raise InvalidParameters("labels and sizes must have equal nonzero length")
        if sizes[0] != 1 or any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise InvalidParameters("block sizes must start at 1 and increase strictly")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "sizes", sizes)

    def size_of(self, label) -> int:
        return self.sizes[self.labels.index(label)]


def _reduced(margin: GevMargin, z):
    """``(z - μ)/σ`` and the support indicator ``1 + ξ y > 0``."""
    y = (np.asarray(z, dtype=float) - margin.mu) / margin.sigma
    if abs(margin.xi) < XI_ZERO:
        return y, np.ones_like(y, dtype=bool)
    return y, 1.0 + margin.xi * y > 0


def _log_neg_log_cdf(margin: GevMargin, y):
    """``log{-log G}`` inside the support."""
    if abs(margin.xi) < XI_ZERO:
        return -y
    return -np.log1p(margin.xi * y) / margin.xi


def gev_cdf(margin: GevMargin, z):
    """GEV distribution function; 0 or 1 outside the support."""
    y, inside = _reduced(margin, z)
    with np.errstate(all="ignore"):
        out = np.exp(-np.exp(_log_neg_log_cdf(margin, np.where(inside, y, 0.0))))
    out = np.where(inside, out, 0.0 if margin.xi > 0 else 1.0)
    return out if out.ndim else float(out)


def gev_logpdf(margin: GevMargin, z):
    """GEV log density; ``-inf`` outside the support."""
    y, inside = _reduced(margin, z)
    with np.errstate(all="ignore"):
        ys = np.where(inside, y, 0.0)
        lt = _log_neg_log_cdf(margin, ys)
        out = -math.log(margin.sigma) + (1.0 + margin.xi) * lt - np.exp(lt)
    out = np.where(inside, out, -np.inf)
    return out if out.ndim else float(out)


def gev_quantile(margin: GevMargin, p):
    """Inverse of :func:`gev_cdf` for ``0 < p < 1``."""
    p = np.asarray(p, dtype=float)
    if np.any((p <= 0) | (p >= 1)):
        raise InvalidParameters("probabilities must lie in (0, 1)")
    w = -np.log(-np.log(p))  # Gumbel reduced variate
    if abs(margin.xi) < XI_ZERO:
        y = w
    else:
        y = np.expm1(margin.xi * w) / margin.xi
    out = margin.mu + margin.sigma * y
    return out if out.ndim else float(out)


def rescale_gev(margin: GevMargin, m: float) -> GevMargin:
    """Margin of the ``m``-th power ``G^m`` of a GEV distribution.

    ``σ' = σ m^ξ`` and ``μ' = μ - σ(1 - m^ξ)/ξ``, with ``μ' = μ + σ log m``
    in the Gumbel case. ``ξ`` and the extremal index are unchanged.
    """
    if not m > 0:
        raise InvalidParameters("block factor must be positive")
    xi = margin.xi
    lm = math.log(m)
    if abs(xi) < XI_ZERO:
        return replace(margin, mu=margin.mu + margin.sigma * lm)
    # (m^ξ - 1)/ξ computed stably
    g = math.expm1(xi * lm) / xi
    return replace(margin, mu=margin.mu + margin.sigma * g, sigma=margin.sigma * math.exp(xi * lm))


def block_factor(margin: GevMargin, size: int) -> float:
    """Power applied to the finest-scale GEV for blocks of ``size`` units.

    The finest scale itself (``size = 1``) is the reference distribution;
    coarser blocks use ``b_k θ``.
    """
    return 1.0 if size == 1 else size * margin.theta


def to_frechet(z, margin: GevMargin, m: float = 1.0):
    """Map data values to unit-Fréchet: ``exp(-1/u) = G_1(z)^m``.

    Raises
    ------
    OutOfSupport
        If the CDF is exactly 0 or 1 at some value.
    """
    g = rescale_gev(margin, m)
    y, inside = _reduced(g, z)
    if not np.all(inside):
        raise OutOfSupport("value outside the GEV support")
    # -log G = exp(lt); u = 1/(-log G)
    lt = _log_neg_log_cdf(g, y)
    u = np.exp(-lt)
    if np.any(~np.isfinite(u)) or np.any(u <= 0):
        raise OutOfSupport("CDF is 0 or 1 at some value")
    return u if u.ndim else float(u)


def from_frechet(u, margin: GevMargin, m: float = 1.0):
    """Inverse of :func:`to_frechet`."""
    g = rescale_gev(margin, m)
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0):
        raise OutOfSupport("Fréchet values must be positive")
    w = np.log(u)  # Gumbel reduced variate: -log(-log G) = log u
    if abs(g.xi) < XI_ZERO:
        y = w
    else:
        y = np.expm1(g.xi * w) / g.xi
    out = g.mu + g.sigma * y
    return out if out.ndim else float(out)


def gev_loglik_joint(params, series, sizes) -> float:
    """Sum over scales of GEV log-likelihoods with block factor ``b_k θ``.

    The finest scale (``b = 1``) uses the reference GEV itself.

    Parameters
    ----------
    params : (mu, sigma, xi, theta)
    series : sequence of 1-D arrays
        Maxima per scale, missing values as NaN.
    sizes : sequence of int
    """
    mu, sigma, xi, theta = params
    if sigma <= 0 or not 0 < theta <= 1:
        return -np.inf
    base = GevMargin(mu, sigma, xi, theta)
    total = 0.0
    for x, b in zip(series, sizes):
        x = np.asarray(x, dtype=float)
        x = x[np.isfinite(x)]
        if x.size == 0:
            continue
        total += float(np.sum(gev_logpdf(rescale_gev(base, block_factor(base, b)), x)))
    return total


def _start_values(x):
    """Method-of-moments Gumbel start ``(μ, σ)``."""
    s = float(np.std(x)) * math.sqrt(6.0) / math.pi
    return float(np.mean(x)) - 0.5772156649 * s, max(s, 1e-8)


def fit_gev_joint(series, blocks: BlockSpec | None = None, *, maxiter: int = 4000) -> GevMargin:
    """Joint GEV fit across time scales for one site.

    Parameters
    ----------
    series : sequence of array_like
        Maxima per scale, in the order of ``blocks.sizes``; the finest scale
        must be nonempty. Shorter sequences leave coarser scales unused.
    blocks : BlockSpec, optional

    Returns
    -------
    GevMargin
        With ``θ`` fixed at 1 and ``theta_fixed`` set unless the finest
        scale and at least one coarser scale carry data, because ``θ`` is
        otherwise not identifiable.

    Raises
    ------
    DegenerateSeries
        If a nonempty series is constant.
    NonConvergence
        If the optimizer fails to produce a finite likelihood.
    """
    blocks = blocks or BlockSpec()
    series = [np.asarray(s, dtype=float) for s in series]
    sizes = blocks.sizes[: len(series)]
    clean = [s[np.isfinite(s)] for s in series]
    if not clean or clean[0].size == 0:
        raise InvalidParameters("the finest-scale series must be nonempty")
    for s in clean:
        if s.size and np.ptp(s) == 0:
            raise DegenerateSeries("a series of maxima is constant")
    # θ only enters through the ratio of coarse to finest scales
    fix_theta = clean[0].size == 0 or not any(s.size for s in clean[1:])
    mu0, s0 = _start_values(clean[0])

    def unpack(x):
        theta = 1.0 if fix_theta else special.expit(x[3])
        theta = min(theta, 1.0)
        return x[0], math.exp(x[1]), x[2], max(theta, 1e-12)

    def nll(x):
        if abs(x[2]) > 2.0:
            return 1e300
        val = gev_loglik_joint(unpack(x), clean, sizes)
        return -val if np.isfinite(val) else 1e300

    best = None
    starts = [(0.1, 1.0), (-0.1, 1.0)] if fix_theta else [(0.1, 0.5), (-0.1, 0.5), (0.1, 0.8)]
    for xi0, theta0 in starts:
        x0 = [mu0, math.log(s0), xi0] + ([] if fix_theta else [special.logit(theta0)])
        res = optimize.minimize(
            nll,
            np.array(x0),
            method="Nelder-Mead",
            options={"xatol": 1e-9, "fatol": 1e-10, "maxiter": maxiter, "maxfev": 2 * maxiter},
        )
        # restart from the optimum to escape simplex collapse
        res = optimize.minimize(
            nll, res.x, method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": maxiter}
        )
        if best is None or res.fun < best.fun:
            best = res
    if not np.isfinite(best.fun) or best.fun >= 1e299:
        raise NonConvergence("GEV likelihood is not finite at any start")
    mu, sigma, xi, theta = unpack(best.x)
    return GevMargin(float(mu), float(sigma), float(xi), float(theta), bool(best.success), fix_theta)


def empirical_to_frechet(data) -> np.ndarray:
    """Rank transform each column to unit-Fréchet.

    Ranks ``r`` (averaged over ties, NaN kept as NaN) give
    ``u = -1/log(r/(n+1))`` with ``n`` the number of observed values.
    """
    x = np.asarray(data, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] < 2:
        raise InvalidParameters("need at least two rows")
    out = np.full(x.shape, np.nan)
    for j in range(x.shape[1]):
        ok = np.isfinite(x[:, j])
        n = int(ok.sum())
        if n == 0:
            continue
        r = stats.rankdata(x[ok, j], method="average")
        out[ok, j] = -1.0 / np.log(r / (n + 1.0))
    return out
