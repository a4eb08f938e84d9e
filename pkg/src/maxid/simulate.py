"""Simulation of max-id processes and of the finite exponent measure model.

Exact simulation uses the elliptical representation of the Gaussian
spectral construction: the points ``R_i W_i`` are written as
``R̃_i L S_i`` with ``S_i`` uniform on the unit sphere and ``R̃_i`` the
points of a one-dimensional Poisson process with tail measure ``κ̃``.
Taking ``R̃_i`` in decreasing order through the inverse of ``κ̃`` lets the
simulation stop as soon as ``R̃_i`` falls below every current site maximum,
because each row of ``L`` has unit norm and so no later point can raise any
site.

Replicates are generated in fixed-size chunks, chunk ``c`` drawing from
stream ``stream_id + c`` of the configured :class:`~maxid.numerics.RngStream`.
The output therefore depends only on the seed and the chunk size, not on
how chunks are scheduled across workers.
"""

from __future__ import annotations

import functools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameters, NonTermination
from .measures import (
    EllipticalRadialTable,
    FiniteMeasureSpec,
    RadialMeasure,
    build_elliptical_inverse,
    inv_tail,
    tail_mass,
)
from .model import MaxIdProcess, SiteConfig, marginal_quantile
from .numerics import RngStream, as_stream, cholesky_with_jitter

__all__ = [
    "SimulationConfig",
    "simulate_exact",
    "simulate_truncated",
    "simulate_finite",
    "estimate_p_mc",
    "elliptical_table",
    "default_epsilon",
    "DEFAULT_TRUNCATION_MASS",
]

#: expected number of points used when no truncation level is given
DEFAULT_TRUNCATION_MASS = 1e5
#: safety bound on the number of points per replicate
MAX_POINTS = 10**7


@dataclass(frozen=True)
class SimulationConfig:
    """Settings for the process simulators.

    Parameters
    ----------
    n_replicates : int
    mode : {"exact_elliptical", "epsilon_truncated"}
    epsilon : float, optional
        Truncation radius for the truncated mode; defaults to the radius
        whose tail mass is ``DEFAULT_TRUNCATION_MASS``.
    rng : RngStream or int
    mass_scale : float
        Multiplier applied to the radial measure, giving the process with
        exponent function ``mass_scale · V``.
    chunk : int
        Replicates per random stream.
    workers : int
        Threads used to process chunks; results do not depend on it.
    block : int
        Points drawn per replicate and step of the exact sampler.
    """

    n_replicates: int
    mode: str = "exact_elliptical"
    epsilon: float | None = None
    rng: RngStream | int = 0
    mass_scale: float = 1.0
    chunk: int = 1024
    workers: int = 1
    block: int = 32

    def __post_init__(self):
        if self.n_replicates < 1:
            raise InvalidParameters("n_replicates must be at least 1")
        if self.mode not in ("exact_elliptical", "epsilon_truncated"):
            raise InvalidParameters(f"unknown simulation mode {self.mode!r}")
        if self.epsilon is not None and not self.epsilon > 0:
            raise InvalidParameters("epsilon must be positive")
        if not self.mass_scale > 0:
            raise InvalidParameters("mass_scale must be positive")
        if self.chunk < 1 or self.workers < 1 or self.block < 1:
            raise InvalidParameters("chunk, workers and block must be positive")


@functools.lru_cache(maxsize=32)
def elliptical_table(m: RadialMeasure, dim: int) -> EllipticalRadialTable:
    """Cached :func:`~maxid.measures.build_elliptical_inverse`."""
    return build_elliptical_inverse(m, dim)


def default_epsilon(m: RadialMeasure, mass: float = DEFAULT_TRUNCATION_MASS) -> float:
    """Radius ``ε`` with ``κ([ε, ∞)) = mass``."""
    return float(inv_tail(m, mass))


def _run_chunks(n, chunk, workers, fn):
    starts = list(range(0, n, chunk))
    jobs = [(c, s, min(chunk, n - s)) for c, s in enumerate(starts)]
    if workers <= 1 or len(jobs) == 1:
        parts = [fn(*job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda job: fn(*job), jobs))
    return np.concatenate(parts, axis=0)


def _exact_chunk(table, L, mass_scale, block, gen, n):
    """Exact sampler for ``n`` replicates sharing one generator."""
    d = L.shape[0]
    z = np.zeros((n, d))
    gam = np.zeros(n)
    active = np.arange(n)
    drawn = 0
    while active.size:
        na = active.size
        g = gam[active, None] + np.cumsum(gen.standard_exponential((na, block)), axis=1)
        r = table.inverse(g / mass_scale)
        s = gen.standard_normal((na, block, d))
        s /= np.linalg.norm(s, axis=2, keepdims=True)
        pts = r[:, :, None] * (s @ L.T)
        za = np.maximum(z[active], pts.max(axis=1))
        z[active] = za
        gam[active] = g[:, -1]
        done = r[:, -1] <= za.min(axis=1)
        active = active[~done]
        drawn += block
        if drawn > MAX_POINTS:
            raise NonTermination(
                f"exact simulation drew more than {MAX_POINTS} points per replicate"
            )
    return z


def simulate_exact(p: MaxIdProcess, cfg: SimulationConfig) -> np.ndarray:
    """Exact simulation at the sites of ``p``.

    Returns
    -------
    ndarray, shape (n_replicates, D)
        Strictly positive model-scale values.

    Raises
    ------
    NonTermination
        If a replicate needs more than ``10^7`` points.
    """
    if cfg.mode != "exact_elliptical":
        raise InvalidParameters("simulate_exact needs mode 'exact_elliptical'")
    L, _ = cholesky_with_jitter(p.sigma)
    # unit row norms keep the stopping bound R̃ valid after jitter
    L = L / np.linalg.norm(L, axis=1, keepdims=True)
    table = elliptical_table(p.measure, p.dim)
    base = as_stream(cfg.rng)

    def fn(c, start, size):
        return _exact_chunk(table, L, cfg.mass_scale, cfg.block, base.child(c).generator(), size)

    return _run_chunks(cfg.n_replicates, cfg.chunk, cfg.workers, fn)


def simulate_truncated(p: MaxIdProcess, cfg: SimulationConfig, return_counts: bool = False):
    """Approximate simulation keeping only radial points above ``ε``.

    Each replicate draws ``N ~ Poisson(κ([ε, ∞)))`` amplitudes by inverting
    the tail mass at ``u = κ([ε, ∞))(1 - U)``, multiplies each by an
    independent Gaussian vector and returns the componentwise maximum with
    0. Rows are all zero when no point exceeds 0 at any site.

    Returns
    -------
    z : ndarray, shape (n_replicates, D)
    counts : ndarray of int, only with ``return_counts``
    """
    if cfg.mode != "epsilon_truncated":
        raise InvalidParameters("simulate_truncated needs mode 'epsilon_truncated'")
    m = p.measure
    eps = cfg.epsilon if cfg.epsilon is not None else default_epsilon(m)
    mass = cfg.mass_scale * tail_mass(m, eps)
    L, _ = cholesky_with_jitter(p.sigma)
    base = as_stream(cfg.rng)
    d = p.dim

    def fn(c, start, size):
        gen = base.child(c).generator()
        out = np.zeros((size, d + 1))
        for i in range(size):
            n_pts = int(gen.poisson(mass))
            out[i, d] = n_pts
            if n_pts == 0:
                continue
            u = (mass / cfg.mass_scale) * (1.0 - gen.random(n_pts))
            r = np.asarray(inv_tail(m, u)).reshape(-1)
            w = gen.standard_normal((n_pts, d)) @ L.T
            out[i, :d] = np.maximum((r[:, None] * w).max(axis=0), 0.0)
        return out

    res = _run_chunks(cfg.n_replicates, cfg.chunk, cfg.workers, fn)
    z = res[:, :d]
    return (z, res[:, d].astype(np.int64)) if return_counts else z


def simulate_finite(spec: FiniteMeasureSpec, n: int, rng=None):
    """Simulate the finite exponent measure model ``Λ = c·H``.

    Each replicate draws ``N ~ Poisson(c)`` Gaussian vectors from ``H`` and
    returns their componentwise maximum; replicates with ``N = 0`` sit at
    the lower boundary ``-inf`` and are flagged.

    Returns
    -------
    z : ndarray, shape (n, D)
    boundary : ndarray of bool, shape (n,)
    """
    if n < 1:
        raise InvalidParameters("n must be at least 1")
    gen = as_stream(rng).generator()
    L, _ = cholesky_with_jitter(spec.corr)
    d = spec.dim
    counts = gen.poisson(spec.c, size=n)
    z = np.full((n, d), -np.inf)
    total = int(counts.sum())
    x = gen.standard_normal((total, d)) @ L.T
    owner = np.repeat(np.arange(n), counts)
    if total:
        np.maximum.at(z, owner, x)
    return z, counts == 0


def estimate_p_mc(p: MaxIdProcess, grid: SiteConfig, prob_level: float, n_sim: int, rng=None, workers: int = 1):
    """Monte-Carlo probability that some grid site exceeds its quantile.

    Returns
    -------
    prob : float
    se : float
        Binomial standard error.
    """
    if n_sim < 1000:
        raise InvalidParameters("n_sim must be at least 1000")
    proc = p.with_sites(grid)
    z = marginal_quantile(p.measure, prob_level)
    sims = simulate_exact(proc, SimulationConfig(n_sim, rng=as_stream(rng), workers=workers))
    hit = np.any(sims > z, axis=1)
    prob = float(hit.mean())
    return prob, math.sqrt(prob * (1.0 - prob) / n_sim)
