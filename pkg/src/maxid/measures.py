"""Radial Poisson tail measures and the elliptical radial measure.

Three families of tail measures ``T(r) = κ([r, ∞))`` on the storm
amplitudes are provided:

* ``M1``: ``r^{-(1-α)} exp{-α(r^β - 1)/β}`` with ``α ∈ [0, 1)``,
* ``M2``: ``r^{-β} exp{-α(r^β - 1)/β}`` with ``α > 0``,
* ``M3``: ``M2`` with ``α = 1``.

``β = 0`` is read as the limit ``β ↓ 0``, which gives ``1/r`` for M1 and
M3 and ``r^{-α}`` for M2 (the max-stable cases). All families satisfy
``T(1) = 1``.

Combining the radial measure with a D-variate standard Gaussian spectral
vector gives an elliptical point process whose radial part has tail mass
``κ̃(z) = ∫ F̄_χD(z/r) κ(dr)``; :class:`EllipticalRadialTable` tabulates it
and its inverse for exact simulation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import interpolate, special

from . import _kernels
from .errors import InvalidParameters, NonConvergence
from .numerics import QuadratureSpec, chi_sf, integrate_semiinfinite

__all__ = [
    "RadialMeasure",
    "FiniteMeasureSpec",
    "EllipticalRadialTable",
    "tail_mass",
    "log_tail_mass",
    "intensity",
    "log_intensity",
    "inv_tail",
    "elliptical_tail",
    "build_elliptical_inverse",
    "BETA_ZERO",
    "MASS_CAP",
    "MASS_FLOOR",
]

BETA_ZERO = 1e-10
MASS_CAP = 1e12
MASS_FLOOR = 1e-300
_FAMILY_CODE = {"M1": 1, "M2": 2, "M3": 2}


@dataclass(frozen=True)
class RadialMeasure:
    """A radial tail measure from one of the families M1, M2, M3.

    Parameters
    ----------
    family : {"M1", "M2", "M3"}
    alpha : float, optional
        Ignored (pinned to 1) for M3.
    beta : float
        Weibull exponent, ``β ≥ 0``; values below ``1e-10`` count as 0.
    """

    family: str
    alpha: float = 1.0
    beta: float = 0.0

    def __post_init__(self):
        fam = str(self.family).upper()
        if fam not in _FAMILY_CODE:
            raise InvalidParameters(f"unknown measure family {self.family!r}")
        object.__setattr__(self, "family", fam)
        if fam == "M3":
            object.__setattr__(self, "alpha", 1.0)
        alpha, beta = float(self.alpha), float(self.beta)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        if not (math.isfinite(beta) and beta >= 0.0):
            raise InvalidParameters(f"beta must be finite and >= 0, got {beta}")
        if fam == "M1" and not (0.0 <= alpha < 1.0):
            raise InvalidParameters(f"M1 requires alpha in [0, 1), got {alpha}")
        if fam == "M2" and not (math.isfinite(alpha) and alpha > 0.0):
            raise InvalidParameters(f"M2 requires alpha > 0, got {alpha}")

    @property
    def is_max_stable(self) -> bool:
        """Whether the measure is a pure power law (``β = 0``, or M1 with ``α = 0``)."""
        return self.beta < BETA_ZERO or (self.family == "M1" and self.alpha == 0.0)

    @property
    def code(self) -> int:
        return _FAMILY_CODE[self.family]

    @property
    def kernel_params(self) -> tuple:
        """``(family code, α, β)`` with β snapped to 0 below the threshold."""
        beta = 0.0 if self.beta < BETA_ZERO else self.beta
        return self.code, self.alpha, beta

    @property
    def power_index(self) -> float:
        """Exponent of the power-law part of ``T`` near ``r = 0``."""
        if self.family == "M1":
            return 1.0 if self.beta < BETA_ZERO else 1.0 - self.alpha
        if self.beta < BETA_ZERO:
            return self.alpha
        return self.beta

    def to_dict(self) -> dict:
        return {"family": self.family, "alpha": self.alpha, "beta": self.beta}

    @classmethod
    def from_dict(cls, d: dict) -> "RadialMeasure":
        return cls(d["family"], d.get("alpha", 1.0), d.get("beta", 0.0))


def _bt_terms(m: RadialMeasure, s):
    """Return ``(β, (r^β - 1)/β)`` as arrays for ``s = log r``."""
    _, alpha, beta = m.kernel_params
    if beta == 0.0:
        return beta, s
    with np.errstate(over="ignore"):
        return beta, np.expm1(beta * s) / beta


def log_tail_mass(m: RadialMeasure, r):
    """Natural log of the tail mass, without caps."""
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore"):
        s = np.log(r)
    _, alpha, beta = m.kernel_params
    if m.family == "M1":
        if beta == 0.0:
            return -s
        _, e = _bt_terms(m, s)
        return -(1.0 - alpha) * s - alpha * e
    if beta == 0.0:
        return -alpha * s
    _, e = _bt_terms(m, s)
    return -beta * s - alpha * e


def tail_mass(m: RadialMeasure, r):
    """Tail mass ``κ([r, ∞))``, clipped to ``[1e-300, 1e12]``.

    Parameters
    ----------
    m : RadialMeasure
    r : array_like
        Radii, ``r > 0``.

    Returns
    -------
    ndarray or float
    """
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("tail_mass requires r > 0")
    out = np.clip(np.exp(log_tail_mass(m, r)), MASS_FLOOR, MASS_CAP)
    return out if out.ndim else float(out)


def log_intensity(m: RadialMeasure, r):
    """Natural log of the intensity ``f(r) = -dT/dr``."""
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore"):
        s = np.log(r)
    _, alpha, beta = m.kernel_params
    if m.family == "M1":
        if beta == 0.0:
            return -2.0 * s
        _, e = _bt_terms(m, s)
        with np.errstate(over="ignore", invalid="ignore"):
            c = (1.0 - alpha) + alpha * np.exp(beta * s)
            return (alpha - 2.0) * s + np.log(c) - alpha * e
    if beta == 0.0:
        return math.log(alpha) - (alpha + 1.0) * s
    _, e = _bt_terms(m, s)
    with np.errstate(over="ignore", invalid="ignore"):
        a = beta * np.exp(-beta * s) + alpha
        return np.log(a) - s - alpha * e


def intensity(m: RadialMeasure, r):
    """Intensity ``f(r) = -dT/dr`` of the radial measure."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("intensity requires r > 0")
    out = np.exp(log_intensity(m, r))
    return out if out.ndim else float(out)


def _log_tail_slope(m: RadialMeasure, s):
    """``d log T / d log r`` at ``s = log r``."""
    _, alpha, beta = m.kernel_params
    base = -(1.0 - alpha) if m.family == "M1" else -beta
    if beta == 0.0:
        return np.full_like(s, -1.0 if m.family == "M1" else -alpha)
    with np.errstate(over="ignore"):
        return base - alpha * np.exp(beta * s)


def _lambert_log(logx):
    """Principal Lambert W of ``exp(logx)`` for real ``logx``."""
    logx = np.asarray(logx, dtype=float)
    out = np.empty_like(logx)
    small = logx < 500.0
    out[small] = special.lambertw(np.exp(logx[small])).real
    big = ~small
    if big.any():
        lx = logx[big]
        w = lx - np.log(lx)
        for _ in range(8):
            w = w - (w + np.log(w) - lx) / (1.0 + 1.0 / w)
        out[big] = w
    return out


def inv_tail(m: RadialMeasure, u):
    """Radius ``r`` with ``T(r) = u``.

    A Lambert-W closed form supplies the starting point and Newton steps on
    ``log r`` polish the root; ``log T`` is concave and decreasing in
    ``log r``, so Newton converges from any start.

    Parameters
    ----------
    m : RadialMeasure
    u : array_like
        Tail masses, ``u > 0``.

    Returns
    -------
    ndarray or float
    """
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0):
        raise ValueError("inv_tail requires u > 0")
    lu = np.log(u)
    _, alpha, beta = m.kernel_params
    if m.family == "M1":
        if beta == 0.0 or alpha == 0.0:
            out = np.exp(-lu)
            return out if out.ndim else float(out)
        p = (1.0 - alpha) / beta
        a = alpha / (1.0 - alpha)
        w = _lambert_log(np.log(a) + a - lu / p)
        s = np.log(w / a) / beta
    else:
        if beta == 0.0:
            out = np.exp(-lu / alpha)
            return out if out.ndim else float(out)
        c = alpha / beta
        w = _lambert_log(math.log(c) + c - lu)
        s = np.log(w / c) / beta
    for _ in range(4):
        step = (log_tail_mass(m, np.exp(s)) - lu) / _log_tail_slope(m, s)
        s = s - np.where(np.isfinite(step), step, 0.0)
    out = np.exp(s)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# elliptical radial measure


def elliptical_tail(m: RadialMeasure, dim: int, z, spec: QuadratureSpec | None = None):
    """Tail mass ``κ̃([z, ∞)) = ∫ F̄_χD(z/r) f(r) dr`` of the elliptical radius.

    Parameters
    ----------
    m : RadialMeasure
    dim : int
        Dimension ``D`` of the Gaussian spectral vector.
    z : float
        Level, ``z > 0``.
    spec : QuadratureSpec, optional

    Returns
    -------
    float
        Value clipped to ``[1e-300, 1e12]``.
    """
    z = float(z)
    if z <= 0:
        raise ValueError("elliptical_tail requires z > 0")
    spec = spec or QuadratureSpec(rel_tol=1e-11, abs_tol=1e-16)

    def logf(r):
        with np.errstate(divide="ignore"):
            return np.log(chi_sf(z / r, dim)) + log_intensity(m, r)

    val = integrate_semiinfinite(logf, spec, log=True)
    return float(np.clip(val, MASS_FLOOR, MASS_CAP))


@dataclass(frozen=True)
class EllipticalRadialTable:
    """Tabulated ``κ̃`` and its inverse on a log-spaced grid.

    Interpolation is cubic Hermite in ``(log z, log κ̃)`` using the exact
    slope ``d log κ̃ / d log z`` at every node, in both directions.

    Attributes
    ----------
    source : RadialMeasure
    dim : int
    log_z : ndarray
        Log radii of the grid nodes, increasing.
    log_mass : ndarray
        Log tail masses at the nodes, strictly decreasing.
    slope : ndarray
        ``d log κ̃ / d log z`` at the nodes (negative).
    """

    source: RadialMeasure
    dim: int
    log_z: np.ndarray
    log_mass: np.ndarray
    slope: np.ndarray
    _fwd: object = field(repr=False, compare=False, default=None)
    _inv: object = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        fwd = interpolate.CubicHermiteSpline(self.log_z, self.log_mass, self.slope)
        inv = interpolate.CubicHermiteSpline(-self.log_mass, self.log_z, -1.0 / self.slope)
        object.__setattr__(self, "_fwd", fwd)
        object.__setattr__(self, "_inv", inv)

    def forward(self, z):
        """Interpolated ``κ̃([z, ∞))``; linear in log-log outside the grid."""
        lz = np.log(np.asarray(z, dtype=float))
        out = self._fwd(np.clip(lz, self.log_z[0], self.log_z[-1]))
        lo, hi = lz < self.log_z[0], lz > self.log_z[-1]
        out = np.where(lo, self.log_mass[0] + self.slope[0] * (lz - self.log_z[0]), out)
        out = np.where(hi, self.log_mass[-1] + self.slope[-1] * (lz - self.log_z[-1]), out)
        out = np.exp(out)
        return out if out.ndim else float(out)

    def inverse(self, u):
        """Radius ``z`` with ``κ̃([z, ∞)) = u``."""
        x = -np.log(np.asarray(u, dtype=float))
        xs = -self.log_mass
        out = self._inv(np.clip(x, xs[0], xs[-1]))
        lo, hi = x < xs[0], x > xs[-1]
        out = np.where(lo, self.log_z[0] - (x - xs[0]) / self.slope[0], out)
        out = np.where(hi, self.log_z[-1] - (x - xs[-1]) / self.slope[-1], out)
        out = np.exp(out)
        return out if out.ndim else float(out)


def _elliptical_log_mass(m: RadialMeasure, dim: int, log_z):
    fam, alpha, beta = m.kernel_params
    return _kernels.elliptical_terms(np.asarray(log_z, dtype=float), dim, fam, alpha, beta)


def build_elliptical_inverse(m: RadialMeasure, dim: int, n_nodes: int = 2048) -> EllipticalRadialTable:
    """Tabulate ``κ̃`` for dimension ``dim`` over masses ``[1e-12, 1e12]``.

    Raises
    ------
    NonConvergence
        If the grid cannot be made to cover the mass range or the tabulated
        masses are not strictly decreasing.
    """
    if dim < 1:
        raise ValueError("dim must be at least 1")
    lo_target, hi_target = math.log(MASS_CAP), math.log(1e-12)
    lz_lo = math.log(inv_tail(m, 1e12)) + 0.5 * math.log(dim)
    lz_hi = math.log(inv_tail(m, 1e-12)) + math.log(math.sqrt(dim) + 10.0)
    for _ in range(200):
        lm, _ = _elliptical_log_mass(m, dim, np.array([lz_lo, lz_hi]))
        ok_lo, ok_hi = lm[0] >= lo_target, lm[1] <= hi_target
        if ok_lo and ok_hi:
            break
        if not ok_lo:
            lz_lo -= 1.0
        if not ok_hi:
            lz_hi += 1.0
    else:
        raise NonConvergence("could not bracket the elliptical tail mass range")
    log_z = np.linspace(lz_lo, lz_hi, n_nodes)
    log_mass, slope = _elliptical_log_mass(m, dim, log_z)
    if not (np.all(np.isfinite(log_mass)) and np.all(np.diff(log_mass) < 0) and np.all(slope < 0)):
        raise NonConvergence("tabulated elliptical tail masses are not strictly decreasing")
    return EllipticalRadialTable(m, dim, log_z, log_mass, slope)


@dataclass(frozen=True)
class FiniteMeasureSpec:
    """Finite exponent measure ``Λ = c·H`` with ``H`` a standard Gaussian law.

    Parameters
    ----------
    c : float
        Total mass.
    corr : ndarray, shape (D, D)
        Correlation matrix of ``H``.
    c_min : float
        Guard: ``c`` below this raises unless ``allow_small_c`` is set,
        because the boundary mass ``exp(-c)`` is then no longer negligible.
    allow_small_c : bool
    """

    c: float
    corr: np.ndarray
    c_min: float = 10.0
    allow_small_c: bool = False

    def __post_init__(self):
        if not self.c > 0:
            raise InvalidParameters("c must be positive")
        if self.c < self.c_min and not self.allow_small_c:
            raise InvalidParameters(
                f"c={self.c} is below the guard {self.c_min}; pass allow_small_c=True"
            )
        corr = np.atleast_2d(np.asarray(self.corr, dtype=float))
        object.__setattr__(self, "corr", corr)

    @property
    def dim(self) -> int:
        return self.corr.shape[0]

    @property
    def boundary_mass(self) -> float:
        """Probability ``exp(-c)`` that no point falls, i.e. ``Z = ℓ``."""
        return math.exp(-self.c)
