"""Compiled batch kernels for the radial integrals.

Every integral here has the form ``∫ exp{g(t)} dt`` over ``t = log r``,
where ``g`` combines a Gaussian factor in ``x = z e^{-t}`` with the log of
the radial tail mass or intensity. For each integral the mode ``c`` of
``g`` is found by safeguarded Newton iteration, and the integral is
evaluated with the trapezoid rule after the substitution
``t = c + w sinh(u)``, stepping outward from ``u = 0`` until terms are
negligible. The rule is a fixed function of the inputs, so results are
smooth in the model parameters, which the likelihood optimizer needs.

Integrand kinds (constants dropped, restored by the callers):

* 0: ``x φ(x) [Φ(kx)] T``     -> exponent function pieces
* 1: ``φ(x) [Φ(kx)] e^{-t} ι``  -> first partial derivatives
* 2: ``exp(-Q e^{-2t}/2) e^{-2t} ι`` -> mixed partial derivative
* 3: ``x^D e^{-x²/2} T``      -> elliptical tail mass
* 4: ``x^D e^{-x²/2} ι``      -> elliptical tail mass slope

with ``T = T(e^t)`` the tail mass and ``ι = f(e^t) e^t`` the intensity per
unit ``t``.
"""

from __future__ import annotations

import math

import numba as nb
import numpy as np

_LOG2PI = math.log(2.0 * math.pi)
_SQRT2 = math.sqrt(2.0)
_NEG = -np.inf

#: default trapezoid step in the sinh variable
STEP = 0.1
#: width multiplier applied to the curvature scale at the mode
WIDTH = 2.0
_UMAX = 8.0
_EPS = 1e-16

_jit = nb.njit(cache=True, nogil=True)


@_jit
def log_ndtr(v):
    if v > 5.0:
        return math.log1p(-0.5 * math.erfc(v / _SQRT2))
    if v > -30.0:
        return math.log(0.5 * math.erfc(-v / _SQRT2))
    v2 = v * v
    return (
        -0.5 * v2
        - math.log(-v)
        - 0.5 * _LOG2PI
        + math.log1p(-1.0 / v2 + 3.0 / v2**2 - 15.0 / v2**3 + 105.0 / v2**4)
    )


@_jit
def measure_terms(t, fam, alpha, beta):
    """log T, its t-derivatives, log ι and its t-derivatives."""
    if beta == 0.0:
        if fam == 1:
            return -t, -1.0, 0.0, -t, -1.0, 0.0
        return -alpha * t, -alpha, 0.0, math.log(alpha) - alpha * t, -alpha, 0.0
    bt = beta * t
    if bt > 700.0:
        return _NEG, -1e3, -1e3, _NEG, -1e3, -1e3
    y = math.exp(bt)
    e = math.expm1(bt) / beta
    ab = alpha * beta * y
    if fam == 1:
        lt = -(1.0 - alpha) * t - alpha * e
        dt1 = -(1.0 - alpha) - alpha * y
        c = (1.0 - alpha) + alpha * y
        li = (alpha - 1.0) * t + math.log(c) - alpha * e
        di1 = (alpha - 1.0) + ab / c - alpha * y
        di2 = ab * beta * (1.0 - alpha) / (c * c) - ab
        return lt, dt1, -ab, li, di1, di2
    lt = -bt - alpha * e
    dt1 = -beta - alpha * y
    a = beta + alpha * y
    li = -bt + math.log(a) - alpha * e
    di1 = -beta * beta / a - alpha * y
    di2 = alpha * beta**3 * y / (a * a) - ab
    return lt, dt1, -ab, li, di1, di2


@_jit
def logint(kind, t, lz, kk, usek, q, dim, fam, alpha, beta):
    """Log integrand and its first two t-derivatives."""
    lt, dt1, dt2, li, di1, di2 = measure_terms(t, fam, alpha, beta)
    if kind == 2:
        e2 = q * math.exp(-2.0 * t)
        if not math.isfinite(e2) or e2 > 1e300:
            return _NEG, 1e3, -1e3
        return -0.5 * e2 - 2.0 * t + li, e2 - 2.0 + di1, -2.0 * e2 + di2
    lx = lz - t
    if lx > 300.0:
        return _NEG, 1e3, -1e3
    x2 = math.exp(2.0 * lx)
    if kind == 0:
        g, g1, g2 = lx - 0.5 * x2 + lt, -1.0 + x2 + dt1, -2.0 * x2 + dt2
    elif kind == 1:
        g, g1, g2 = -0.5 * x2 - t + li, x2 - 1.0 + di1, -2.0 * x2 + di2
    elif kind == 3:
        g, g1, g2 = dim * lx - 0.5 * x2 + lt, -dim + x2 + dt1, -2.0 * x2 + dt2
    else:
        g, g1, g2 = dim * lx - 0.5 * x2 + li, -dim + x2 + di1, -2.0 * x2 + di2
    if usek:
        v = kk * math.exp(lx)
        lp = log_ndtr(v)
        hm = math.exp(-0.5 * v * v - 0.5 * _LOG2PI - lp)
        g += lp
        g1 += -v * hm
        g2 += v * hm * (1.0 - v * (v + hm))
    if not math.isfinite(g):
        g = _NEG
    return g, g1, g2


@_jit
def _newton(kind, t, lz, kk, usek, q, dim, fam, alpha, beta, iters):
    for _ in range(iters):
        g, g1, g2 = logint(kind, t, lz, kk, usek, q, dim, fam, alpha, beta)
        if g2 < -1e-12 and math.isfinite(g1) and math.isfinite(g2):
            step = -g1 / g2
        elif g1 > 0:
            step = 1.0
        else:
            step = -1.0
        if step > 2.0:
            step = 2.0
        elif step < -2.0:
            step = -2.0
        t += step
        if abs(step) < 1e-7:
            break
    return t


@_jit
def _scan(kind, c, lz, kk, usek, q, dim, fam, alpha, beta):
    """Scan ``c ± 3`` in steps of 0.5.

    Returns the best scan point, the smallest curvature scale over the body
    (log integrand within 4 units of the scan maximum) and the factor by
    which the trapezoid step must shrink to resolve the body. Using the
    largest curvature over the body rather than the curvature at the mode
    resolves plateaus that end in a steep Weibull cliff.
    """
    gs = np.empty(13)
    cs = np.empty(13)
    peak = _NEG
    tb = c
    for j in range(13):
        tj = c + 0.5 * (j - 6)
        g, _, g2 = logint(kind, tj, lz, kk, usek, q, dim, fam, alpha, beta)
        gs[j] = g
        cs[j] = -g2
        if g > peak + 1e-9:
            peak = g
            tb = tj
    curv = 0.0
    for j in range(13):
        if gs[j] > peak - 4.0 and cs[j] > curv:
            curv = cs[j]
    sigma = 1.0 / math.sqrt(curv) if curv > 1e-8 else 5.0
    sigma = min(max(sigma, 1e-3), 5.0)
    # node spacing at distance d from the centre is h*sqrt(w^2 + d^2); keep
    # it below 3.5 local curvature scales everywhere in the body
    w = WIDTH * sigma
    ratio = 1.0
    for j in range(13):
        if gs[j] > peak - 4.0 and cs[j] > 1e-8:
            d = 0.5 * (j - 6)
            ratio = min(ratio, 3.5 / math.sqrt(cs[j] * (w * w + d * d)))
    return tb, sigma, ratio


@_jit
def find_mode(kind, lz, kk, usek, q, dim, fam, alpha, beta, t0):
    """Mode of the log integrand, body curvature scale and step factor."""
    t = _newton(kind, t0, lz, kk, usek, q, dim, fam, alpha, beta, 60)
    tb, sigma, ratio = _scan(kind, t, lz, kk, usek, q, dim, fam, alpha, beta)
    if tb != t:
        g0, _, _ = logint(kind, tb, lz, kk, usek, q, dim, fam, alpha, beta)
        t2 = _newton(kind, tb, lz, kk, usek, q, dim, fam, alpha, beta, 60)
        g2, _, _ = logint(kind, t2, lz, kk, usek, q, dim, fam, alpha, beta)
        t = t2 if g2 >= g0 else tb
        _, sigma, ratio = _scan(kind, t, lz, kk, usek, q, dim, fam, alpha, beta)
    return t, sigma, ratio


@_jit
def body_sigma(kind, c, lz, kk, usek, q, dim, fam, alpha, beta):
    """Body curvature scale and step factor of ``kind`` around a centre."""
    _, sigma, ratio = _scan(kind, c, lz, kk, usek, q, dim, fam, alpha, beta)
    return sigma, ratio


@_jit
def rule_step(h, ratio):
    """Trapezoid step shrunk by the body resolution factor from ``_scan``."""
    return h * min(1.0, ratio)


@_jit
def measure_logs(t, fam, alpha, beta):
    """log T and log ι without derivatives."""
    if beta == 0.0:
        if fam == 1:
            return -t, -t
        return -alpha * t, math.log(alpha) - alpha * t
    bt = beta * t
    if bt > 700.0:
        return _NEG, _NEG
    e = math.expm1(bt) / beta
    if fam == 1:
        y = math.exp(bt)
        lt = -(1.0 - alpha) * t - alpha * e
        return lt, lt + math.log((1.0 - alpha) + alpha * y)
    lt = -bt - alpha * e
    return lt, lt + math.log(beta + alpha * (1.0 + beta * e))


@_jit
def logval2(ka, t, lz, kk, usek, q, dim, fam, alpha, beta):
    """Log integrand of kind ``ka`` and of its companion kind.

    Companions: 0 -> 1 and 3 -> 4; kind 2 has none (returns -inf).
    """
    lt, li = measure_logs(t, fam, alpha, beta)
    if ka == 2:
        e2 = q * math.exp(-2.0 * t)
        if not math.isfinite(e2):
            return _NEG, _NEG
        return -0.5 * e2 - 2.0 * t + li, _NEG
    lx = lz - t
    if lx > 300.0:
        return _NEG, _NEG
    x2 = math.exp(2.0 * lx)
    if ka == 0:
        base = -0.5 * x2
        if usek:
            v = kk * math.exp(lx)
            if v < 9.0:
                base += log_ndtr(v)
        return base + lx + lt, base - t + li
    base = dim * lx - 0.5 * x2
    return base + lt, base + li


@_jit
def pair_sum(ka, two, c, w, h, lz, kk, usek, q, dim, fam, alpha, beta):
    """Trapezoid sums of kind ``ka`` and, if ``two``, its companion kind."""
    ga0, gb0 = logval2(ka, c, lz, kk, usek, q, dim, fam, alpha, beta)
    if not math.isfinite(ga0):
        return 0.0, 0.0
    if not math.isfinite(gb0):
        gb0 = ga0
    sa = 0.0
    sb = 0.0
    kmax = int(_UMAX / h)
    for direction in (1.0, -1.0):
        k = 0 if direction > 0 else 1
        quiet = 0
        while k <= kmax:
            u = direction * k * h
            t = c + w * math.sinh(u)
            wt = h * w * math.cosh(u)
            ga, gb = logval2(ka, t, lz, kk, usek, q, dim, fam, alpha, beta)
            ta = math.exp(ga - ga0) * wt if ga > _NEG else 0.0
            sa += ta
            small = ta <= _EPS * sa
            if two:
                tb = math.exp(gb - gb0) * wt if gb > _NEG else 0.0
                sb += tb
                small = small and tb <= _EPS * sb
            if small:
                quiet += 1
                if quiet >= 1:
                    break
            else:
                quiet = 0
            k += 1
    va = sa * math.exp(ga0)
    vb = sb * math.exp(gb0) if two else 0.0
    return va, vb


@_jit
def _biv_point(z1, z2, rho, fam, alpha, beta, h):
    if rho > 1.0 - 1e-12:
        rho = 1.0 - 1e-12
    s2 = (1.0 - rho) * (1.0 + rho)
    s = math.sqrt(s2)
    lz1 = math.log(z1)
    lz2 = math.log(z2)
    k1 = (z2 / z1 - rho) / s
    k2 = (z1 / z2 - rho) / s
    q = (z1 * z1 - 2.0 * rho * z1 * z2 + z2 * z2) / s2
    c, sg, d = find_mode(0, lz1, k1, True, 0.0, 0.0, fam, alpha, beta, lz1)
    sb, db = body_sigma(1, c, lz1, k1, True, 0.0, 0.0, fam, alpha, beta)
    sg, d = min(sg, sb), min(d, db)
    a1, v1 = pair_sum(0, True, c, WIDTH * sg, rule_step(h, d), lz1, k1, True, 0.0, 0.0, fam, alpha, beta)
    c, sg, d = find_mode(0, lz2, k2, True, 0.0, 0.0, fam, alpha, beta, lz2)
    sb, db = body_sigma(1, c, lz2, k2, True, 0.0, 0.0, fam, alpha, beta)
    sg, d = min(sg, sb), min(d, db)
    a2, v2 = pair_sum(0, True, c, WIDTH * sg, rule_step(h, d), lz2, k2, True, 0.0, 0.0, fam, alpha, beta)
    c, sg, d = find_mode(2, 0.0, 0.0, False, q, 0.0, fam, alpha, beta, 0.5 * math.log(q))
    v12, _ = pair_sum(2, False, c, WIDTH * sg, rule_step(h, d), 0.0, 0.0, False, q, 0.0, fam, alpha, beta)
    norm = 1.0 / math.sqrt(2.0 * math.pi)
    return (a1 + a2) * norm, -v1 * norm, -v2 * norm, -v12 / (2.0 * math.pi * s)


@_jit
def _bivariate_loop(z1, z2, rho, fam, alpha, beta, h, out):
    for i in range(z1.shape[0]):
        v, d1, d2, d12 = _biv_point(z1[i], z2[i], rho[i], fam, alpha, beta, h)
        out[0, i] = v
        out[1, i] = d1
        out[2, i] = d2
        out[3, i] = d12


def bivariate_terms(z1, z2, rho, fam, alpha, beta, h=STEP):
    """``V, V1, V2, V12`` for arrays of pairs.

    Parameters
    ----------
    z1, z2, rho : array_like
        Pair levels (model scale, positive) and correlations; broadcast.
    fam, alpha, beta
        Measure kernel parameters (see ``RadialMeasure.kernel_params``).
    h : float
        Trapezoid step in the sinh variable.

    Returns
    -------
    ndarray, shape (4, n)
    """
    z1, z2, rho = np.broadcast_arrays(
        np.asarray(z1, dtype=float), np.asarray(z2, dtype=float), np.asarray(rho, dtype=float)
    )
    z1, z2, rho = (np.ascontiguousarray(a.ravel()) for a in (z1, z2, rho))
    out = np.empty((4, z1.size))
    _bivariate_loop(z1, z2, rho, int(fam), float(alpha), float(beta), float(h), out)
    return out


@_jit
def _marg_point(z, fam, alpha, beta, h):
    lz = math.log(z)
    c, sg, d = find_mode(0, lz, 0.0, False, 0.0, 0.0, fam, alpha, beta, lz)
    sb, db = body_sigma(1, c, lz, 0.0, False, 0.0, 0.0, fam, alpha, beta)
    sg, d = min(sg, sb), min(d, db)
    a, v = pair_sum(0, True, c, WIDTH * sg, rule_step(h, d), lz, 0.0, False, 0.0, 0.0, fam, alpha, beta)
    norm = 1.0 / math.sqrt(2.0 * math.pi)
    return a * norm, v * norm


@_jit
def _marginal_loop(z, fam, alpha, beta, h, out):
    for i in range(z.shape[0]):
        a, v = _marg_point(z[i], fam, alpha, beta, h)
        out[0, i] = a
        out[1, i] = v


def marginal_terms(z, fam, alpha, beta, h=STEP):
    """Marginal exponent ``V_m(z)`` and density ``v_m(z) = -V_m'(z)``.

    Returns
    -------
    ndarray, shape (2, n)
    """
    z = np.ascontiguousarray(np.asarray(z, dtype=float).ravel())
    out = np.empty((2, z.size))
    _marginal_loop(z, int(fam), float(alpha), float(beta), float(h), out)
    return out


@_jit
def _transform_loop(lu, s0, fam, alpha, beta, h, out_s, out_lv, out_it):
    for i in range(lu.shape[0]):
        s = s0[i]
        lv = 0.0
        it = 0
        for it in range(60):
            a, v = _marg_point(math.exp(s), fam, alpha, beta, h)
            f = math.log(a) + lu[i]
            lv = math.log(v)
            slope = -math.exp(s) * v / a
            step = -f / slope
            if step > 3.0:
                step = 3.0
            elif step < -3.0:
                step = -3.0
            if abs(f) < 1e-14:
                break
            s += step
        out_s[i] = s
        out_lv[i] = lv
        out_it[i] = it


def frechet_to_model(u, s0, fam, alpha, beta, h=STEP):
    """Solve ``V_m(z) = 1/u`` for ``z`` by Newton steps on ``log z``.

    Parameters
    ----------
    u : ndarray
        Unit-Fréchet values.
    s0 : ndarray
        Starting values for ``log z``.

    Returns
    -------
    z : ndarray
    log_density : ndarray
        ``log v_m(z)`` at the solution.
    iterations : ndarray
    """
    lu = np.ascontiguousarray(np.log(np.asarray(u, dtype=float).ravel()))
    s0 = np.ascontiguousarray(np.asarray(s0, dtype=float).ravel())
    s = np.empty_like(lu)
    lv = np.empty_like(lu)
    it = np.empty(lu.size, dtype=np.int64)
    _transform_loop(lu, s0, int(fam), float(alpha), float(beta), float(h), s, lv, it)
    return np.exp(s), lv, it


@_jit
def _elliptical_loop(lzs, dim, fam, alpha, beta, h, out_lm, out_slope):
    const = -(0.5 * dim - 1.0) * math.log(2.0) - math.lgamma(0.5 * dim)
    for i in range(lzs.shape[0]):
        lz = lzs[i]
        c, sg, d = find_mode(3, lz, 0.0, False, 0.0, dim, fam, alpha, beta, lz - 0.5 * math.log(dim))
        sb, db = body_sigma(4, c, lz, 0.0, False, 0.0, dim, fam, alpha, beta)
        sg, d = min(sg, sb), min(d, db)
        a, b = pair_sum(3, True, c, WIDTH * sg, rule_step(h, d), lz, 0.0, False, 0.0, dim, fam, alpha, beta)
        out_lm[i] = math.log(a) + const
        out_slope[i] = -b / a


def elliptical_terms(log_z, dim, fam, alpha, beta, h=0.05):
    """Log elliptical tail mass and its log-log slope at ``log_z`` nodes."""
    lzs = np.ascontiguousarray(np.asarray(log_z, dtype=float).ravel())
    lm = np.empty_like(lzs)
    sl = np.empty_like(lzs)
    _elliptical_loop(lzs, float(dim), int(fam), float(alpha), float(beta), float(h), lm, sl)
    return lm, sl
