import math

import numpy as np
import pytest
from scipy import integrate, stats

from maxid.errors import InvalidParameters
from maxid.measures import FiniteMeasureSpec, RadialMeasure
from maxid.model import (
    CorrelationModel,
    MaxIdProcess,
    SiteConfig,
    bivariate_loglik,
    bivariate_terms,
    chi_level,
    corr,
    eta_coefficient,
    exponent_V,
    exponent_V_partial,
    finite_model_bivariate_loglik,
    finite_model_cdf,
    marginal_density,
    marginal_level,
    marginal_quantile,
    marginal_V,
    theta_level,
)
from maxid.numerics import RngStream


def pair_process(m, rho):
    h = -math.log(rho)
    return MaxIdProcess(m, CorrelationModel(1.0, 1.0), SiteConfig.from_coords([[0, 0], [h, 0]]))


def test_correlation():
    cm = CorrelationModel(0.5, 1.0)
    assert corr(cm, 0.0) == 1.0
    assert corr(cm, 0.5) == pytest.approx(math.exp(-1))
    with pytest.raises(InvalidParameters):
        CorrelationModel(0.5, 2.5)
    with pytest.raises(InvalidParameters):
        corr(cm, -1.0)


def test_sites():
    g = SiteConfig.grid(6)
    assert g.dim == 36 and g.distances.shape == (36, 36)
    with pytest.raises(InvalidParameters):
        SiteConfig(("a", "a"), [[0, 0], [1, 1]])


def test_marginal_v_schlather_closed_form():
    # β = 0, α = 1 is the Schlather model: V_m(z) = E[W+]/z
    m = RadialMeasure("M2", 1.0, 0.0)
    for z in (0.3, 1.0, 7.0):
        assert marginal_V(m, z) == pytest.approx(1 / (math.sqrt(2 * math.pi) * z), rel=1e-9)


def test_marginal_density_is_derivative():
    m = RadialMeasure("M3", beta=1.0)
    for z in (0.2, 1.0, 5.0):
        h = 1e-5 * z
        fd = -(marginal_V(m, z + h) - marginal_V(m, z - h)) / (2 * h)
        assert marginal_density(m, z) == pytest.approx(fd, rel=1e-6)


def test_marginal_level_and_quantile():
    m = RadialMeasure("M1", 0.5, 1.0)
    z = marginal_level(m, 0.7)
    assert marginal_V(m, z) == pytest.approx(0.7, rel=1e-10)
    q = marginal_quantile(m, 0.99)
    assert math.exp(-marginal_V(m, q)) == pytest.approx(0.99, rel=1e-10)


def test_exponent_v_bounds():
    m = RadialMeasure("M3", beta=1.0)
    p = pair_process(m, 0.5)
    z = (0.8, 1.3)
    v = exponent_V(p, z)
    vm = marginal_V(m, np.array(z))
    assert max(vm) <= v <= vm.sum()


def test_exponent_v_three_sites_against_pairs():
    m = RadialMeasure("M3", beta=1.0)
    sites = SiteConfig.from_coords([[0, 0], [0.3, 0], [0, 0.4]])
    p = MaxIdProcess(m, CorrelationModel(0.5), sites)
    # very large third level reduces the triple to the pair
    z = np.array([1.0, 1.2, 1e6])
    v3, se = exponent_V(p, z, rng=RngStream(0, 0), target_err=1e-4, full_output=True)
    v2 = exponent_V(p.with_sites(sites.subset([0, 1])), z[:2])
    assert v3 == pytest.approx(v2, rel=1e-3)


@pytest.mark.parametrize("fam,alpha,beta,rho", [("M3", 1.0, 1.0, 0.5), ("M1", 0.4, 2.0, 0.8), ("M2", 3.0, 0.5, 0.2)])
def test_partials_match_finite_differences(fam, alpha, beta, rho):
    p = pair_process(RadialMeasure(fam, alpha, beta), rho)
    z1, z2 = 0.9, 1.7
    h = 1e-4
    v1 = exponent_V_partial(p, (z1, z2), "1")
    v2 = exponent_V_partial(p, (z1, z2), "2")
    v12 = exponent_V_partial(p, (z1, z2), "both")
    fd1 = (exponent_V(p, (z1 + h, z2)) - exponent_V(p, (z1 - h, z2))) / (2 * h)
    fd2 = (exponent_V(p, (z1, z2 + h)) - exponent_V(p, (z1, z2 - h))) / (2 * h)
    fd12 = (exponent_V_partial(p, (z1, z2 + h), "1") - exponent_V_partial(p, (z1, z2 - h), "1")) / (2 * h)
    assert v1 == pytest.approx(fd1, rel=1e-6)
    assert v2 == pytest.approx(fd2, rel=1e-6)
    assert v12 == pytest.approx(fd12, rel=1e-5)


def test_kernel_matches_adaptive_quadrature():
    m = RadialMeasure("M3", beta=2.0)
    rho = 0.6
    p = pair_process(m, rho)
    z1 = np.array([0.4, 1.0, 3.0])
    z2 = np.array([2.0, 0.7, 3.5])
    terms = bivariate_terms(m, z1, z2, np.full(3, rho))
    for i in range(3):
        ref = [
            exponent_V(p, (z1[i], z2[i])),
            exponent_V_partial(p, (z1[i], z2[i]), "1"),
            exponent_V_partial(p, (z1[i], z2[i]), "2"),
            exponent_V_partial(p, (z1[i], z2[i]), "both"),
        ]
        assert np.allclose(terms[:, i], ref, rtol=1e-6)


def test_bivariate_density_integrates_to_one():
    p = pair_process(RadialMeasure("M3", beta=1.0), 0.5)
    # Gauss-Legendre on log z over the marginal [1e-6, 1 - 1e-6] quantile band
    lo = math.log(marginal_quantile(p.measure, 1e-6))
    hi = math.log(marginal_quantile(p.measure, 1 - 1e-6))
    x, w = np.polynomial.legendre.leggauss(80)
    t = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
    w = 0.5 * (hi - lo) * w
    z = np.exp(t)
    zz1, zz2 = np.meshgrid(z, z, indexing="ij")
    terms = bivariate_terms(p.measure, zz1.ravel(), zz2.ravel(), np.full(zz1.size, 0.5))
    dens = np.exp(-terms[0] + np.log(terms[1] * terms[2] - terms[3])).reshape(zz1.shape)
    total = np.einsum("i,j,ij,i,j->", w, w, dens, z, z)
    assert total == pytest.approx(1.0, abs=1e-3)


def test_bivariate_loglik_finite():
    p = pair_process(RadialMeasure("M2", 2.0, 1.0), 0.3)
    assert np.isfinite(bivariate_loglik(p, (0.5, 2.0)))


def test_theta_schlather():
    p = pair_process(RadialMeasure("M2", 1.0, 0.0), 0.5)
    for z in (0.5, 10.0):
        assert theta_level(p, (0, 1), z) == pytest.approx(1 + math.sqrt(0.25), abs=2e-3)


def test_chi_and_eta():
    p = pair_process(RadialMeasure("M3", beta=2.0), 0.5)
    s = chi_level(p, (0, 1), 10.0)
    assert 0.0 <= s.chi <= 1.0 and 1.0 <= s.theta <= 2.0
    assert eta_coefficient(CorrelationModel(1.0), 2.0, -math.log(0.5)) == pytest.approx(0.75**0.5)
    assert eta_coefficient(CorrelationModel(1.0), 0.0, 1.0) == 1.0


def test_finite_model():
    spec = FiniteMeasureSpec(10.0, np.array([[1, 0.4], [0.4, 1]]))
    z = (0.5, 1.0)
    ref = stats.multivariate_normal(cov=spec.corr).cdf(z)
    assert finite_model_cdf(spec, z) == pytest.approx(math.exp(-10 * (1 - ref)), rel=1e-6)
    # density integrates to Pr(no boundary) = 1 - exp(-c)
    f = lambda a, b: math.exp(finite_model_bivariate_loglik(spec, (a, b)))
    mass, _ = integrate.dblquad(f, -8, 8, -8, 8, epsabs=1e-8)
    assert mass == pytest.approx(1 - math.exp(-10), abs=1e-4)
