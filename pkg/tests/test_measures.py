import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from maxid.errors import InvalidParameters
from maxid.measures import (
    FiniteMeasureSpec,
    RadialMeasure,
    build_elliptical_inverse,
    elliptical_tail,
    intensity,
    inv_tail,
    tail_mass,
)

FAMILIES = [("M1", 0.4, 1.3), ("M2", 2.0, 0.7), ("M3", 1.0, 1.0), ("M2", 0.5, 0.0), ("M1", 0.0, 2.0)]


def test_domains():
    with pytest.raises(InvalidParameters):
        RadialMeasure("M1", 1.0, 1.0)
    with pytest.raises(InvalidParameters):
        RadialMeasure("M2", 0.0, 1.0)
    with pytest.raises(InvalidParameters):
        RadialMeasure("M3", 1.0, -0.1)
    with pytest.raises(InvalidParameters):
        RadialMeasure("M4")
    assert RadialMeasure("M3", 7.0, 1.0).alpha == 1.0


def test_tail_mass_examples():
    assert tail_mass(RadialMeasure("M2", 2.0, 0.0), 2.0) == pytest.approx(0.25, rel=1e-15)
    assert tail_mass(RadialMeasure("M3", beta=1.0), 2.0) == pytest.approx(0.5 * math.exp(-1.0), rel=1e-14)
    assert tail_mass(RadialMeasure("M1", 0.0, 0.0), 4.0) == pytest.approx(0.25, rel=1e-15)


@pytest.mark.parametrize("fam,alpha,beta", FAMILIES)
def test_intensity_is_derivative(fam, alpha, beta):
    m = RadialMeasure(fam, alpha, beta)
    r = np.geomspace(0.01, 20, 40)
    h = 1e-6 * r
    fd = -(tail_mass(m, r + h) - tail_mass(m, r - h)) / (2 * h)
    assert np.allclose(intensity(m, r), fd, rtol=1e-6)
    assert np.all(intensity(m, np.geomspace(1e-4, 1e4, 200)) >= 0)


def test_intensity_at_one():
    assert intensity(RadialMeasure("M2", 2.5, 0.7), 1.0) == pytest.approx(3.2, rel=1e-13)
    assert intensity(RadialMeasure("M3", beta=2.0), 1.0) == pytest.approx(3.0, rel=1e-13)


@pytest.mark.parametrize("fam,alpha,beta", FAMILIES)
def test_intensity_integrates_to_tail_difference(fam, alpha, beta):
    m = RadialMeasure(fam, alpha, beta)
    a, b = 0.3, 2.7
    val, _ = integrate.quad(lambda r: intensity(m, r), a, b, epsabs=0, epsrel=1e-11)
    assert val == pytest.approx(tail_mass(m, a) - tail_mass(m, b), rel=1e-9)


@settings(max_examples=80, deadline=None)
@given(
    fam=st.sampled_from(["M1", "M2", "M3"]),
    alpha=st.floats(0.01, 0.99),
    beta=st.floats(0.0, 5.0),
    lu=st.floats(math.log(1e-8), math.log(1e6)),
)
def test_inv_tail_round_trip(fam, alpha, beta, lu):
    m = RadialMeasure(fam, alpha if fam == "M1" else 1 + 4 * alpha, beta)
    u = math.exp(lu)
    r = inv_tail(m, u)
    assert tail_mass(m, r) == pytest.approx(u, rel=1e-10)


def test_inv_tail_examples():
    for fam, a, b in FAMILIES:
        assert inv_tail(RadialMeasure(fam, a, b), 1.0) == pytest.approx(1.0, rel=1e-12)
    assert inv_tail(RadialMeasure("M1", 0.0, 0.0), 0.5) == pytest.approx(2.0, rel=1e-12)
    m = RadialMeasure("M3", beta=1.5)
    u = np.geomspace(1e-6, 1e6, 30)
    assert np.all(np.diff(inv_tail(m, u)) < 0)


def test_elliptical_tail_examples():
    m = RadialMeasure("M1", 0.0, 0.0)
    assert elliptical_tail(m, 1, 1.0) == pytest.approx(math.sqrt(2 / math.pi), rel=1e-8)
    z = np.geomspace(0.05, 50, 50)
    vals = np.array([elliptical_tail(RadialMeasure("M3", beta=1.0), 3, v) for v in z])
    assert np.all(np.diff(vals) < 0)
    assert elliptical_tail(RadialMeasure("M3", beta=1.0), 3, 1e-20) >= 1e12


def test_elliptical_table_round_trip_and_oracle():
    m = RadialMeasure("M3", beta=1.0)
    tab = build_elliptical_inverse(m, 4)
    gen = np.random.default_rng(0)
    r = np.exp(gen.uniform(math.log(0.05), math.log(30), 100))
    assert np.allclose(tab.inverse(tab.forward(r)), r, rtol=1e-6)
    off = np.array([0.123, 0.77, 2.345, 9.87])
    assert np.allclose(tab.forward(off), [elliptical_tail(m, 4, v) for v in off], rtol=1e-6)
    u = np.geomspace(1e-8, 1e8, 40)
    assert np.all(np.diff(tab.inverse(u)) < 0)


def test_elliptical_homogeneity_max_stable():
    m = RadialMeasure("M2", 2.0, 0.0)
    tab = build_elliptical_inverse(m, 3)
    z = np.array([0.3, 1.0, 4.0])
    t = 2.5
    assert np.allclose(tab.forward(t * z), t**-2.0 * tab.forward(z), rtol=1e-6)


def test_weibull_tail_of_elliptical_measure():
    beta = 1.0
    m = RadialMeasure("M3", beta=beta)
    k = 2 * beta / (beta + 2)
    r40 = math.log(elliptical_tail(m, 2, 40.0)) / 40.0**k
    r80 = math.log(elliptical_tail(m, 2, 80.0)) / 80.0**k
    assert r40 < 0 and r80 < 0
    assert abs(r40 - r80) / abs(r80) < 0.10


def test_finite_measure_spec():
    with pytest.raises(InvalidParameters):
        FiniteMeasureSpec(5.0, np.eye(2))
    s = FiniteMeasureSpec(5.0, np.eye(2), allow_small_c=True)
    assert s.boundary_mass == pytest.approx(math.exp(-5.0))
    assert FiniteMeasureSpec(10.0, np.eye(2)).boundary_mass == pytest.approx(4.54e-5, rel=1e-3)


def test_measure_json_round_trip():
    m = RadialMeasure("M2", 3.0, 0.5)
    assert RadialMeasure.from_dict(m.to_dict()) == m
