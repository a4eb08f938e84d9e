import math

import numpy as np
import pytest

from maxid.errors import InvalidParameters
from maxid.measures import FiniteMeasureSpec, RadialMeasure
from maxid.model import CorrelationModel, MaxIdProcess, SiteConfig, exponent_V, marginal_V
from maxid.numerics import RngStream
from maxid.simulate import SimulationConfig, simulate_exact, simulate_finite, simulate_truncated


def process(beta=1.0, lam=0.5):
    sites = SiteConfig.from_coords([[0, 0], [0.25, 0.1]])
    return MaxIdProcess(RadialMeasure("M3", beta=beta), CorrelationModel(lam), sites)


def test_config_validation():
    with pytest.raises(InvalidParameters):
        SimulationConfig(0)
    with pytest.raises(InvalidParameters):
        SimulationConfig(10, mode="other")
    with pytest.raises(InvalidParameters):
        simulate_exact(process(), SimulationConfig(10, mode="epsilon_truncated"))


def test_exact_deterministic_across_workers():
    p = process()
    a = simulate_exact(p, SimulationConfig(3000, rng=RngStream(4, 0), chunk=500, workers=1))
    b = simulate_exact(p, SimulationConfig(3000, rng=RngStream(4, 0), chunk=500, workers=4))
    assert a.tobytes() == b.tobytes()
    assert a.shape == (3000, 2) and np.all(a > 0)


def test_exact_margins_and_joint_cdf():
    p = process(beta=2.0)
    n = 40_000
    z = simulate_exact(p, SimulationConfig(n, rng=RngStream(7, 0)))
    for lvl in (0.5, 1.5):
        emp = np.mean(z[:, 0] <= lvl)
        ref = math.exp(-marginal_V(p.measure, lvl))
        assert abs(emp - ref) < 4 * math.sqrt(ref * (1 - ref) / n)
    q = np.array([1.0, 0.8])
    emp = np.mean(np.all(z <= q, axis=1))
    ref = math.exp(-exponent_V(p, q))
    assert abs(emp - ref) < 4 * math.sqrt(ref * (1 - ref) / n)


def test_mass_scale_is_power_of_cdf():
    p = process()
    n = 30_000
    z = simulate_exact(p, SimulationConfig(n, rng=RngStream(8, 0), mass_scale=3.0))
    ref = math.exp(-3.0 * marginal_V(p.measure, 2.0))
    emp = np.mean(z[:, 1] <= 2.0)
    assert abs(emp - ref) < 4 * math.sqrt(ref * (1 - ref) / n)


def test_truncated_approximates_exact():
    p = process()
    n = 20_000
    z, counts = simulate_truncated(
        p, SimulationConfig(n, mode="epsilon_truncated", epsilon=0.05, rng=RngStream(9, 0)), return_counts=True
    )
    assert counts.dtype == np.int64 and np.all(counts >= 0)
    ref = math.exp(-marginal_V(p.measure, 1.0))
    emp = np.mean(z[:, 0] <= 1.0)
    assert abs(emp - ref) < 4 * math.sqrt(ref * (1 - ref) / n)


@pytest.mark.parametrize("c", [5.0, 10.0])
def test_finite_boundary_frequency(c):
    spec = FiniteMeasureSpec(c, np.array([[1, 0.3], [0.3, 1]]), allow_small_c=True)
    n = 100_000
    z, boundary = simulate_finite(spec, n, rng=RngStream(int(c), 1))
    p0 = math.exp(-c)
    assert abs(boundary.mean() - p0) < 3 * math.sqrt(p0 * (1 - p0) / n)
    assert np.all(np.isneginf(z[boundary]))
