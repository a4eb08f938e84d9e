"""How the Weibull exponent beta moves a max-id process away from max-stability.

At beta = 0 the M3 family is the Schlather process: its extremal coefficient
is the same at every level. With beta > 0 the pair becomes asymptotically
independent, so theta(z) climbs towards 2 as the Fréchet level z grows and
chi(z) decays. The tail dependence coefficient eta stays below 1.

Run with ``python3 demos/01_dependence_summaries.py``.
"""

import math

from maxid.measures import RadialMeasure, tail_mass
from maxid.model import CorrelationModel, MaxIdProcess, SiteConfig, chi_level, eta_coefficient

LEVELS = (1.0, 10.0, 100.0, 1000.0)
RHO = 0.5


def main():
    lam = 1.0
    h = -lam * math.log(RHO)
    sites = SiteConfig.from_coords([[0.0, 0.0], [h, 0.0]])
    cm = CorrelationModel(lam, 1.0)

    print("every family is normalized so that T(1) = 1:")
    for m in (RadialMeasure("M1", 0.5, 1.0), RadialMeasure("M2", 2.0, 1.0), RadialMeasure("M3", beta=1.0)):
        print(f"  {m.family} alpha={m.alpha:g} beta={m.beta:g}: T(1) = {tail_mass(m, 1.0):.12f}")

    print(f"\nM3 pair with correlation {RHO}")
    print(f"{'beta':>5s} {'eta':>7s} " + " ".join(f"theta(z={z:g})".rjust(14) for z in LEVELS))
    for beta in (0.0, 0.5, 1.0, 2.0):
        p = MaxIdProcess(RadialMeasure("M3", beta=beta), cm, sites)
        eta = eta_coefficient(cm, beta, h)
        thetas = [chi_level(p, (0, 1), z).theta for z in LEVELS]
        print(f"{beta:5.1f} {eta:7.4f} " + " ".join(f"{t:14.4f}" for t in thetas))

    p = MaxIdProcess(RadialMeasure("M3", beta=1.0), cm, sites)
    print("\nchi(z) for beta = 1, which decays towards 0:")
    for z in LEVELS:
        s = chi_level(p, (0, 1), z)
        print(f"  z={z:7g}: chi={s.chi:.4f}, 2 - theta={s.chi_proxy:.4f}")


if __name__ == "__main__":
    main()
