"""The map induced by the cat map on the sphere S^2 = T^2/(p ~ -p).

Since f is linear, f(-p) = -f(p) and f descends to a homeomorphism g of the
quotient. Sphere points are handled through canonical torus
representatives only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from cwexp.hyperbolic import CAT, AnosovMap
from cwexp.spaces import Chain, SpherePoint, TorusPoint, as_xy, canon, densify, sphere_canon
from cwexp.stability import cw_step_bound, xi_stability_test
from cwexp.systems import sphere_system


@dataclass(frozen=True)
class SphereMap:
    base: AnosovMap = CAT

    def apply(self, s):
        out = canon(self.base.apply(as_xy(s)))
        return SpherePoint(TorusPoint(*out)) if isinstance(s, SpherePoint) else out

    def inverse(self, s):
        out = canon(self.base.inverse(as_xy(s)))
        return SpherePoint(TorusPoint(*out)) if isinstance(s, SpherePoint) else out

    def system(self):
        return sphere_system(self.base)


SPHERE_G = SphereMap()


def sphere_g_apply(s, g=SPHERE_G):
    return g.apply(s)


def sphere_g_inv(s, g=SPHERE_G):
    return g.inverse(s)


def cone_points():
    """Classes of the four fixed points of p -> -p."""
    return tuple(sphere_canon(TorusPoint(x, y)) for x in (0.0, 0.5) for y in (0.0, 0.5))


CW_NOTE = (
    "sampled evidence only: each listed chain has an iterate of diameter above xi "
    "within the window; this does not prove the property for every continuum"
)


@dataclass(frozen=True)
class CwEvidence:
    xi: float
    horizon: int
    floor: float
    step_bound: int
    first_violations: list = field(default_factory=list)
    excluded: int = 0

    @property
    def all_violated(self):
        return all(v is not None for v in self.first_violations)

    @property
    def max_first_violation(self):
        vals = [abs(v) for v in self.first_violations if v is not None]
        return max(vals) if vals else None

    @property
    def within_bound(self):
        m = self.max_first_violation
        return self.all_violated and (m is None or m <= self.step_bound)

    def to_dict(self):
        return {
            "xi": self.xi,
            "horizon": self.horizon,
            "floor": self.floor,
            "step_bound": self.step_bound,
            "chains": len(self.first_violations),
            "excluded": self.excluded,
            "all_violated": self.all_violated,
            "max_first_violation": self.max_first_violation,
            "first_violations": list(self.first_violations),
            "note": CW_NOTE,
        }


def cw_evidence_sphere(xi, family, N, floor=1e-3, eta=None, g=SPHERE_G):
    """First |n| <= N at which each chain's iterate exceeds diameter xi.

    Chains with diameter below ``floor`` are skipped and counted as excluded.
    """
    system = g.system()
    firsts, excluded = [], 0
    for C in family:
        if C.diam < floor:
            excluded += 1
            continue
        firsts.append(xi_stability_test(system, C, xi, N, eta).first_violation)
    return CwEvidence(float(xi), int(N), float(floor), cw_step_bound(xi, floor, g.base.lam),
                      firsts, excluded)


def random_sphere_chains(count, seed=0, eta=1e-4, length=(1e-3, 4e-3), nodes=3):
    """Seeded sphere chains: polylines with random start, direction and bends.

    Each chain has ``nodes`` segments of equal length with total length in
    ``length``. Draws whose sphere diameter falls below the lower end (tight
    bends, or folding at a cone point) are discarded and redrawn.
    """
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        start = rng.random(2)
        total = rng.uniform(*length)
        theta = rng.uniform(0, 2 * np.pi) + np.cumsum(rng.normal(0, 0.6, nodes))
        steps = (total / nodes) * np.column_stack([np.cos(theta), np.sin(theta)])
        C = densify(np.vstack([start, start + np.cumsum(steps, axis=0)]), eta, "sphere")
        if C.diam >= length[0]:
            out.append(C)
    return out
