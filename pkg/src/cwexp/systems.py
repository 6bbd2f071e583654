"""Uniform wrappers around the maps used by experiments.

A :class:`System` bundles a forward map, its inverse and the ambient space
whose metric is used for diameters. All maps act on ``(n, 2)`` arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from cwexp.hyperbolic import CAT, LAMBDA, AnosovMap, LinearModel
from cwexp.perturbation import PerturbedMap, default_map
from cwexp.spaces import canon


@dataclass(frozen=True)
class System:
    name: str
    space: str
    forward: Callable
    inverse: Callable
    matrix: Optional[tuple] = None

    def step(self, pts, n=1):
        """Apply the map ``n`` times (the inverse when ``n < 0``)."""
        fn = self.forward if n >= 0 else self.inverse
        out = np.asarray(pts, dtype=float)
        for _ in range(abs(n)):
            out = fn(out)
        return out


def anosov_system(f: AnosovMap = CAT):
    return System("anosov", "torus", f.apply, f.inverse, f.matrix)


def sphere_system(f: AnosovMap = CAT):
    return System(
        "sphere",
        "sphere",
        lambda p: canon(f.apply(p)),
        lambda p: canon(f.inverse(p)),
        f.matrix,
    )


def linear_system(lam=LAMBDA):
    T = LinearModel(lam)
    return System("linear", "plane", T.apply, T.inverse)


def ttilde_system(pmap: PerturbedMap | None = None):
    pmap = pmap or default_map()
    return System("ttilde", "plane", pmap.apply, pmap.inverse)


def gpert_system(pmap: PerturbedMap | None = None):
    pmap = pmap or default_map()
    return System("gpert", "torus", pmap.gpert_apply, pmap.gpert_inverse)


SYSTEMS = {
    "anosov": anosov_system,
    "sphere": sphere_system,
    "linear": linear_system,
    "ttilde": ttilde_system,
    "gpert": gpert_system,
}


def get_system(name, pmap: PerturbedMap | None = None):
    if name not in SYSTEMS:
        raise KeyError(f"unknown map {name!r}; choose from {sorted(SYSTEMS)}")
    if name in ("ttilde", "gpert"):
        return SYSTEMS[name](pmap)
    return SYSTEMS[name]()
