"""Finite-horizon stability of chains, escape certificates and related tools.

Continua are represented by :class:`~cwexp.spaces.Chain` objects. A chain
is read as a parametrized path: its points are the nodes of a polyline in
a continuous plane lift, and the parameter is the node index. When the
image of a chain under a map has gaps wider than the mesh bound, new
parameter values are inserted by bisection and pushed through the same
number of iterates, so that every returned chain is again an eta-chain.

Every statement about all ``n`` in Z is checked on a finite window whose
size is part of the report. A "stable" verdict is therefore a necessary
condition only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from cwexp.errors import PreconditionError, ResourceError
from cwexp.hyperbolic import LAMBDA
from cwexp.perturbation import PerturbedMap, default_map, fixed_point
from cwexp.spaces import Chain, densify, dist, metric, project, unwrap_path
from cwexp.systems import System, ttilde_system

DEFAULT_ETA = 1e-4
DEFAULT_HORIZON = 64
DEFAULT_BUDGET = 1_000_000

FINITE_WINDOW_NOTE = (
    "finite-window check: a 'stable' verdict is a necessary condition only"
)


# -- propagation -----------------------------------------------------------------

class ChainPropagator:
    """Iterates a chain one step at a time in a fixed direction.

    ``direction`` is +1 for the forward map and -1 for the inverse.
    """

    def __init__(self, system: System, C: Chain, eta=None, direction=1, budget=DEFAULT_BUDGET):
        self.system = system
        self.eta = float(C.eta if eta is None else eta)
        self.direction = 1 if direction >= 0 else -1
        self.budget = int(budget)
        self.space = system.space
        self._dist = metric(self.space)
        self._nodes = unwrap_path(np.asarray(C.pts, dtype=float), C.space)
        self.k = 0
        t = np.arange(len(self._nodes), dtype=float)
        self.t, self.pts = self._refine(t, project(self._nodes.copy(), self.space))

    def _path(self, t):
        i = np.clip(np.floor(t).astype(int), 0, max(len(self._nodes) - 2, 0))
        if len(self._nodes) == 1:
            return np.repeat(self._nodes, len(t), axis=0)
        s = (t - i)[:, None]
        return self._nodes[i] * (1 - s) + self._nodes[i + 1] * s

    def _image(self, t):
        return self.system.step(project(self._path(t), self.space), self.direction * self.k)

    def chain(self):
        return Chain(self.pts, self.eta * (1 + 1e-9), self.space)

    def _refine(self, t, pts):
        """Bisect parameter gaps until consecutive image points are within eta."""
        step = self.direction * self.k
        while len(t) > 1:
            gaps = self._dist(pts[:-1], pts[1:])
            bad = np.flatnonzero(gaps > self.eta)
            if bad.size == 0:
                break
            if len(t) + bad.size > self.budget:
                raise ResourceError(
                    f"chain refinement exceeded {self.budget} points at step {step}", step=step
                )
            tm = 0.5 * (t[bad] + t[bad + 1])
            if np.any((tm <= t[bad]) | (tm >= t[bad + 1])):
                raise ResourceError(
                    f"chain refinement stalled at step {step}: "
                    "the image is not continuous at parameter resolution",
                    step=step,
                )
            new = self._image(tm)
            t = np.insert(t, bad + 1, tm)
            pts = np.insert(pts, bad + 1, new, axis=0)
        return t, pts

    def advance(self):
        fn = self.system.forward if self.direction > 0 else self.system.inverse
        self.k += 1
        self.t, self.pts = self._refine(self.t, fn(self.pts))
        return self.chain()


def propagate_chain(system: System, C: Chain, steps: int, eta=None, backward=False,
                    budget=DEFAULT_BUDGET):
    """Chains ``[C, F(C), ..., F^steps(C)]`` with ``F`` the map or its inverse."""
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    prop = ChainPropagator(system, C, eta, -1 if backward else 1, budget)
    out = [prop.chain()]
    for _ in range(steps):
        out.append(prop.advance())
    return out


# -- xi-stability ---------------------------------------------------------------------

@dataclass(frozen=True)
class StabilityReport:
    horizon: int
    xi: float
    eta: float
    steps: tuple
    diams: tuple
    verdict: str
    first_violation: int | None

    @property
    def stable(self):
        return self.verdict == "stable"

    def to_dict(self):
        return {
            "horizon": self.horizon,
            "xi": self.xi,
            "eta": self.eta,
            "steps": list(self.steps),
            "diams": list(self.diams),
            "verdict": self.verdict,
            "first_violation": self.first_violation,
            "note": FINITE_WINDOW_NOTE,
        }


def _order(N):
    yield 0
    for k in range(1, N + 1):
        yield k
        yield -k


def xi_stability_test(system: System, C: Chain, xi, N=DEFAULT_HORIZON, eta=None,
                      budget=DEFAULT_BUDGET):
    """Diameters of F^n(C) for n = 0, 1, -1, 2, -2, ... up to |n| = N.

    Stops at the first iterate with diameter above ``xi``.
    """
    if not xi > 0:
        raise ValueError("xi must be positive")
    fwd = ChainPropagator(system, C, eta, 1, budget)
    bwd = ChainPropagator(system, C, eta, -1, budget)
    steps, diams = [], []
    first = None
    for n in _order(N):
        if n == 0:
            ch = fwd.chain()
        elif n > 0:
            ch = fwd.advance()
        else:
            ch = bwd.advance()
        steps.append(n)
        diams.append(ch.diam)
        if ch.diam > xi:
            first = n
            break
    order = np.argsort(steps, kind="stable")
    return StabilityReport(
        horizon=N,
        xi=float(xi),
        eta=fwd.eta,
        steps=tuple(int(steps[i]) for i in order),
        diams=tuple(float(diams[i]) for i in order),
        verdict="stable" if first is None else "violated",
        first_violation=first,
    )


def cw_step_bound(xi, floor=1e-3, lam=LAMBDA):
    """ceil(ln(xi/floor)/ln lam) + 2 iterates."""
    return math.ceil(math.log(xi / floor) / math.log(lam)) + 2


# -- escape certificates ---------------------------------------------------------------

def escape_bound(m, xi, lam=LAMBDA):
    """Steps after which every point of H+_m inside K has left K under T.

    A point of the hyperbola xy = 2/4^m inside K has x >= 2 4^-m / xi, and
    T multiplies x by lam, so it exits the box |x| <= xi within
    ceil(ln(xi^2 4^m / 2) / ln lam) steps.
    """
    arg = xi * xi * 4.0 ** m / 2.0
    if arg <= 1.0:
        return 0
    return math.ceil(math.log(arg) / math.log(lam))


@dataclass(frozen=True)
class EscapeCertificate:
    n: int
    m: int
    n_star: int
    n_exit: int | None
    exit_diam: float
    contained: bool
    xi: float

    @property
    def valid(self):
        return (
            self.n_exit is not None
            and self.n_exit <= self.n_star
            and self.exit_diam > self.xi / 2
            and self.contained
        )

    def to_dict(self):
        return {
            "n": self.n,
            "m": self.m,
            "n_star": self.n_star,
            "n_exit": self.n_exit,
            "exit_diam": self.exit_diam,
            "contained": self.contained,
            "valid": self.valid,
        }


def _check_escape_inputs(n, m, C: Chain, pmap: PerturbedMap):
    xi = pmap.boxes.xi
    if not m > n >= pmap.n0:
        raise PreconditionError(f"need m > n >= n0 = {pmap.n0}, got n = {n}, m = {m}")
    if C.space != "plane":
        raise PreconditionError("escape chains live in chart (plane) coordinates")
    for k in (n, m):
        gap = float(np.min(dist(C.pts, fixed_point(k), "plane")))
        if gap > C.eta:
            raise PreconditionError(f"chain misses u_{k} by {gap:.3g} > eta = {C.eta:.3g}")
    if C.diam > xi / 2:
        raise PreconditionError(f"chain diameter {C.diam:.4g} exceeds xi/2 = {xi / 2:.4g}")


def escape_experiment(n, m, C: Chain, pmap: PerturbedMap | None = None,
                      eta=None, budget=DEFAULT_BUDGET, max_steps=None):
    """Iterate C under T-tilde until some point leaves K."""
    pmap = pmap or default_map()
    _check_escape_inputs(n, m, C, pmap)
    boxes = pmap.boxes
    n_star = escape_bound(m, boxes.xi, pmap.lam)
    max_steps = 4 * n_star + 16 if max_steps is None else max_steps
    prop = ChainPropagator(ttilde_system(pmap), C, eta, 1, budget)
    ch = prop.chain()
    contained = True
    for k in range(max_steps + 1):
        if k > 0:
            ch = prop.advance()
        contained &= bool(np.all(boxes.in_K_or_TK(ch.pts, pmap.lam)))
        if not np.all(boxes.in_K(ch.pts)):
            return EscapeCertificate(n, m, n_star, k, float(ch.diam), contained, boxes.xi)
    return EscapeCertificate(n, m, n_star, None, float(ch.diam), contained, boxes.xi)


def straight_chain(n, m, eta=DEFAULT_ETA):
    return densify([fixed_point(n), fixed_point(m)], eta, "plane")


def random_monotone_chains(n, m, count, seed=0, eta=DEFAULT_ETA, nodes=6):
    """Seeded piecewise-linear chains from u_n to u_m with monotone coordinates.

    The first member is the straight segment. The others have ``nodes``
    interior vertices with independently sorted x and y coordinates, so
    they stay in the box spanned by u_n and u_m and have the same diameter.
    """
    if count <= 0:
        return []
    rng = np.random.default_rng(seed)
    a, b = fixed_point(n), fixed_point(m)
    family = [straight_chain(n, m, eta)]
    for _ in range(count - 1):
        xs = np.sort(rng.uniform(b[0], a[0], nodes))[::-1]
        ys = np.sort(rng.uniform(b[1], a[1], nodes))[::-1]
        pts = np.vstack([a, np.column_stack([xs, ys]), b])
        family.append(densify(pts, eta, "plane"))
    return family


SEPARATION_NOTE = (
    "sampled evidence for a statement about every continuum joining the two fixed "
    "points; the analytic part: the chart image of any such continuum meets the "
    "hyperbola xy = 2/4^m, where T-tilde = T, and that point leaves K within n_star "
    "steps while the fixed point u_n stays in L"
)


@dataclass(frozen=True)
class SeparationReport:
    n: int
    m: int
    certificates: list = field(default_factory=list)

    @property
    def all_valid(self):
        return all(c.valid for c in self.certificates)

    @property
    def max_exit(self):
        exits = [c.n_exit for c in self.certificates if c.n_exit is not None]
        return max(exits) if exits else None

    def to_dict(self):
        return {
            "n": self.n,
            "m": self.m,
            "count": len(self.certificates),
            "all_valid": self.all_valid,
            "max_exit": self.max_exit,
            "certificates": [c.to_dict() for c in self.certificates],
            "note": SEPARATION_NOTE,
        }


def class_separation(n, m, family, pmap: PerturbedMap | None = None, eta=None):
    """Escape certificates for a family of chains joining u_n and u_m."""
    pmap = pmap or default_map()
    certs = [escape_experiment(n, m, C, pmap, eta) for C in family]
    return SeparationReport(n, m, certs)


# -- half cw-expansivity constant ----------------------------------------------------------

@dataclass(frozen=True)
class HalfCwProbe:
    alpha: float
    epsilon: float
    m_found: int | None
    n_max: int
    chains: int

    @property
    def found(self):
        return self.m_found is not None

    def to_dict(self):
        return {
            "alpha": self.alpha,
            "epsilon": self.epsilon,
            "m_found": self.m_found,
            "n_max": self.n_max,
            "chains": self.chains,
            "note": "sampled evidence over the given chain family only",
        }


def _sup_profile(system, C, N_max, alpha, eta):
    """sup_{|n| <= m} diam F^n(C) for m = 0..N_max, stopping once above alpha."""
    fwd = ChainPropagator(system, C, eta, 1)
    bwd = ChainPropagator(system, C, eta, -1)
    prof = [C.diam]
    while len(prof) <= N_max and prof[-1] <= alpha:
        prof.append(max(prof[-1], fwd.advance().diam, bwd.advance().diam))
    prof += [np.inf] * (N_max + 1 - len(prof))
    return prof


def half_cw_m_finder(system: System, alpha, epsilon, sample_chains, N_max, xi=None, eta=None):
    """Smallest m <= N_max for which the implication holds on every sampled chain.

    The implication: sup over |n| <= m of diam F^n(C) <= alpha forces
    diam C < epsilon / 2.
    """
    if xi is not None and not xi < epsilon < alpha:
        raise PreconditionError("need xi < epsilon < alpha")
    if not epsilon < alpha:
        raise PreconditionError("need epsilon < alpha")
    chains = list(sample_chains)
    if not chains:
        raise PreconditionError("the sample family is empty")
    profiles = [(C.diam, _sup_profile(system, C, N_max, alpha, eta)) for C in chains]
    for m in range(N_max + 1):
        if all(d < epsilon / 2 or prof[m] > alpha for d, prof in profiles):
            return HalfCwProbe(float(alpha), float(epsilon), m, N_max, len(chains))
    return HalfCwProbe(float(alpha), float(epsilon), None, N_max, len(chains))


# -- combined metric ---------------------------------------------------------------------

def dist3_constant(xi, D1):
    """K = xi / (1 + 2 D1)."""
    return xi / (1.0 + 2.0 * D1)


def dist3_combine(K_const, dist1, class_of, dist2):
    """Metric K dist1(x, y) + dist2([x], [y])."""
    if not K_const > 0:
        raise ValueError("K_const must be positive")

    def dist3(x, y):
        return K_const * dist1(x, y) + dist2(class_of(x), class_of(y))

    return dist3
