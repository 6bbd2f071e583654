"""Pseudo-orbits and shadowing for the cat map and its sphere quotient.

For the linear map the shadowing point has a closed form. Write the
per-step errors of a pseudo-orbit as ``e_k = x_{k+1} - A x_k`` (shortest
representative mod Z^2) and split them along the unstable and stable
eigenvectors, ``e_k = eu_k e_u + es_k e_s``. The deviation
``d_k = f^k(X) - x_k`` of a candidate point ``X = x_0 + a e_u + b e_s``
obeys ``d_{k+1} = A d_k - e_k``. Choosing

    a = sum_j lam^-(j+1) eu_j,    b = 0

keeps the unstable component of every ``d_k`` below ``delta / (lam - 1)``
and the stable component below ``delta lam / (lam - 1)``, so that
``|d_k| <= sqrt(3) delta`` for the cat map.

The solver works with exact rationals where it matters: float inputs are
dyadic rationals, the errors ``e_k`` are computed exactly, the series is
summed in mpmath at a precision that grows with the orbit length, and the
verification iterates ``X`` with integer arithmetic. Floating-point
iteration of ``X`` would lose about ``log2(lam)`` bits per step and could
not confirm a 200-step orbit at all.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np
from scipy.optimize import linprog

from cwexp.errors import UnwrapError
from cwexp.hyperbolic import CAT, AnosovMap
from cwexp.spaces import canon, dist, mod1, wrap
from cwexp.systems import System

UNWRAP_LIMIT = 0.25


@dataclass(frozen=True)
class PseudoOrbit:
    pts: np.ndarray
    delta: float
    space: str = "torus"

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.pts, dtype=float))
        pts.setflags(write=False)
        object.__setattr__(self, "pts", pts)
        if not self.delta > 0:
            raise ValueError("delta must be positive")

    def __len__(self):
        return len(self.pts)

    def errors(self, system: System):
        """dist(F(x_k), x_{k+1}) for every consecutive pair."""
        return dist(system.forward(self.pts[:-1]), self.pts[1:], self.space)

    def is_valid(self, system: System):
        return len(self) < 2 or bool(np.all(self.errors(system) < self.delta))

    def to_dict(self):
        return {"pts": self.pts.tolist(), "delta": self.delta, "space": self.space}


@dataclass(frozen=True)
class ShadowResult:
    point: np.ndarray
    eps_achieved: float
    eps_bound: float
    space: str = "torus"
    deviations: np.ndarray = field(default=None, repr=False)
    point_exact: tuple = field(default=None, repr=False, compare=False)
    eps_floor: float | None = None

    @property
    def within_bound(self):
        return self.eps_achieved <= self.eps_bound

    def to_dict(self):
        return {
            "point": [float(c) for c in self.point],
            "eps_achieved": self.eps_achieved,
            "eps_bound": self.eps_bound,
            "space": self.space,
            "eps_floor": self.eps_floor,
        }


def shadow_bound(delta, lam=CAT.lam):
    """Rigorous bound delta sqrt(1 + lam^2) / (lam - 1) (= sqrt(3) delta for the cat map)."""
    return delta * math.sqrt(1.0 + lam * lam) / (lam - 1.0)


def nominal_bound(delta, lam=CAT.lam):
    """The tighter constant 2 delta / (lam - 1); not valid for every pseudo-orbit."""
    return 2.0 * delta / (lam - 1.0)


# -- generation ---------------------------------------------------------------------

def _disk_noise(rng, n, radius):
    r = radius * np.sqrt(rng.random(n))
    theta = 2.0 * np.pi * rng.random(n)
    return np.column_stack([r * np.cos(theta), r * np.sin(theta)])


def make_pseudo_orbit(system: System, x0, length, delta, seed=0):
    """x_{k+1} = F(x_k) + noise, noise uniform in the disk of radius 0.99 delta."""
    if length < 1:
        raise ValueError("length must be at least 1")
    if not delta > 0:
        raise ValueError("delta must be positive")
    rng = np.random.default_rng(seed)
    noise = _disk_noise(rng, length - 1, 0.99 * delta)
    norm = canon if system.space == "sphere" else mod1
    pts = np.empty((length, 2))
    pts[0] = norm(np.asarray(x0, dtype=float))
    for k in range(length - 1):
        pts[k + 1] = norm(system.forward(pts[k:k + 1])[0] + noise[k])
    return PseudoOrbit(pts, float(delta), system.space)


# -- exact helpers -----------------------------------------------------------------------

def _frac_wrap(q: Fraction):
    return q - round(q)


def _exact_errors(pts, A):
    """e_k = wrap(x_{k+1} - A x_k) as Fractions, exactly."""
    F = [(Fraction(float(x)), Fraction(float(y))) for x, y in pts]
    (a, b), (c, d) = A
    errs = []
    for (x, y), (x1, y1) in zip(F[:-1], F[1:]):
        errs.append((_frac_wrap(x1 - (a * x + b * y)), _frac_wrap(y1 - (c * x + d * y))))
    return F, errs


def _precision_bits(length, lam):
    return 96 + int(math.ceil(length * math.log2(lam)))


def _iterate_exact(X, A, steps, bits):
    """Orbit of X under A mod 1 on the grid 2^-bits Z^2, exactly."""
    M = 1 << bits
    p = (X[0].numerator * M // X[0].denominator) % M
    q = (X[1].numerator * M // X[1].denominator) % M
    (a, b), (c, d) = A
    out = [(p, q)]
    for _ in range(steps):
        p, q = (a * p + b * q) % M, (c * p + d * q) % M
        out.append((p, q))
    return out, M


def _deviations(orbit, M, F, space="torus"):
    """Distances between the exact orbit and the pseudo-orbit points.

    On the sphere the orbit point is compared with both lifts of x_k.
    """
    dev = np.empty(len(F))
    for k, ((p, q), (x, y)) in enumerate(zip(orbit, F)):
        P, Q = Fraction(p, M), Fraction(q, M)
        dev[k] = math.hypot(float(_frac_wrap(P - x)), float(_frac_wrap(Q - y)))
        if space == "sphere":
            dev[k] = min(dev[k], math.hypot(float(_frac_wrap(P + x)), float(_frac_wrap(Q + y))))
    return dev


# -- solver -------------------------------------------------------------------------------

def _components(errs, f: AnosovMap):
    """Unstable and stable components of the errors, and the deviation profiles.

    ``a_k`` solves ``a_k = (a_{k+1} + eu_k) / lam`` with ``a_{N-1} = 0`` and
    ``b_k`` solves ``b_{k+1} = b_k / lam - es_k`` with ``b_0 = 0``.
    """
    E = np.array([[float(ex), float(ey)] for ex, ey in errs]).reshape(-1, 2)
    eu, es = E @ f.e_u, E @ f.e_s
    n = len(E) + 1
    a = np.zeros(n)
    b = np.zeros(n)
    for k in range(n - 2, -1, -1):
        a[k] = (a[k + 1] + eu[k]) / f.lam
    for k in range(n - 1):
        b[k + 1] = b[k] / f.lam - es[k]
    return a, b


def _minimax_floor(a, b, lam, scale, directions=64):
    """Lower bound for min over (b0, c) of max_k |(a_k + c lam^(k-N+1), b_k + b0 lam^-k)|.

    Every shadowing point in the same lift differs from the closed-form one
    by a stable offset ``b0`` at time 0 and an unstable offset ``c`` at the
    final time. The Euclidean norm is replaced by the support function of
    an inscribed regular polygon, which never exceeds it, so the optimal
    value of the resulting linear program is a lower bound.
    """
    n = len(a)
    k = np.arange(n)
    gs = lam ** -k
    gu = lam ** (k - (n - 1.0))
    th = 2 * np.pi * np.arange(directions) / directions
    ct, st = np.cos(th)[:, None], np.sin(th)[:, None]
    # rows: ct*(a + c gu) + st*(b + b0 gs) <= t, variables (b0, c, t) in units of scale
    A_ub = np.column_stack([(st * gs).ravel(), (ct * gu).ravel(), -np.ones(directions * n)])
    b_ub = -(ct * a + st * b).ravel() / scale
    res = linprog([0.0, 0.0, 1.0], A_ub=A_ub, b_ub=b_ub,
                  bounds=[(None, None), (None, None), (0, None)], method="highs")
    return float(res.x[2] * scale) if res.success else None


def shadow_solve(po: PseudoOrbit, f: AnosovMap = CAT, floor=True):
    """Closed-form shadowing point of a torus pseudo-orbit of the Anosov map.

    With ``floor`` the result also carries ``eps_floor``: a lower bound
    (up to LP solver tolerance) on the max deviation of every shadowing
    point in the same lift, obtained by optimizing the free offsets.
    """
    if po.space != "torus":
        raise ValueError("shadow_solve expects a torus pseudo-orbit; use sphere_shadow")
    if po.delta >= UNWRAP_LIMIT:
        raise UnwrapError(
            f"delta = {po.delta} is not below {UNWRAP_LIMIT}: nearest-lift unwrapping is "
            "ambiguous; use a smaller delta or a shorter orbit"
        )
    A = f.matrix
    F, errs = _exact_errors(po.pts, A)
    worst = max((max(abs(ex), abs(ey)) for ex, ey in errs), default=Fraction(0))
    if worst >= UNWRAP_LIMIT:
        raise UnwrapError(
            f"a step error reaches {float(worst):.3g} >= {UNWRAP_LIMIT}: nearest-lift unwrapping "
            "is ambiguous; use a smaller delta or a shorter orbit"
        )
    bits = _precision_bits(len(po), f.lam)
    X = _shadow_point(F, errs, A, bits)
    orbit, M = _iterate_exact(X, A, len(po) - 1, bits)
    dev = _deviations(orbit, M, F)
    eps_floor = None
    if floor and errs:
        eps_floor = _minimax_floor(*_components(errs, f), f.lam, po.delta)
    return ShadowResult(
        point=np.array([float(X[0]), float(X[1])]),
        eps_achieved=float(dev.max()),
        eps_bound=shadow_bound(po.delta, f.lam),
        space="torus",
        deviations=dev,
        point_exact=X,
        eps_floor=eps_floor,
    )


def _shadow_point(F, errs, A, bits):
    """x_0 + a_0 e_u with a_0 = sum_j lam^-(j+1) eu_j, rounded to the grid 2^-bits."""
    with mpmath.workprec(bits + 32):
        tr = A[0][0] + A[1][1]
        lam = (tr + mpmath.sqrt(tr * tr - 4)) / 2
        eu = mpmath.matrix([A[0][1], lam - A[0][0]])
        eu /= mpmath.norm(eu)
        a0 = mpmath.mpf(0)
        w = mpmath.mpf(1)
        for ex, ey in errs:
            w /= lam
            a0 += w * (eu[0] * mpmath.mpf(ex.numerator) / ex.denominator
                       + eu[1] * mpmath.mpf(ey.numerator) / ey.denominator)
        scale = mpmath.mpf(2) ** bits
        return tuple(
            Fraction(int(mpmath.nint((mpmath.mpf(x.numerator) / x.denominator + a0 * u) * scale)),
                     1 << bits) % 1
            for x, u in zip(F[0], eu)
        )


def shadow_verify(system: System, po: PseudoOrbit, x, eps):
    """Check dist(F^k(x), x_k) <= eps over the recorded window.

    For integer-matrix systems (the Anosov map and its sphere quotient)
    ``x`` is iterated exactly; ``x`` may be a float pair or a pair of
    Fractions. Other systems are iterated in floating point.
    Returns ``(ok, max_deviation)``.
    """
    if system.matrix is not None:
        X = tuple(c if isinstance(c, Fraction) else Fraction(float(c)) for c in x)
        bits = _precision_bits(len(po), CAT.lam) + 64
        orbit, M = _iterate_exact(X, system.matrix, len(po) - 1, bits)
        F = [(Fraction(float(a)), Fraction(float(b))) for a, b in po.pts]
        dev = _deviations(orbit, M, F, po.space)
    else:
        cur = np.atleast_2d(np.asarray(x, dtype=float))
        dev = np.empty(len(po))
        for k in range(len(po)):
            dev[k] = float(dist(cur[0], po.pts[k], po.space))
            if k + 1 < len(po):
                cur = system.forward(cur)
    m = float(dev.max()) if len(dev) else 0.0
    return m <= eps, m


def openness_modulus(rho):
    """nu(rho) for the antipodal quotient: the sphere metric is realized by a lift, so nu = rho."""
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    return float(rho)


# -- sphere pipeline -----------------------------------------------------------------------

def lift_pseudo_orbit(po: PseudoOrbit, f: AnosovMap = CAT):
    """Torus pseudo-orbit projecting onto a sphere pseudo-orbit, same delta."""
    if po.space != "sphere":
        raise ValueError("expected a sphere pseudo-orbit")
    pts = np.empty_like(po.pts)
    pts[0] = po.pts[0]
    for k in range(1, len(po)):
        target = f.apply(pts[k - 1])
        y = po.pts[k]
        cand = (y, mod1(-y))
        d = [float(dist(target, c, "torus")) for c in cand]
        pts[k] = cand[int(d[1] < d[0])]
    return PseudoOrbit(pts, po.delta, "torus")


def sphere_shadow(po: PseudoOrbit, f: AnosovMap = CAT):
    """Lift, solve on the torus, and project the shadowing point."""
    lifted = lift_pseudo_orbit(po, f)
    res = shadow_solve(lifted, f)
    X = res.point_exact
    orbit, M = _iterate_exact(X, f.matrix, len(po) - 1, _precision_bits(len(po), f.lam))
    F = [(Fraction(float(a)), Fraction(float(b))) for a, b in po.pts]
    dev = _deviations(orbit, M, F, "sphere")
    return ShadowResult(
        point=canon(res.point),
        eps_achieved=float(dev.max()),
        eps_bound=res.eps_bound,
        space="sphere",
        deviations=dev,
        point_exact=X,
        eps_floor=res.eps_floor,
    )


# -- brute-force oracle ------------------------------------------------------------------------

def brute_force_shadow(po: PseudoOrbit, f: AnosovMap = CAT, window=4e-3, resolution=1e-4,
                       center=None):
    """Grid minimizer of the max deviation around x_0 (short torus orbits only)."""
    c = np.asarray(po.pts[0] if center is None else center, dtype=float)
    k = int(round(window / resolution))
    g = np.arange(-k, k + 1) * resolution
    X = c + np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1).reshape(-1, 2)
    best = np.zeros(len(X))
    cur = X.copy()
    A = np.asarray(f.matrix, dtype=float)
    for j, xj in enumerate(po.pts):
        if j:
            cur = cur @ A.T
        d = wrap(cur - xj)
        best = np.maximum(best, np.hypot(d[:, 0], d[:, 1]))
    i = int(np.argmin(best))
    return mod1(X[i]), float(best[i])
