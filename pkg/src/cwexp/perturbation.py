"""Area-preserving perturbation of the hyperbolic model with infinitely many fixed points.

Geometry, in the hyperbolic coordinates ``(u, v) = (xy, log(y/x)/2)`` with
``L = log(lam)``::

    D = [1/2, 2] x [-L/2, 3L/2]      (D+ : u >= 1, D- : u <= 1, l_D : u = 1)
    E = T(D) = [1/2, 2] x [-3L/2, L/2]

The homothety ``M_n(p) = p / 2**n`` keeps ``v`` and divides ``u`` by ``4**n``,
so the levels ``D_n = M_n(D)`` occupy the disjoint u-bands
``[4**-n / 2, 2 * 4**-n]``; the hyperbolas ``H_n: u = 2 / 4**n`` are their
shared edges.

On ``D`` the map ``T`` is replaced by ``T0 = T o tau`` where ``tau`` is a
compactly supported twist of the (u, v) rectangle: rotation by pi inside
radius ``r* = L/2`` about ``c = (1, L/2)``, an angle decreasing linearly to
zero on ``[r*, R0]``, identity beyond. ``tau`` sends ``(1, 0)`` to ``(1, L)``
and the shear brings it back, so ``T0`` fixes ``(1, 1)``. Rotations about a
centre preserve area, and so do the (u, v) coordinates, hence ``T0`` does.

All array routines are written so that a complex-valued input with a tiny
imaginary part propagates analytically (region decisions use the real
part); :mod:`cwexp.area` relies on this for complex-step Jacobians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from cwexp.errors import DomainError, GeometryError
from cwexp.hyperbolic import (
    LAMBDA,
    EigenChart,
    HyperCoord,
    LinearModel,
    hyper_backward,
    hyper_forward,
)
from cwexp.spaces import PlanePoint, TorusPoint, as_xy, set_diameter

UNDERFLOW_U = 1e-300


@dataclass(frozen=True)
class RegionSpec:
    lam: float = LAMBDA

    @property
    def L(self):
        return math.log(self.lam)

    @property
    def u_band(self):
        return (0.5, 2.0)

    @property
    def v_band_D(self):
        return (-0.5 * self.L, 1.5 * self.L)

    @property
    def v_band_E(self):
        return (-1.5 * self.L, 0.5 * self.L)

    def hyperbola(self, n):
        """u-value of H_n: xy = 2 / 4**n."""
        return math.ldexp(2.0, -2 * n)

    def corners(self, which="D"):
        lo, hi = self.v_band_D if which == "D" else self.v_band_E
        uv = np.array([[u, v] for u in self.u_band for v in (lo, hi)])
        return hyper_backward(uv)

    def max_corner_norm(self):
        """Largest Euclidean norm over D and E; equals sqrt(2 lam^3 + 2 / lam^3)."""
        c = np.concatenate([self.corners("D"), self.corners("E")])
        return float(np.max(np.hypot(c[:, 0], c[:, 1])))

    def boundary(self, which="D", n_per_edge=2048):
        """Dense sample of the boundary of D or E in the plane."""
        lo, hi = self.v_band_D if which == "D" else self.v_band_E
        t = np.linspace(0.0, 1.0, n_per_edge)
        edges = []
        for u in self.u_band:
            edges.append(np.column_stack([np.full_like(t, u), lo + (hi - lo) * t]))
        for v in (lo, hi):
            edges.append(np.column_stack([0.5 + 1.5 * t, np.full_like(t, v)]))
        return hyper_backward(np.concatenate(edges))


@dataclass(frozen=True)
class TwistParams:
    """Twist tau in (optionally squeezed) hyperbolic coordinates.

    The squeeze ``(u, v) -> (a u, v / a)`` is area preserving; in squeezed
    coordinates the centre is ``(a, L / 2a)`` and ``r* = L / 2a``. The disk of
    radius ``R0`` must sit inside the image of the D rectangle, which with
    ``a = 1`` reads ``L/2 < R0 < 1/2``.
    """

    lam: float = LAMBDA
    R0: float = 0.49
    a: float = 1.0

    def __post_init__(self):
        if not self.lam > 1:
            raise GeometryError("lambda must exceed 1")
        if not self.a >= 1:
            raise GeometryError("squeeze factor a must be >= 1")
        lo, hi = self.r_star, min(self.a / 2, math.log(self.lam) / self.a)
        if not lo < self.R0 < hi:
            raise GeometryError(
                f"twist radius R0 = {self.R0} must satisfy r* = {lo:.6g} < R0 < {hi:.6g}"
            )

    @property
    def center(self):
        return (self.a, 0.5 * math.log(self.lam) / self.a)

    @property
    def r_star(self):
        return self.center[1]

    def angle(self, r):
        """Rotation angle: pi on [0, r*], linear to 0 on [r*, R0], 0 beyond."""
        rr = np.real(r)
        ramp = math.pi * (self.R0 - r) / (self.R0 - self.r_star)
        return np.where(rr <= self.r_star, math.pi, np.where(rr >= self.R0, 0.0, ramp))


def _twist_uv(uv, tw, inverse=False):
    """Apply tau (or its inverse) to (u, v) coordinates at unit scale."""
    cu, cv = tw.center
    U = uv[..., 0] * tw.a - cu
    V = uv[..., 1] / tw.a - cv
    r = np.sqrt(U * U + V * V)
    rr = np.real(r)
    core = rr <= tw.r_star
    ann = (~core) & (rr < tw.R0)
    alpha = tw.angle(r)
    if inverse:
        alpha = -alpha
    c, s = np.cos(alpha), np.sin(alpha)
    # rotation by pi is done as an exact negation
    U2 = np.where(core, -U, np.where(ann, c * U - s * V, U))
    V2 = np.where(core, -V, np.where(ann, s * U + c * V, V))
    return np.stack([(U2 + cu) / tw.a, (V2 + cv) * tw.a], axis=-1)


def twist_tau(h, params=TwistParams(), inverse=False):
    """The twist tau on hyperbolic coordinates; identity outside radius R0."""
    if isinstance(h, HyperCoord):
        return HyperCoord(*twist_tau(h.as_array(), params, inverse))
    uv = np.asarray(h)
    out = _twist_uv(uv, params, inverse)
    # points outside the support come back bit-identical
    r = np.hypot(uv[..., 0].real * params.a - params.center[0],
                 uv[..., 1].real / params.a - params.center[1])
    return np.where((r >= params.R0)[..., None], uv, out)


def _shear(uv, L, sign=1.0):
    return np.stack([uv[..., 0], uv[..., 1] - sign * L], axis=-1)


def in_D(p, regions=RegionSpec(), tol=1e-12):
    xy = np.asarray(as_xy(p), dtype=float)
    x, y = xy[..., 0], xy[..., 1]
    ok = (x > 0) & (y > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        u = x * y
        v = 0.5 * np.log(y / x)
    lo, hi = regions.v_band_D
    return ok & (u >= 0.5 - tol) & (u <= 2 + tol) & (v >= lo - tol) & (v <= hi + tol)


def t0_apply(p, twist=TwistParams(), inverse=False):
    """T0 = T o tau on D (or its inverse T0^-1 = tau^-1 o T^-1 on E)."""
    regions = RegionSpec(twist.lam)
    xy = np.asarray(as_xy(p), dtype=float)
    if inverse:
        pre = LinearModel(twist.lam).inverse(xy)
        if not np.all(in_D(pre, regions)):
            raise DomainError("T0^-1 is only defined on E")
        out = hyper_backward(_twist_uv(hyper_forward(pre), twist, inverse=True))
    else:
        if not np.all(in_D(xy, regions)):
            raise DomainError("T0 is only defined on D")
        out = hyper_backward(_shear(_twist_uv(hyper_forward(xy), twist), regions.L))
    return PlanePoint(*out) if isinstance(p, PlanePoint) else out


# -- level bookkeeping ------------------------------------------------------------

@dataclass(frozen=True)
class Region:
    """Result of :func:`region_locate`.

    ``kind`` is ``"D"`` (interior of D_n), ``"E"`` (interior of E_n outside
    D_n), ``"boundary"`` (on the edge of D_n, where the perturbed map equals
    T) or ``"outside"``. ``half`` tells D+ (``"+"``), D- (``"-"``) or the arc
    l_D (``"l"``) for interior points of D_n.
    """

    kind: str
    level: int | None = None
    half: str | None = None


def _levels(xy):
    """Level index n, scaled u (= u * 4**n in [1/2, 2]) and v, vectorized.

    Returns ``(n, s, v, band, tiny)``; ``band`` marks points whose u lies in
    some closed band with n >= 0, ``tiny`` marks u below the underflow guard.
    """
    x = np.real(xy[..., 0])
    y = np.real(xy[..., 1])
    pos = (x > 0) & (y > 0)
    u = np.where(pos, x * y, 1.0)
    tiny = pos & (u < UNDERFLOW_U)
    u = np.where(tiny, 1.0, u)
    n = np.round(-np.log2(u) / 2).astype(np.int64)
    s = np.ldexp(u, 2 * n)
    n = np.where(s > 2.0, n - 1, np.where(s < 0.5, n + 1, n))
    s = np.ldexp(u, 2 * n)
    v = np.where(pos, 0.5 * np.log(np.where(pos, y, 1.0) / np.where(pos, x, 1.0)), 0.0)
    band = pos & ~tiny & (n >= 0) & (s >= 0.5) & (s <= 2.0)
    return n, s, v, band, tiny


def region_locate(p, regions=RegionSpec()):
    xy = np.asarray(as_xy(p), dtype=float)
    if xy.shape != (2,):
        raise ValueError("region_locate classifies a single point")
    n, s, v, band, _ = _levels(xy)
    n, s, v = int(n), float(s), float(v)
    if not band:
        return Region("outside")
    dlo, dhi = regions.v_band_D
    elo, ehi = regions.v_band_E
    if s in (0.5, 2.0):
        return Region("boundary", n) if elo <= v <= dhi else Region("outside")
    if dlo < v < dhi:
        half = "l" if s == 1.0 else ("+" if s > 1.0 else "-")
        return Region("D", n, half)
    if v in (dlo, dhi):
        return Region("boundary", n)
    if elo < v < ehi:
        return Region("E", n)
    return Region("outside")


# -- the perturbed map ------------------------------------------------------------

@dataclass(frozen=True)
class ChartBoxes:
    """K = [-xi, xi]^2, L = [-xi/2, xi/2]^2 and W = B(0, delta/2)."""

    xi: float = 0.02
    delta: float = 0.02

    def __post_init__(self):
        if not (self.xi > 0 and self.delta > 0):
            raise GeometryError("xi and delta must be positive")
        if self.delta > self.xi:
            raise GeometryError("W = B(0, delta/2) must lie in L = [-xi/2, xi/2]^2 (need delta <= xi)")

    @property
    def K_half(self):
        return self.xi

    @property
    def L_half(self):
        return self.xi / 2

    @property
    def W_radius(self):
        return self.delta / 2

    def in_K(self, pts):
        pts = np.asarray(pts)
        return np.max(np.abs(pts), axis=-1) <= self.xi

    def in_L(self, pts):
        pts = np.asarray(pts)
        return np.max(np.abs(pts), axis=-1) <= self.xi / 2

    def in_W(self, pts):
        pts = np.asarray(pts)
        return np.hypot(pts[..., 0], pts[..., 1]) < self.delta / 2

    def in_K_or_TK(self, pts, lam=LAMBDA):
        pts = np.asarray(pts)
        in_tk = (np.abs(pts[..., 0]) <= lam * self.xi) & (np.abs(pts[..., 1]) <= self.xi / lam)
        return self.in_K(pts) | in_tk


def compute_n0(boxes=ChartBoxes(), regions=RegionSpec()):
    """Smallest n0 with D_n and E_n inside W for every n >= n0."""
    r = regions.max_corner_norm()
    n = 0
    while math.ldexp(r, -n) > boxes.W_radius:
        n += 1
    return n


def fixed_point(n):
    """u_n = (2^-n, 2^-n), the fixed point created in level n."""
    h = math.ldexp(1.0, -n)
    return np.array([h, h])


ASSUMPTIONS = (
    "xi is assumed small enough to be a half cw-expansivity constant (xi <= eps_1); not computable",
    "delta is assumed small enough that B_delta(f) lies in the required C0 neighborhood; not computable",
)


@dataclass(frozen=True)
class PerturbedMap:
    """T with the modifications T_n = M_n o T0 o M_n^-1 for every n >= n0.

    Levels are resolved lazily from u = xy, so no finite truncation is made;
    below u = 1e-300 the map falls back to T and flags the point.
    """

    n0: int
    twist: TwistParams = field(default_factory=TwistParams)
    regions: RegionSpec = field(default_factory=RegionSpec)
    chart: EigenChart = field(default_factory=EigenChart)
    boxes: ChartBoxes = field(default_factory=ChartBoxes)

    @classmethod
    def build(cls, lam=LAMBDA, xi=0.02, delta=0.02, R0=0.49, a=1.0, r_V=0.2, n0=None):
        twist = TwistParams(lam, R0, a)
        regions = RegionSpec(lam)
        boxes = ChartBoxes(xi, delta)
        chart = EigenChart(r_V=r_V)
        if not xi * math.hypot(lam, 1 / lam) < r_V:
            raise GeometryError(f"K and T(K) must lie in the chart ball of radius {r_V}")
        need = compute_n0(boxes, regions)
        if n0 is None:
            n0 = need
        elif n0 < need:
            raise GeometryError(f"n0 = {n0} leaves D_n or E_n outside W; need n0 >= {need}")
        return cls(int(n0), twist, regions, chart, boxes)

    @property
    def lam(self):
        return self.regions.lam

    @property
    def linear(self):
        return LinearModel(self.lam)

    def support_mask(self, xy):
        """Points of the twist disks of levels n >= n0 (where T-tilde differs from T)."""
        n, s, v, band, _ = _levels(xy)
        tw = self.twist
        cu, cv = tw.center
        r = np.hypot(s * tw.a - cu, v / tw.a - cv)
        return band & (n >= self.n0) & (r < tw.R0), n

    def _modify(self, xy, n, inverse):
        scale = np.ldexp(1.0, 2 * n)
        uv = hyper_forward(xy)
        uv = np.stack([uv[..., 0] * scale, uv[..., 1]], axis=-1)
        if inverse:
            uv = _twist_uv(uv, self.twist, inverse=True)
        else:
            uv = _shear(_twist_uv(uv, self.twist), self.regions.L)
        uv = np.stack([uv[..., 0] / scale, uv[..., 1]], axis=-1)
        return hyper_backward(uv)

    def apply_flagged(self, pts):
        """T-tilde on an array of plane points; also returns the underflow flags."""
        xy = np.asarray(pts)
        xy = xy.astype(complex) if np.iscomplexobj(xy) else xy.astype(float)
        out = self.linear.apply(xy)
        mask, n = self.support_mask(xy)
        if np.any(mask):
            out[mask] = self._modify(xy[mask], n[mask], inverse=False)
        return out, _levels(xy)[4]

    def apply(self, pts):
        xy = as_xy(pts)
        out = self.apply_flagged(xy)[0]
        return PlanePoint(*out.real) if isinstance(pts, PlanePoint) else out

    def inverse(self, pts):
        xy = np.asarray(as_xy(pts))
        xy = xy.astype(complex) if np.iscomplexobj(xy) else xy.astype(float)
        w = self.linear.inverse(xy)
        mask, n = self.support_mask(w)
        if np.any(mask):
            w[mask] = self._modify(w[mask], n[mask], inverse=True)
        return PlanePoint(*w.real) if isinstance(pts, PlanePoint) else w

    # -- torus embedding ----------------------------------------------------------

    def _check_conjugate(self):
        if abs(self.lam - self.chart.anosov.lam) > 1e-12:
            raise GeometryError("the torus embedding needs lambda equal to the Anosov eigenvalue")

    def gpert_apply(self, pts):
        """g = phi o T-tilde o phi^-1 on the chart, f elsewhere."""
        self._check_conjugate()
        xy = as_xy(pts)
        out = np.array(self.chart.anosov.apply(xy), dtype=float)
        c = self.chart.lift(xy)
        mask = self.chart.in_domain(xy) & self.support_mask(c)[0]
        if np.any(mask):
            out[mask] = self.chart.to_torus(self.apply(c[mask]), check=False)
        return TorusPoint(*out) if isinstance(pts, TorusPoint) else out

    def gpert_inverse(self, pts):
        self._check_conjugate()
        xy = as_xy(pts)
        out = np.array(self.chart.anosov.inverse(xy), dtype=float)
        c = self.chart.lift(out)
        support, n = self.support_mask(c)
        mask = self.chart.in_domain(out) & support
        if np.any(mask):
            fixed = self._modify(c[mask], n[mask], inverse=True)
            out[mask] = self.chart.to_torus(fixed, check=False)
        return TorusPoint(*out) if isinstance(pts, TorusPoint) else out

    def torus_fixed_point(self, n):
        """p_n = phi(u_n)."""
        return self.chart.to_torus(fixed_point(n))

    def metadata(self):
        return {
            "lambda": self.lam,
            "xi": self.boxes.xi,
            "delta": self.boxes.delta,
            "R0": self.twist.R0,
            "a": self.twist.a,
            "r_V": self.chart.r_V,
            "n0": self.n0,
            "assumptions": list(ASSUMPTIONS),
        }


@lru_cache(maxsize=None)
def default_map():
    return PerturbedMap.build()


def ttilde_apply(p, pmap=None):
    return (pmap or default_map()).apply(p)


def ttilde_inv(p, pmap=None):
    return (pmap or default_map()).inverse(p)


def gpert_apply(p, pmap=None):
    return (pmap or default_map()).gpert_apply(p)


def gpert_inv(p, pmap=None):
    return (pmap or default_map()).gpert_inverse(p)


# -- C0 estimates ---------------------------------------------------------------

def diam_E0(regions=RegionSpec()):
    """Diameter of E, from corners and a dense boundary sample."""
    pts = np.concatenate([regions.corners("E"), regions.boundary("E")])
    return set_diameter(pts, "plane")


def c0_level_distance(n, regions=RegionSpec()):
    """Bound 2^-n diam(E_0) on |T - T_n| over D_n."""
    return math.ldexp(diam_E0(regions), -n)


def level_sup_deviation(pmap, n, samples=10_000, seed=0):
    """Sampled sup over D_n of |T(p) - T-tilde(p)|."""
    pts = sample_level(pmap.regions, n, samples, np.random.default_rng(seed))
    return float(np.max(np.hypot(*(pmap.linear.apply(pts) - pmap.apply(pts)).T)))


def sample_level(regions, n, size, rng, which="D"):
    """Points of D_n (or E_n) drawn uniformly with respect to area."""
    lo, hi = regions.v_band_D if which == "D" else regions.v_band_E
    uv = np.column_stack([rng.uniform(0.5, 2.0, size), rng.uniform(lo, hi, size)])
    uv[:, 0] = np.ldexp(uv[:, 0], -2 * n)
    return hyper_backward(uv)
