"""Points, metrics and finite continuum approximations.

Three ambient spaces are used throughout the package:

``"plane"``
    R^2 with the Euclidean metric (covering plane and chart coordinates).
``"torus"``
    T^2 = R^2/Z^2 with the flat metric; points are kept in [0, 1)^2.
``"sphere"``
    S^2 = T^2/(p ~ -p); a point is stored as its canonical torus
    representative, the lexicographically smaller of the two lifts.

All vectorized helpers take arrays of shape ``(..., 2)`` and broadcast.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from cwexp.errors import InvalidContinuumError

SPACES = ("plane", "torus", "sphere")


def mod1(a):
    """Reduce coordinates into [0, 1), fixing the ``mod`` rounding to 1.0."""
    r = np.mod(np.asarray(a, dtype=float), 1.0)
    r = np.where(r >= 1.0, 0.0, r)
    return r + 0.0  # -0.0 -> 0.0


def wrap(d):
    """Shortest representative of a displacement modulo Z^2."""
    d = np.asarray(d, dtype=float)
    return d - np.round(d)


@dataclass(frozen=True)
class PlanePoint:
    x: float
    y: float

    def __post_init__(self):
        if not (np.isfinite(self.x) and np.isfinite(self.y)):
            raise ValueError("plane point coordinates must be finite")

    def as_array(self):
        return np.array([self.x, self.y])


@dataclass(frozen=True)
class TorusPoint:
    """Point of R^2/Z^2; coordinates are normalized on construction."""

    x: float
    y: float

    def __post_init__(self):
        nx, ny = mod1([self.x, self.y])
        object.__setattr__(self, "x", float(nx))
        object.__setattr__(self, "y", float(ny))

    def as_array(self):
        return np.array([self.x, self.y])

    def __neg__(self):
        return TorusPoint(-self.x, -self.y)


@dataclass(frozen=True)
class SpherePoint:
    """Antipodal class {p, -p}; build through :func:`sphere_canon`."""

    rep: TorusPoint

    def as_array(self):
        return self.rep.as_array()


def as_xy(p):
    """Coordinates of a point object or array-like as a float ndarray."""
    if isinstance(p, (PlanePoint, TorusPoint, SpherePoint)):
        return p.as_array()
    a = np.asarray(p)
    return a if np.iscomplexobj(a) else a.astype(float)


# -- metrics -----------------------------------------------------------------

def plane_dist(a, b):
    d = as_xy(a) - as_xy(b)
    return np.hypot(d[..., 0], d[..., 1])


def torus_dist(a, b):
    """Flat distance on R^2/Z^2 (minimum over integer translates)."""
    d = wrap(as_xy(a) - as_xy(b))
    out = np.hypot(d[..., 0], d[..., 1])
    return float(out) if np.ndim(out) == 0 else out


def canon(pts):
    """Canonical antipodal representatives, vectorized."""
    p = mod1(pts)
    n = mod1(-p)
    use_neg = (n[..., 0] < p[..., 0]) | ((n[..., 0] == p[..., 0]) & (n[..., 1] < p[..., 1]))
    return np.where(use_neg[..., None], n, p)


def sphere_canon(p):
    """Quotient map q: T^2 -> S^2.

    A :class:`TorusPoint` (or a single pair) gives a :class:`SpherePoint`;
    an array of shape ``(n, 2)`` gives an array of representatives.
    """
    xy = as_xy(p)
    c = canon(xy)
    if xy.ndim == 1:
        return SpherePoint(TorusPoint(*c))
    return c


def sphere_dist(a, b):
    """Quotient metric: min(torus_dist(a, b), torus_dist(a, -b))."""
    a = as_xy(a)
    b = as_xy(b)
    d1 = wrap(a - b)
    d2 = wrap(a + b)
    out = np.minimum(np.hypot(d1[..., 0], d1[..., 1]), np.hypot(d2[..., 0], d2[..., 1]))
    return float(out) if np.ndim(out) == 0 else out


_METRICS = {"plane": plane_dist, "torus": torus_dist, "sphere": sphere_dist}


def metric(space):
    try:
        return _METRICS[space]
    except KeyError:
        raise ValueError(f"unknown space {space!r}; expected one of {SPACES}") from None


def dist(a, b, space="plane"):
    return metric(space)(a, b)


def project(pts, space):
    """Map plane coordinates to the normal form used by ``space``."""
    if space == "plane":
        return np.asarray(pts, dtype=float)
    if space == "torus":
        return mod1(pts)
    return canon(pts)


def unwrap_path(pts, space):
    """Continuous plane lift of a sequence of points by nearest-lift continuation."""
    pts = np.asarray(pts, dtype=float)
    if space == "plane" or len(pts) == 0:
        return pts.copy()
    lift = np.empty_like(pts)
    lift[0] = pts[0]
    for k in range(1, len(pts)):
        prev = lift[k - 1]
        cand = prev + wrap(pts[k] - prev)
        if space == "sphere":
            alt = prev + wrap(-pts[k] - prev)
            if np.hypot(*(alt - prev)) < np.hypot(*(cand - prev)):
                cand = alt
        lift[k] = cand
    return lift


# -- set distances -------------------------------------------------------------

def _pairwise_max(A, B, space, chunk_cells=4_000_000):
    f = metric(space)
    best = 0.0
    step = max(1, chunk_cells // max(len(B), 1))
    for i in range(0, len(A), step):
        d = f(A[i:i + step, None, :], B[None, :, :])
        best = max(best, float(np.max(d)))
    return best


def _directed_hausdorff(A, B, space, chunk_cells=4_000_000):
    f = metric(space)
    best = 0.0
    step = max(1, chunk_cells // len(B))
    for i in range(0, len(A), step):
        d = f(A[i:i + step, None, :], B[None, :, :])
        best = max(best, float(np.max(np.min(d, axis=1))))
    return best


def hausdorff_dist(A, B, space="plane"):
    """Hausdorff distance between two finite point sets."""
    A = np.atleast_2d(as_xy(A)) if len(A) else np.empty((0, 2))
    B = np.atleast_2d(as_xy(B)) if len(B) else np.empty((0, 2))
    if len(A) == 0 or len(B) == 0:
        raise InvalidContinuumError("Hausdorff distance needs two nonempty point sets")
    return max(_directed_hausdorff(A, B, space), _directed_hausdorff(B, A, space))


def _plane_diameter(pts):
    if len(pts) < 64:
        return _pairwise_max(pts, pts, "plane")
    try:
        hull = pts[ConvexHull(pts).vertices]
    except QhullError:
        # collinear or coincident points
        far = pts[np.argmax(plane_dist(pts, pts[0]))]
        direction = far - pts[0]
        norm = np.hypot(*direction)
        if norm == 0.0:
            return 0.0
        s = (pts - pts[0]) @ (direction / norm)
        return float(s.max() - s.min())
    return _pairwise_max(hull, hull, "plane")


def set_diameter(pts, space="plane"):
    """Maximum pairwise distance of a finite point set."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    if len(pts) <= 1:
        return 0.0
    if space == "plane":
        return _plane_diameter(pts)
    if space == "torus":
        lift = unwrap_path(pts, "torus")
        span = lift.max(axis=0) - lift.min(axis=0)
        if np.all(span < 0.5):
            return _plane_diameter(lift)
    return _pairwise_max(pts, pts, space)


# -- chains --------------------------------------------------------------------

@dataclass(frozen=True)
class Chain:
    """Ordered eta-chain standing in for a continuum.

    Consecutive points are at most ``eta`` apart in the metric of ``space``.
    Continuum statements made about a chain hold at mesh resolution only.
    """

    pts: np.ndarray
    eta: float
    space: str = "plane"
    _diam: list = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.pts, dtype=float))
        if pts.size == 0:
            raise InvalidContinuumError("a chain needs at least one point")
        if pts.shape[-1] != 2 or pts.ndim != 2:
            raise ValueError(f"chain points must have shape (n, 2), got {pts.shape}")
        if not self.eta > 0:
            raise ValueError("chain mesh bound eta must be positive")
        metric(self.space)
        pts = project(pts, self.space)
        pts.setflags(write=False)
        object.__setattr__(self, "pts", pts)
        if len(pts) > 1 and self.mesh() > self.eta * (1 + 1e-9):
            raise ValueError(f"chain mesh {self.mesh():.3g} exceeds eta = {self.eta:.3g}")

    def __len__(self):
        return len(self.pts)

    def mesh(self):
        if len(self.pts) < 2:
            return 0.0
        return float(np.max(dist(self.pts[:-1], self.pts[1:], self.space)))

    @property
    def diam(self):
        if not self._diam:
            self._diam.append(set_diameter(self.pts, self.space))
        return self._diam[0]


def chain_diam(C):
    return C.diam


def densify(nodes, eta, space="plane"):
    """Polyline through ``nodes`` sampled with spacing at most ``eta``.

    For torus and sphere chains the nodes are read as plane lifts, so a
    segment follows the displacement between consecutive nodes as given.
    """
    nodes = np.atleast_2d(np.asarray(nodes, dtype=float))
    if len(nodes) == 0:
        raise InvalidContinuumError("a chain needs at least one node")
    pieces = [nodes[:1]]
    for a, b in zip(nodes[:-1], nodes[1:]):
        n = max(1, int(np.ceil(np.hypot(*(b - a)) / eta * (1 + 1e-12))))
        t = np.arange(1, n + 1)[:, None] / n
        pieces.append(a + t * (b - a))
    return Chain(np.concatenate(pieces), eta, space)


def segment_chain(start, end, eta, space="plane"):
    return densify([as_xy(start), as_xy(end)], eta, space)
