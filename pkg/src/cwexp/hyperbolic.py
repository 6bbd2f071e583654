"""The Anosov automorphism of T^2, its eigen-chart and the linear model.

``f(x, y) = (2x + y, x + y) mod 1`` has eigenvalues ``lam = (3 + sqrt 5)/2``
and ``1/lam``. In the eigenbasis it is the diagonal map
``T(x, y) = (lam x, y / lam)``, which preserves every hyperbola ``xy = k``.
On the open first quadrant the coordinates ``u = xy, v = log(y/x)/2`` have
unit Jacobian and turn ``T`` into the shear ``(u, v) -> (u, v - log lam)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from cwexp.errors import DomainError
from cwexp.spaces import TorusPoint, PlanePoint, as_xy, mod1, wrap

LAMBDA = (3.0 + math.sqrt(5.0)) / 2.0
LOG_LAMBDA = math.log(LAMBDA)

MATRIX = np.array([[2, 1], [1, 1]])
MATRIX_INV = np.array([[1, -1], [-1, 2]])


@dataclass(frozen=True)
class AnosovMap:
    """Hyperbolic toral automorphism given by an integer matrix.

    Only (2,1;1,1) is validated; other symmetric hyperbolic matrices in
    SL(2, Z) go through the same code path.
    """

    matrix: tuple = ((2, 1), (1, 1))
    lam: float = field(init=False)
    e_u: np.ndarray = field(init=False, repr=False)
    e_s: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        A = np.array(self.matrix, dtype=np.int64)
        if round(np.linalg.det(A)) != 1 or abs(A[0, 0] + A[1, 1]) <= 2 or A[0, 1] != A[1, 0]:
            raise ValueError("expected a symmetric hyperbolic matrix with determinant 1")
        tr = int(A[0, 0] + A[1, 1])
        lam = (tr + math.sqrt(tr * tr - 4)) / 2
        if tr == 3:
            lam = LAMBDA
        # eigenvectors of a symmetric matrix: (A - lam I) e = 0 from the first row
        e_u = np.array([float(A[0, 1]), lam - A[0, 0]])
        e_s = np.array([float(A[0, 1]), 1.0 / lam - A[0, 0]])
        e_u /= np.hypot(*e_u)
        e_s /= np.hypot(*e_s)
        if e_u[0] * e_s[1] - e_u[1] * e_s[0] < 0:
            e_s = -e_s
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "e_u", e_u)
        object.__setattr__(self, "e_s", e_s)

    @property
    def A(self):
        return np.array(self.matrix, dtype=np.int64)

    @property
    def A_inv(self):
        (a, b), (c, d) = self.matrix
        return np.array([[d, -b], [-c, a]], dtype=np.int64)

    def apply(self, p):
        xy = as_xy(p)
        out = mod1(xy @ self.A.T.astype(float))
        return TorusPoint(*out) if isinstance(p, TorusPoint) else out

    def inverse(self, p):
        xy = as_xy(p)
        out = mod1(xy @ self.A_inv.T.astype(float))
        return TorusPoint(*out) if isinstance(p, TorusPoint) else out

    @property
    def rotation(self):
        """Orthogonal matrix with columns (e_u, e_s), det +1."""
        return np.column_stack([self.e_u, self.e_s])


CAT = AnosovMap()


def anosov_apply(p, f=CAT):
    return f.apply(p)


def anosov_inv(p, f=CAT):
    return f.inverse(p)


# -- linear model ----------------------------------------------------------------

@dataclass(frozen=True)
class LinearModel:
    """T(x, y) = (lam x, y / lam)."""

    lam: float = LAMBDA

    def __post_init__(self):
        if not self.lam > 1:
            raise ValueError("the linear model needs lam > 1")

    def apply(self, p):
        xy = np.asarray(as_xy(p))
        out = np.stack([xy[..., 0] * self.lam, xy[..., 1] / self.lam], axis=-1)
        return PlanePoint(*out) if isinstance(p, PlanePoint) else out

    def inverse(self, p):
        xy = np.asarray(as_xy(p))
        out = np.stack([xy[..., 0] / self.lam, xy[..., 1] * self.lam], axis=-1)
        return PlanePoint(*out) if isinstance(p, PlanePoint) else out


def linear_T_apply(p, lam=LAMBDA):
    return LinearModel(lam).apply(p)


def linear_T_inv(p, lam=LAMBDA):
    return LinearModel(lam).inverse(p)


# -- hyperbolic coordinates --------------------------------------------------------

@dataclass(frozen=True)
class HyperCoord:
    u: float
    v: float

    def as_array(self):
        return np.array([self.u, self.v])


def hyper_forward(xy):
    """(x, y) -> (xy, log(y/x)/2); no domain check, complex-safe."""
    x = xy[..., 0]
    y = xy[..., 1]
    return np.stack([x * y, 0.5 * np.log(y / x)], axis=-1)


def hyper_backward(uv):
    """(u, v) -> (sqrt(u) e^-v, sqrt(u) e^v); complex-safe."""
    s = np.sqrt(uv[..., 0])
    v = uv[..., 1]
    return np.stack([s * np.exp(-v), s * np.exp(v)], axis=-1)


def to_hyper(p):
    xy = np.asarray(as_xy(p), dtype=float)
    if np.any(xy[..., 0] <= 0) or np.any(xy[..., 1] <= 0):
        raise DomainError("hyperbolic coordinates need the open first quadrant")
    uv = hyper_forward(xy)
    return HyperCoord(*uv) if xy.ndim == 1 else uv


def from_hyper(h):
    uv = h.as_array() if isinstance(h, HyperCoord) else np.asarray(h, dtype=float)
    if np.any(uv[..., 0] <= 0):
        raise DomainError("hyperbolic coordinate u must be positive")
    xy = hyper_backward(uv)
    return PlanePoint(*xy) if xy.ndim == 1 else xy


# -- eigen-chart -----------------------------------------------------------------

@dataclass(frozen=True)
class EigenChart:
    """Isometric chart phi: B(0, r_V) -> T^2, phi(p) = R p mod 1.

    With R = (e_u | e_s) one has f(phi(p)) = phi(T(p)) whenever p and T(p)
    lie in the chart ball.
    """

    anosov: AnosovMap = CAT
    r_V: float = 0.2

    def __post_init__(self):
        if not 0 < self.r_V < 0.5:
            raise ValueError("chart radius must lie in (0, 1/2) to stay injective")

    @property
    def rotation(self):
        return self.anosov.rotation

    def to_torus(self, p, check=True):
        xy = np.asarray(as_xy(p), dtype=float)
        if check and np.any(np.hypot(xy[..., 0], xy[..., 1]) >= self.r_V):
            raise DomainError(f"point outside the chart ball of radius {self.r_V}")
        out = mod1(xy @ self.rotation.T)
        return TorusPoint(*out) if isinstance(p, PlanePoint) else out

    def lift(self, p):
        """Chart coordinates of torus points, without domain check."""
        return wrap(np.asarray(as_xy(p), dtype=float)) @ self.rotation

    def in_domain(self, p):
        c = self.lift(p)
        return np.hypot(c[..., 0], c[..., 1]) < self.r_V

    def to_chart(self, p):
        c = self.lift(p)
        if np.any(np.hypot(c[..., 0], c[..., 1]) >= self.r_V):
            raise DomainError(f"torus point farther than {self.r_V} from the fixed point")
        return PlanePoint(*c) if isinstance(p, TorusPoint) else c


def chart_to_torus(p, chart=EigenChart()):
    return chart.to_torus(p)


def torus_to_chart(p, chart=EigenChart()):
    return chart.to_chart(p)
