"""Area-preservation checks for the perturbed map.

Two independent routes:

* pointwise Jacobian determinants at sampled interior points, and
* Monte Carlo mass of the image of a rectangle, computed by sampling a
  bounding box of ``T~(A)`` and pulling the samples back through ``T~^-1``.

Jacobians default to complex-step differentiation. Inside the twist
annulus the rotation angle changes by pi over a radial width of about
0.009, so real central differences carry truncation errors of order 1e-2
at step 1e-6; the complex step has no subtractive cancellation and can use
a step of 1e-20. Central differences remain available for comparison.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from cwexp.hyperbolic import hyper_forward
from cwexp.perturbation import PerturbedMap, sample_level


@dataclass(frozen=True)
class MassCheck:
    rect: tuple
    area: float
    estimate: float
    sigma: float
    samples: int

    @property
    def ratio(self):
        return self.estimate / self.area

    @property
    def within_3sigma(self):
        return bool(abs(self.estimate - self.area) <= 3 * self.sigma)

    def to_dict(self):
        return {
            "rect": list(self.rect),
            "area": self.area,
            "estimate": self.estimate,
            "sigma": self.sigma,
            "ratio": self.ratio,
            "samples": self.samples,
            "within_3sigma": self.within_3sigma,
        }


@dataclass(frozen=True)
class AreaStats:
    method: str
    jacobian_points: int
    excluded_points: int
    max_det_dev: float
    central_fd_max_dev_smooth: float
    central_fd_max_dev_annulus: float
    mass: list = field(default_factory=list)

    def passed(self, tol=1e-6):
        return self.max_det_dev < tol and all(m.within_3sigma for m in self.mass)

    def to_dict(self):
        return {
            "method": self.method,
            "jacobian_points": self.jacobian_points,
            "excluded_points": self.excluded_points,
            "max_det_dev": self.max_det_dev,
            "central_fd_max_dev_smooth": self.central_fd_max_dev_smooth,
            "central_fd_max_dev_annulus": self.central_fd_max_dev_annulus,
            "mass": [m.to_dict() for m in self.mass],
        }


def jacobian(fn, pts, step, method="complex"):
    """Jacobian matrices of a plane map at ``pts``; ``step`` may be an array."""
    pts = np.asarray(pts, dtype=float)
    step = np.broadcast_to(np.asarray(step, dtype=float), pts.shape[:-1])
    J = np.empty(pts.shape[:-1] + (2, 2))
    for j in range(2):
        e = np.zeros(pts.shape)
        e[..., j] = step
        if method == "complex":
            J[..., :, j] = np.imag(fn(pts + 1j * e)) / step[..., None]
        elif method == "central":
            J[..., :, j] = (np.real(fn(pts + e)) - np.real(fn(pts - e))) / (2 * step[..., None])
        else:
            raise ValueError(f"unknown differentiation method {method!r}")
    return J


def _circle_radius(pmap, pts, n):
    tw = pmap.twist
    uv = hyper_forward(pts)
    U = np.ldexp(uv[:, 0], 2 * n) * tw.a - tw.center[0]
    V = uv[:, 1] / tw.a - tw.center[1]
    return np.hypot(U, V)


def jacobian_check(pmap: PerturbedMap, samples=100_000, seed=0, levels=None,
                   margin=1e-6, method="complex"):
    """Max |det DT~ - 1| over points of D_n, n in ``levels``, off the two circles.

    Returns ``(max_dev_all, excluded, central_smooth, central_annulus)``.
    """
    rng = np.random.default_rng(seed)
    levels = list(levels) if levels is not None else list(range(pmap.n0, pmap.n0 + 5))
    per = np.full(len(levels), samples // len(levels))
    per[: samples % len(levels)] += 1
    devs, cfd_smooth, cfd_ann = [], [0.0], [0.0]
    excluded = 0
    tw = pmap.twist
    for n, k in zip(levels, per):
        pts = sample_level(pmap.regions, n, int(k), rng)
        r = _circle_radius(pmap, pts, n)
        keep = (np.abs(r - tw.r_star) > margin) & (np.abs(r - tw.R0) > margin)
        excluded += int(np.sum(~keep))
        pts, r = pts[keep], r[keep]
        scale = np.ldexp(1.0, -n)
        h = 1e-20 * scale if method == "complex" else 1e-6 * scale
        det = np.linalg.det(jacobian(pmap.apply, pts, h, method))
        devs.append(np.abs(det - 1.0))
        # central differences only where the stencil cannot straddle a circle
        far = (np.abs(r - tw.r_star) > 1e-3) & (np.abs(r - tw.R0) > 1e-3)
        cdev = np.abs(np.linalg.det(jacobian(pmap.apply, pts[far], 1e-6 * scale, "central")) - 1.0)
        ann = ((r > tw.r_star) & (r < tw.R0))[far]
        if np.any(~ann):
            cfd_smooth.append(float(cdev[~ann].max()))
        if np.any(ann):
            cfd_ann.append(float(cdev[ann].max()))
    dev = np.concatenate(devs)
    return float(dev.max()), excluded, max(cfd_smooth), max(cfd_ann)


def default_rects(pmap: PerturbedMap):
    """Rectangles inside D_{n0}: the twist core and two pieces of the annulus."""
    base = [
        (0.90, 1.10, 0.90, 1.10),
        (0.36, 0.40, 2.50, 2.75),
        (0.70, 0.80, 1.90, 2.05),
    ]
    s = np.ldexp(1.0, -pmap.n0)
    return [tuple(c * s for c in r) for r in base]


def _rect_boundary(rect, per_edge):
    x0, x1, y0, y1 = rect
    t = np.linspace(0.0, 1.0, per_edge)
    return np.concatenate([
        np.column_stack([x0 + (x1 - x0) * t, np.full_like(t, y0)]),
        np.column_stack([np.full_like(t, x1), y0 + (y1 - y0) * t]),
        np.column_stack([x1 - (x1 - x0) * t, np.full_like(t, y1)]),
        np.column_stack([np.full_like(t, x0), y1 - (y1 - y0) * t]),
    ])


def mass_check(pmap: PerturbedMap, rect, samples=1_000_000, seed=0, chunk=250_000):
    """Monte Carlo estimate of the area of T~(rect)."""
    x0, x1, y0, y1 = rect
    img = pmap.apply(_rect_boundary(rect, 20_000))
    lo, hi = img.min(axis=0), img.max(axis=0)
    pad = 0.02 * (hi - lo)
    lo, hi = lo - pad, hi + pad
    box = float(np.prod(hi - lo))
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    while done < samples:
        k = min(chunk, samples - done)
        q = lo + (hi - lo) * rng.random((k, 2))
        p = pmap.inverse(q)
        hits += int(np.sum((p[:, 0] >= x0) & (p[:, 0] <= x1) & (p[:, 1] >= y0) & (p[:, 1] <= y1)))
        done += k
    frac = hits / samples
    return MassCheck(
        rect=tuple(float(c) for c in rect),
        area=(x1 - x0) * (y1 - y0),
        estimate=box * frac,
        sigma=float(box * np.sqrt(frac * (1 - frac) / samples)),
        samples=samples,
    )


def verify_area(pmap: PerturbedMap, samples=100_000, seed=0, mc_samples=1_000_000,
                rects=None, method="complex"):
    dev, excluded, c_smooth, c_ann = jacobian_check(pmap, samples, seed, method=method)
    rects = default_rects(pmap) if rects is None else rects
    mass = [mass_check(pmap, r, mc_samples, seed + 1 + i) for i, r in enumerate(rects)]
    return AreaStats(method, samples - excluded, excluded, dev, c_smooth, c_ann, mass)
