"""Seeded invariant suite shared by the ``verify`` command and the tests.

Each check returns a :class:`Check` with the measured value and the
threshold it was compared against. The suite contains no timings, so two
runs with the same configuration give identical reports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from cwexp.area import verify_area
from cwexp.config import ExperimentConfig
from cwexp.errors import GeometryError
from cwexp.hyperbolic import CAT
from cwexp.perturbation import (
    PerturbedMap,
    c0_level_distance,
    fixed_point,
    level_sup_deviation,
)
from cwexp.quotient import cw_evidence_sphere, random_sphere_chains, sphere_g_apply
from cwexp.shadowing import (
    brute_force_shadow,
    make_pseudo_orbit,
    nominal_bound,
    shadow_solve,
    shadow_verify,
    sphere_shadow,
)
from cwexp.spaces import canon, dist, torus_dist
from cwexp.stability import class_separation, dist3_combine, dist3_constant, random_monotone_chains
from cwexp.systems import anosov_system, sphere_system


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    value: object
    threshold: object
    detail: str = ""

    def to_dict(self):
        d = {"name": self.name, "passed": bool(self.passed), "value": self.value,
             "threshold": self.threshold}
        if self.detail:
            d["detail"] = self.detail
        return d


def build_map(cfg: ExperimentConfig):
    return PerturbedMap.build(lam=cfg.lam, xi=cfg.xi, delta=cfg.delta, R0=cfg.R0, a=cfg.a,
                              n0=cfg.n0_override)


# -- individual checks -------------------------------------------------------------------

def check_fixed_points(pmap, count=9, tol=1e-12):
    ns = range(pmap.n0, pmap.n0 + count)
    plane = max(float(np.max(np.abs(pmap.apply(fixed_point(n)) - fixed_point(n)))) for n in ns)
    torus = max(torus_dist(pmap.gpert_apply(pmap.torus_fixed_point(n)), pmap.torus_fixed_point(n))
                for n in ns)
    worst = max(plane, torus)
    return Check("fixed_points", worst < tol, worst, tol,
                 f"levels {pmap.n0}..{pmap.n0 + count - 1}, plane and torus")


def check_boundary_agreement(pmap, samples=10_000, seed=0, tol=1e-12):
    rng = np.random.default_rng(seed)
    regs = pmap.regions
    pts = []
    per = samples // 10
    for j, n in enumerate(range(pmap.n0, pmap.n0 + 5)):
        b = regs.boundary("D", 256)
        pts.append(b[rng.integers(0, len(b), per)] * math.ldexp(1.0, -n))
        # hyperbola xy = 2/4^m inside the chart box
        m = pmap.n0 + j
        x = rng.uniform(2 * 4.0 ** -m / pmap.boxes.xi, pmap.boxes.xi, per)
        pts.append(np.column_stack([x, 2 * 4.0 ** -m / x]))
    pts = np.concatenate(pts)
    dev = float(np.max(np.abs(pmap.apply(pts) - pmap.linear.apply(pts))))
    return Check("boundary_agreement", dev < tol, dev, tol, "boundaries of D_n and hyperbolas H_m")


def check_bijectivity(pmap, samples=100_000, seed=0, tol=1e-10):
    rng = np.random.default_rng(seed)
    xi = pmap.boxes.xi
    half = samples // 2
    box = rng.uniform(-xi, xi, (samples - half, 2))
    # half of the samples inside the modified levels, where the check has teeth
    levels = rng.integers(pmap.n0, pmap.n0 + 6, half)
    uv = np.column_stack([rng.uniform(0.5, 2.0, half), rng.uniform(-0.5, 1.5, half) * pmap.regions.L])
    s = np.sqrt(np.ldexp(uv[:, 0], -2 * levels))
    dense = np.column_stack([s * np.exp(-uv[:, 1]), s * np.exp(uv[:, 1])])
    pts = np.concatenate([box, dense])
    err = float(np.max(np.abs(pmap.inverse(pmap.apply(pts)) - pts)))
    return Check("bijectivity", err < tol, err, tol, "round trip T-tilde^-1 o T-tilde")


def check_area(pmap, seed=0, samples=100_000, mc_samples=1_000_000, tol=1e-6):
    stats = verify_area(pmap, samples, seed, mc_samples)
    return Check("area", stats.passed(tol), stats.to_dict(), {"max_det_dev": tol, "mass": "3 sigma"})


def sample_near_chart(pmap, samples, rng):
    """Torus points: half uniform, half in the image of the disk W."""
    half = samples // 2
    uni = rng.random((samples - half, 2))
    r = pmap.boxes.W_radius * np.sqrt(rng.random(half))
    th = 2 * np.pi * rng.random(half)
    w = pmap.chart.to_torus(np.column_stack([r * np.cos(th), r * np.sin(th)]), check=False)
    return np.concatenate([uni, w])


def perturbation_size(pmap, samples=100_000, seed=0):
    """(sup dist(f, g), max dist(f, g) outside phi(W))."""
    pts = sample_near_chart(pmap, samples, np.random.default_rng(seed))
    d = torus_dist(CAT.apply(pts), pmap.gpert_apply(pts))
    c = pmap.chart.lift(pts)
    inside = np.hypot(c[:, 0], c[:, 1]) < pmap.boxes.W_radius
    return float(d.max()), float(d[~inside].max()) if np.any(~inside) else 0.0


def check_perturbation_size(pmap, samples=100_000, seed=0):
    sup, outside = perturbation_size(pmap, samples, seed)
    ok = sup <= pmap.boxes.delta and outside <= 1e-12
    return Check("perturbation_size", ok, {"sup": sup, "outside_W": outside},
                 {"sup": pmap.boxes.delta, "outside_W": 1e-12})


def check_c0_levels(pmap, count=5, samples=10_000, seed=0):
    rows = []
    ok = True
    for n in range(pmap.n0, pmap.n0 + count):
        sup = level_sup_deviation(pmap, n, samples, seed + n)
        bound = c0_level_distance(n, pmap.regions)
        ok &= sup <= bound
        rows.append({"n": n, "sup": sup, "bound": bound})
    return Check("c0_levels", ok, rows, "2^-n diam E_0")


def check_escape(pmap, cfg, count=100):
    n, m = pmap.n0, pmap.n0 + 1
    fam = random_monotone_chains(n, m, count, cfg.seed, cfg.eta)
    rep = class_separation(n, m, fam, pmap, cfg.eta)
    return Check("escape", rep.all_valid,
                 {"chains": count, "max_exit": rep.max_exit,
                  "min_exit_diam": min(c.exit_diam for c in rep.certificates)},
                 {"n_star": rep.certificates[0].n_star, "exit_diam": pmap.boxes.xi / 2})


def shadow_batch(space, count, length, delta, seed):
    """Solve and exactly verify a seeded batch; returns per-orbit records."""
    system = anosov_system() if space == "torus" else sphere_system()
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        po = make_pseudo_orbit(system, rng.random(2), length, delta, seed + i)
        res = shadow_solve(po) if space == "torus" else sphere_shadow(po)
        ok, dev = shadow_verify(system, po, res.point_exact, res.eps_bound)
        out.append({"eps": res.eps_achieved, "bound": res.eps_bound, "verified": ok,
                    "deviation": dev, "floor": res.eps_floor})
    return out


def check_shadowing(cfg, count=20, length=200, delta=1e-4):
    rows = []
    ok = True
    for space in ("torus", "sphere"):
        recs = shadow_batch(space, count, length, delta, cfg.seed + (0 if space == "torus" else 7919))
        nb = nominal_bound(delta)
        ok &= all(r["verified"] and r["eps"] <= r["bound"] for r in recs)
        rows.append({
            "space": space,
            "orbits": count,
            "max_eps": max(r["eps"] for r in recs),
            "bound": recs[0]["bound"],
            "within_2delta_over_lam_minus_1": sum(r["eps"] <= nb for r in recs),
            "floor_above_2delta_over_lam_minus_1": sum(r["floor"] is not None and r["floor"] > nb
                                                       for r in recs),
        })
    return Check("shadowing", ok, rows, "sqrt(1 + lam^2) delta / (lam - 1)")


def oracle_agreement(count=100, delta=1e-3, seed=0):
    system = anosov_system()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(count):
        length = 2 + i % 5
        po = make_pseudo_orbit(system, rng.random(2), length, delta, seed + i)
        res = shadow_solve(po, floor=False)
        best, _ = brute_force_shadow(po)
        worst = max(worst, float(torus_dist(res.point, best)))
    return worst


def check_oracle(cfg, count=100, tol=1e-3):
    worst = oracle_agreement(count, 1e-3, cfg.seed)
    return Check("shadow_oracle", worst < tol, worst, tol, "length 2..6, delta 1e-3, grid 1e-4")


def check_cw_sphere(cfg, count=100):
    fam = random_sphere_chains(count, cfg.seed, cfg.eta)
    ev = cw_evidence_sphere(cfg.xi, fam, cfg.horizon, 1e-3, cfg.eta)
    return Check("cw_sphere", ev.within_bound,
                 {"chains": count, "max_first_violation": ev.max_first_violation},
                 ev.step_bound, "sampled evidence only")


def dist3_triples(xi=0.02, samples=10_000, seed=0, classes=8):
    """Metric axioms of dist3 on random torus triples with a coarse class map.

    Returns (worst triangle excess, worst asymmetry, worst same-class mismatch).
    """
    rng = np.random.default_rng(seed)
    K = dist3_constant(xi, math.sqrt(2) / 2)

    def class_of(p):
        return int(np.floor(p[0] * classes)) % classes

    def dist2(i, j):
        return 0.0 if i == j else 1.0

    d3 = dist3_combine(K, torus_dist, class_of, dist2)
    P = rng.random((samples, 3, 2))
    tri = sym = same = 0.0
    for x, y, z in P:
        tri = max(tri, d3(x, z) - d3(x, y) - d3(y, z))
        sym = max(sym, abs(d3(x, y) - d3(y, x)))
        y2 = np.array([(class_of(x) + 0.5) / classes, y[1]])
        same = max(same, abs(d3(x, y2) - K * torus_dist(x, y2)))
    return tri, sym, same


def check_dist3(cfg, samples=10_000):
    tri, sym, same = dist3_triples(cfg.xi, samples, cfg.seed)
    ok = tri <= 1e-15 and sym == 0.0 and same == 0.0
    return Check("dist3", ok, {"triangle_excess": tri, "asymmetry": sym, "same_class_mismatch": same},
                 {"triangle_excess": 1e-15, "asymmetry": 0.0, "same_class_mismatch": 0.0})


def check_sphere_conjugacy(cfg, samples=100_000, tol=1e-12):
    p = np.random.default_rng(cfg.seed).random((samples, 2))
    d = dist(canon(CAT.apply(p)), sphere_g_apply(canon(p)), "sphere")
    worst = float(np.max(d))
    return Check("sphere_conjugacy", worst < tol, worst, tol)


def check_eigen():
    A = CAT.A.astype(float)
    r = max(float(np.linalg.norm(A @ CAT.e_u - CAT.lam * CAT.e_u)),
            float(np.linalg.norm(A @ CAT.e_s - CAT.e_s / CAT.lam)))
    return Check("eigen_residual", r < 1e-12, r, 1e-12)


# -- suite -------------------------------------------------------------------------------

def run_suite(cfg: ExperimentConfig):
    """All checks in a fixed order; a failed geometry gate ends the run."""
    checks = []
    try:
        pmap = build_map(cfg)
    except GeometryError as exc:
        checks.append(Check("geometry_gate", False, str(exc), "construction gates"))
        return {"config": cfg.to_dict(), "checks": [c.to_dict() for c in checks], "passed": False}
    checks.append(Check("geometry_gate", True, pmap.metadata(), "construction gates"))
    checks += [
        check_eigen(),
        check_fixed_points(pmap),
        check_boundary_agreement(pmap, seed=cfg.seed),
        check_bijectivity(pmap, seed=cfg.seed),
        check_area(pmap, seed=cfg.seed),
        check_perturbation_size(pmap, seed=cfg.seed),
        check_c0_levels(pmap, seed=cfg.seed),
        check_escape(pmap, cfg),
        check_shadowing(cfg),
        check_oracle(cfg),
        check_cw_sphere(cfg),
        check_dist3(cfg),
        check_sphere_conjugacy(cfg),
    ]
    return {
        "config": cfg.to_dict(),
        "checks": [c.to_dict() for c in checks],
        "passed": all(c.passed for c in checks),
    }
