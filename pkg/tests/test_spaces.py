import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cwexp.errors import InvalidContinuumError
from cwexp.spaces import (
    Chain,
    PlanePoint,
    SpherePoint,
    TorusPoint,
    canon,
    chain_diam,
    densify,
    hausdorff_dist,
    mod1,
    set_diameter,
    sphere_canon,
    sphere_dist,
    torus_dist,
    unwrap_path,
)

coord = st.floats(-5, 5, allow_nan=False)
unit = st.floats(0, 1, allow_nan=False, exclude_max=True)


def _translate_oracle(a, b):
    # brute force over the nine nearest integer translates
    return min(math.hypot(a[0] - b[0] + i, a[1] - b[1] + j) for i in (-1, 0, 1) for j in (-1, 0, 1))


def test_mod1_range_and_negative_zero():
    r = mod1([-1e-20, -0.0, 1.0, 2.5, -0.25])
    assert np.all((r >= 0) & (r < 1))
    assert not np.signbit(r).any()
    assert r[3] == 0.5 and r[4] == 0.75


def test_torus_point_normalizes():
    p = TorusPoint(1.25, -0.25)
    assert (p.x, p.y) == (0.25, 0.75)
    assert TorusPoint(p.x, p.y) == p


def test_plane_point_rejects_nan():
    with pytest.raises(ValueError):
        PlanePoint(float("nan"), 0.0)


def test_torus_dist_examples():
    assert torus_dist((0, 0), (0.9, 0)) == pytest.approx(0.1, abs=1e-15)
    assert torus_dist((0.3, 0.4), (0.3, 0.4)) == 0
    assert torus_dist((0.25, 0.25), (0.75, 0.75)) == pytest.approx(0.7071067811865476, abs=1e-15)


def test_torus_dist_matches_translate_enumeration(rng):
    a, b = rng.random((2, 2000, 2))
    got = torus_dist(a, b)
    want = [_translate_oracle(x, y) for x, y in zip(a, b)]
    np.testing.assert_allclose(got, want, atol=1e-15)


def test_torus_dist_metric_axioms(rng):
    a, b, c = rng.random((3, 10_000, 2))
    assert np.all(np.abs(torus_dist(a, b) - torus_dist(b, a)) <= 1e-12)
    assert np.all(torus_dist(a, c) <= torus_dist(a, b) + torus_dist(b, c) + 1e-12)
    assert np.max(torus_dist(a, b)) <= math.sqrt(2) / 2 + 1e-15


def test_sphere_canon_examples():
    # -0.7 mod 1 is the double nearest to 0.3 plus one ulp
    rep = sphere_canon(TorusPoint(0.7, 0.2)).rep
    assert (rep.x, rep.y) == (pytest.approx(0.3, abs=1e-15), pytest.approx(0.8, abs=1e-15))
    assert sphere_canon(TorusPoint(0.5, 0.5)).rep == TorusPoint(0.5, 0.5)
    assert sphere_canon(TorusPoint(0.3, 0.8)).rep == TorusPoint(0.3, 0.8)
    assert isinstance(sphere_canon((0.1, 0.2)), SpherePoint)


def test_sphere_canon_idempotent_and_antipodal(rng):
    p = rng.random((10_000, 2))
    c = canon(p)
    assert np.array_equal(canon(c), c)
    assert np.array_equal(canon(mod1(-p)), c)


def test_self_antipodal_points_are_fixed():
    for x in (0.0, 0.5):
        for y in (0.0, 0.5):
            assert np.array_equal(canon([x, y]), [x, y])


def test_sphere_dist_examples():
    q = sphere_canon
    assert sphere_dist(q((0.1, 0.1)), q((0.9, 0.9))) == pytest.approx(0, abs=1e-15)
    assert sphere_dist(q((0.1, 0.0)), q((0.2, 0.0))) == pytest.approx(0.1, abs=1e-15)


def test_quotient_is_one_lipschitz(rng):
    a, b = rng.random((2, 10_000, 2))
    assert np.all(sphere_dist(canon(a), canon(b)) <= torus_dist(a, b) + 1e-15)


@given(st.tuples(unit, unit), st.tuples(unit, unit), st.tuples(unit, unit))
def test_sphere_dist_triangle(a, b, c):
    a, b, c = canon(np.array([a, b, c]))
    assert sphere_dist(a, c) <= sphere_dist(a, b) + sphere_dist(b, c) + 1e-12


def test_hausdorff_examples():
    A = np.array([[0.0, 0.0], [0.1, 0.0]])
    assert hausdorff_dist(A, A) == 0
    assert hausdorff_dist(A, [[0.0, 0.0]]) == pytest.approx(0.1)
    assert hausdorff_dist([[0.1, 0.2]], [[0.4, 0.6]]) == pytest.approx(0.5)
    with pytest.raises(InvalidContinuumError):
        hausdorff_dist([], A)


@settings(max_examples=50)
@given(st.lists(st.tuples(coord, coord), min_size=1, max_size=8),
       st.lists(st.tuples(coord, coord), min_size=1, max_size=8),
       st.lists(st.tuples(coord, coord), min_size=1, max_size=8))
def test_hausdorff_metric_axioms(A, B, C):
    A, B, C = (np.array(s) for s in (A, B, C))
    assert hausdorff_dist(A, B) == pytest.approx(hausdorff_dist(B, A))
    assert hausdorff_dist(A, C) <= hausdorff_dist(A, B) + hausdorff_dist(B, C) + 1e-12


def test_chain_diameter_examples():
    assert chain_diam(Chain([[0.3, 0.3]], 0.1)) == 0
    assert chain_diam(Chain([[0.0, 0.0], [0.3, 0.0]], 0.5, "torus")) == pytest.approx(0.3)
    assert chain_diam(Chain([[0, 0], [0.1, 0], [0.2, 0]], 0.1 + 1e-12)) == pytest.approx(0.2)


def test_chain_rejects_coarse_mesh_and_empty():
    with pytest.raises(ValueError):
        Chain([[0, 0], [1, 0]], 0.5)
    with pytest.raises(InvalidContinuumError):
        Chain(np.empty((0, 2)), 0.1)


def test_set_diameter_hull_matches_pairwise(rng):
    pts = rng.normal(size=(300, 2))
    brute = max(np.hypot(*(p - q)) for p in pts for q in pts)
    assert set_diameter(pts) == pytest.approx(brute, rel=1e-14)
    line = np.column_stack([np.linspace(0, 1, 100), np.linspace(0, 2, 100)])
    assert set_diameter(line) == pytest.approx(math.sqrt(5))


def test_torus_diameter_across_seam():
    C = densify([[0.95, 0.5], [1.05, 0.5]], 0.01, "torus")
    assert C.diam == pytest.approx(0.1, abs=1e-12)


def test_densify_mesh_and_endpoints():
    C = densify([[0, 0], [1, 0], [1, 1]], 0.07)
    assert C.mesh() <= 0.07
    assert np.array_equal(C.pts[0], [0, 0]) and np.allclose(C.pts[-1], [1, 1])


def test_unwrap_path_sphere_uses_antipodes():
    # a path through the cone point (0, 0): canonical reps jump, the lift does not
    pts = canon(np.array([[-0.02, 0.01], [-0.01, 0.005], [0.0, 0.0], [0.01, -0.005]]))
    lift = unwrap_path(pts, "sphere")
    assert np.max(np.hypot(*np.diff(lift, axis=0).T)) < 0.03
