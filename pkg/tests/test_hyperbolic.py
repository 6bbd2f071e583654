import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cwexp.errors import DomainError
from cwexp.hyperbolic import (
    CAT,
    LAMBDA,
    LOG_LAMBDA,
    AnosovMap,
    EigenChart,
    HyperCoord,
    LinearModel,
    anosov_apply,
    anosov_inv,
    chart_to_torus,
    from_hyper,
    linear_T_apply,
    linear_T_inv,
    to_hyper,
    torus_to_chart,
)
from cwexp.spaces import PlanePoint, TorusPoint, torus_dist

pos = st.floats(1e-6, 1e3)


def test_constants():
    assert LAMBDA == pytest.approx(2.618033988749895, abs=1e-15)
    assert LOG_LAMBDA == pytest.approx(0.9624236501192069, abs=1e-15)
    assert LAMBDA * (1 / LAMBDA) == pytest.approx(1.0, abs=1e-15)


def test_eigen_structure():
    A = CAT.A.astype(float)
    assert np.linalg.norm(A @ CAT.e_u - LAMBDA * CAT.e_u) < 1e-12
    assert np.linalg.norm(A @ CAT.e_s - CAT.e_s / LAMBDA) < 1e-12
    assert abs(CAT.e_u @ CAT.e_s) < 1e-15
    R = CAT.rotation
    assert np.allclose(R.T @ R, np.eye(2)) and np.linalg.det(R) == pytest.approx(1.0)


def test_anosov_rejects_non_hyperbolic():
    with pytest.raises(ValueError):
        AnosovMap(((1, 1), (0, 1)))


def test_anosov_examples(rng):
    assert np.array_equal(anosov_apply(np.zeros(2)), [0, 0])
    assert np.array_equal(anosov_apply(np.array([0.5, 0.5])), [0.5, 0.0])
    assert anosov_apply(TorusPoint(0.5, 0.0)) == TorusPoint(0.0, 0.5)
    p = rng.random((1000, 2))
    assert np.max(torus_dist(anosov_inv(anosov_apply(p)), p)) < 1e-14


def test_linear_model_examples(rng):
    q = linear_T_apply(PlanePoint(1.0, 1.0))
    assert (q.x, q.y) == pytest.approx((2.618033988749895, 0.3819660112501051))
    p = rng.uniform(-3, 3, (10_000, 2))
    assert np.allclose(np.prod(linear_T_apply(p), axis=1), np.prod(p, axis=1), rtol=1e-14, atol=1e-15)
    assert np.allclose(linear_T_inv(linear_T_apply(p)), p)
    k = 0.7
    x = np.linspace(0.1, 2, 10)
    img = linear_T_apply(np.column_stack([x, k * x]))
    assert np.allclose(img[:, 1], k * LAMBDA ** -2 * img[:, 0])
    with pytest.raises(ValueError):
        LinearModel(0.5)


def test_hyper_examples():
    h = to_hyper(PlanePoint(1.0, 1.0))
    assert (h.u, h.v) == (1.0, 0.0)
    p = from_hyper(HyperCoord(2.0, 0.0))
    assert (p.x, p.y) == pytest.approx((1.4142135623730951, 1.4142135623730951))
    with pytest.raises(DomainError):
        to_hyper(PlanePoint(-1.0, 1.0))
    with pytest.raises(DomainError):
        from_hyper(HyperCoord(0.0, 1.0))


@given(pos, pos)
def test_hyper_round_trip_and_shear(x, y):
    p = np.array([x, y])
    assert np.allclose(from_hyper(to_hyper(p)).as_array(), p, rtol=1e-12)
    u, v = to_hyper(p).as_array()
    u2, v2 = to_hyper(linear_T_apply(p)).as_array()
    assert u2 == pytest.approx(u, rel=1e-13)
    assert v2 == pytest.approx(v - LOG_LAMBDA, abs=1e-12 * max(1, abs(v)))


def test_hyper_jacobian_is_one(rng):
    p = rng.uniform(0.1, 3.0, (10_000, 2))
    h = 1e-6
    J = np.empty((len(p), 2, 2))
    for j in range(2):
        e = np.zeros(2)
        e[j] = h
        J[:, :, j] = (to_hyper(p + e) - to_hyper(p - e)) / (2 * h)
    assert np.max(np.abs(np.linalg.det(J) - 1)) < 1e-6


def test_chart_conjugacy(rng):
    chart = EigenChart()
    p = rng.uniform(-0.07, 0.07, (20_000, 2))
    Tp = linear_T_apply(p)
    keep = (np.hypot(*p.T) < chart.r_V) & (np.hypot(*Tp.T) < chart.r_V)
    p, Tp = p[keep][:10_000], Tp[keep][:10_000]
    res = torus_dist(anosov_apply(chart.to_torus(p)), chart.to_torus(Tp))
    assert np.max(res) < 1e-12


def test_chart_is_isometric(rng):
    chart = EigenChart()
    p, q = rng.uniform(-0.09, 0.09, (2, 1000, 2))
    d_plane = np.hypot(*(p - q).T)
    assert np.allclose(torus_dist(chart.to_torus(p), chart.to_torus(q)), d_plane, atol=1e-15)
    assert chart_to_torus(PlanePoint(0.0, 0.0)) == TorusPoint(0.0, 0.0)
    assert np.allclose(torus_to_chart(chart.to_torus(p)), p, atol=1e-15)


def test_chart_domain_errors():
    with pytest.raises(DomainError):
        chart_to_torus(PlanePoint(0.3, 0.0))
    with pytest.raises(DomainError):
        torus_to_chart(TorusPoint(0.5, 0.5))
    with pytest.raises(ValueError):
        EigenChart(r_V=0.6)


def test_segments_scale_by_lambda():
    for e, factor in ((CAT.e_u, LAMBDA), (CAT.e_s, 1 / LAMBDA)):
        seg = 0.3 + np.outer(np.linspace(0, 1e-3, 50), e)
        d0 = np.hypot(*(seg[-1] - seg[0]))
        img = anosov_apply(seg)
        d1 = np.hypot(*(img[-1] - img[0]))
        assert d1 / d0 == pytest.approx(factor, rel=0.01)
