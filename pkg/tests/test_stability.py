import math

import numpy as np
import pytest

from cwexp.errors import PreconditionError, ResourceError
from cwexp.hyperbolic import CAT, LAMBDA
from cwexp.perturbation import default_map, fixed_point
from cwexp.spaces import Chain, densify, torus_dist
from cwexp.stability import (
    class_separation,
    cw_step_bound,
    dist3_combine,
    dist3_constant,
    escape_bound,
    escape_experiment,
    half_cw_m_finder,
    propagate_chain,
    random_monotone_chains,
    straight_chain,
    xi_stability_test,
)
from cwexp.systems import anosov_system, ttilde_system

P = np.array([0.3, 0.3])


def _segment(e, length, eta=1e-5):
    return densify([P, P + length * e], eta, "torus")


def test_singleton_stays_singleton():
    C = Chain([[0.2, 0.7]], 1e-4, "torus")
    for ch in propagate_chain(anosov_system(), C, 5):
        assert len(ch) == 1 and ch.diam == 0


@pytest.mark.parametrize("e, factor", [(CAT.e_u, LAMBDA), (CAT.e_s, 1 / LAMBDA)])
def test_segment_growth_rates(e, factor):
    chains = propagate_chain(anosov_system(), _segment(e, 1e-4, 1e-6), 4, 1e-6)
    d = np.array([c.diam for c in chains])
    assert np.allclose(d[1:] / d[:-1], factor, rtol=0.01)
    assert all(c.mesh() <= 1e-6 * (1 + 1e-9) for c in chains)


def test_backward_propagation():
    chains = propagate_chain(anosov_system(), _segment(CAT.e_s, 1e-4), 3, backward=True)
    assert chains[-1].diam == pytest.approx(1e-4 * LAMBDA ** 3, rel=0.01)


def test_refinement_halving_eta_is_stable():
    C = densify([P, P + 2e-3 * CAT.e_u + 1e-3 * CAT.e_s], 1e-4, "torus")
    a = [c.diam for c in propagate_chain(anosov_system(), C, 4, 1e-4)]
    b = [c.diam for c in propagate_chain(anosov_system(), C, 4, 5e-5)]
    assert np.allclose(a, b, rtol=0.01)


def test_budget_error_names_step():
    with pytest.raises(ResourceError) as info:
        propagate_chain(anosov_system(), _segment(CAT.e_u, 1e-3, 1e-4), 6, 1e-4, budget=500)
    assert info.value.step is not None and "step" in str(info.value)


def test_xi_stability_examples():
    s = anosov_system()
    rep = xi_stability_test(s, Chain([[0.0, 0.0]], 1e-4, "torus"), 0.02, 10)
    assert rep.stable and rep.first_violation is None and len(rep.diams) == 21
    rep = xi_stability_test(s, _segment(CAT.e_u, 0.002, 1e-4), 0.02, 64)
    assert rep.verdict == "violated"
    assert rep.first_violation == math.ceil(math.log(10) / math.log(LAMBDA)) == 3
    rep = xi_stability_test(s, _segment(CAT.e_u, 0.05, 1e-3), 0.02, 64)
    assert rep.first_violation == 0
    d = rep.to_dict()
    assert {"horizon", "diams", "verdict", "first_violation"} <= set(d)


def test_escape_bound():
    assert escape_bound(11, 0.02) == 7
    # the slowest point of H+_11 in K starts at x = 2 4^-11 / xi
    x, k = 2 * 4.0 ** -11 / 0.02, 0
    while x <= 0.02:
        x, k = x * LAMBDA, k + 1
    assert k == 7
    for m in range(10, 20):
        assert 0 <= escape_bound(m + 1, 0.02) - escape_bound(m, 0.02) <= 2
    assert escape_bound(2, 0.02) == 0


def test_escape_straight_segment():
    pmap = default_map()
    cert = escape_experiment(10, 11, straight_chain(10, 11), pmap)
    assert cert.valid
    assert cert.n_exit <= 7 and cert.exit_diam > 0.01
    assert set(cert.to_dict()) >= {"n", "m", "n_star", "n_exit", "exit_diam"}


def test_escape_preconditions():
    pmap = default_map()
    with pytest.raises(PreconditionError):
        escape_experiment(10, 12, straight_chain(10, 11), pmap)
    big = densify([fixed_point(10), [0.012, 0.0], fixed_point(11)], 1e-4, "plane")
    with pytest.raises(PreconditionError):
        escape_experiment(10, 11, big, pmap)
    with pytest.raises(PreconditionError):
        escape_experiment(11, 10, straight_chain(10, 11), pmap)


def test_class_separation_family():
    fam = random_monotone_chains(10, 11, 12, seed=5)
    assert np.array_equal(fam[0].pts, straight_chain(10, 11).pts)
    rep = class_separation(10, 11, fam)
    assert len(rep.certificates) == 12 and rep.all_valid and rep.max_exit <= 7
    assert "sampled evidence" in rep.to_dict()["note"]
    assert class_separation(10, 11, []).certificates == []


def test_random_chains_are_seeded():
    a = random_monotone_chains(10, 11, 4, seed=9)
    b = random_monotone_chains(10, 11, 4, seed=9)
    assert all(np.array_equal(x.pts, y.pts) for x, y in zip(a, b))


def test_half_cw_finder():
    s = anosov_system()
    singles = [Chain([[0.1 * k, 0.2]], 1e-4, "torus") for k in range(3)]
    assert half_cw_m_finder(s, 0.05, 0.03, singles, 5, xi=0.02).m_found == 0
    # alpha a hair above epsilon keeps epsilon < alpha strict
    eps = 0.01
    seg = [_segment(CAT.e_u, eps / 2 * (1 + 1e-6), 1e-4)]
    assert seg[0].diam >= eps / 2
    assert half_cw_m_finder(s, eps * (1 + 1e-9), eps, seg, 5).m_found == 1
    # with epsilon = 0 the fixed point is a witness against every m
    witness = [Chain([[0.0, 0.0]], 1e-4, "torus")]
    assert not half_cw_m_finder(s, 0.05, 0.0, witness, 3).found
    with pytest.raises(PreconditionError):
        half_cw_m_finder(s, 0.01, 0.02, seg, 3)


def test_half_cw_not_found():
    # the rotation by a quarter turn is an isometry, so diameters never grow
    from cwexp.systems import System
    rot = System("rot", "plane", lambda p: p @ np.array([[0, 1], [-1, 0]]),
                 lambda p: p @ np.array([[0, -1], [1, 0]]))
    C = densify([[0, 0], [0.01, 0]], 1e-3)
    probe = half_cw_m_finder(rot, 0.02, 0.015, [C], 6)
    assert not probe.found and probe.m_found is None


def test_dist3_constant_and_same_class():
    K = dist3_constant(0.02, math.sqrt(2) / 2)
    assert K == pytest.approx(0.008284271247461901, abs=1e-17)
    d3 = dist3_combine(K, torus_dist, lambda p: int(p[0] > 0.5), lambda a, b: float(a != b))
    x, y = np.array([0.1, 0.2]), np.array([0.3, 0.9])
    assert d3(x, y) == K * torus_dist(x, y)
    assert d3(x, np.array([0.7, 0.2])) == K * torus_dist(x, [0.7, 0.2]) + 1.0
    with pytest.raises(ValueError):
        dist3_combine(0.0, torus_dist, id, id)


def test_cw_step_bound():
    assert cw_step_bound(0.02) == 6
