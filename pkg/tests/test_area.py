import numpy as np
import pytest

from cwexp.area import jacobian, jacobian_check, mass_check, verify_area
from cwexp.hyperbolic import LinearModel
from cwexp.perturbation import default_map, fixed_point


class _Scaled:
    """Uniform scaling by 1.05: not area preserving."""

    def apply(self, p):
        return 1.05 * np.asarray(p)

    def inverse(self, p):
        return np.asarray(p) / 1.05


def test_linear_model_jacobian_exact(rng):
    T = LinearModel()
    J = jacobian(T.apply, rng.uniform(-1, 1, (100, 2)), 1e-20)
    assert np.array_equal(np.linalg.det(J), np.ones(100))


def test_complex_and_central_agree_off_the_annulus():
    pmap = default_map()
    p = fixed_point(10)[None, :] * 1.01
    Jc = jacobian(pmap.apply, p, 1e-20 / 1024)
    Jr = jacobian(pmap.apply, p, 1e-6 / 1024, "central")
    assert np.allclose(Jc, Jr, rtol=1e-6, atol=1e-6)


def test_jacobian_unknown_method():
    with pytest.raises(ValueError):
        jacobian(lambda p: p, np.zeros((1, 2)), 1e-6, "forward")


def test_jacobian_check_small():
    dev, excluded, smooth, ann = jacobian_check(default_map(), samples=5000, seed=1)
    assert dev < 1e-6
    assert smooth < 1e-6


def test_mass_check_detects_scaling():
    rect = (0.2, 0.3, 0.2, 0.3)
    m = mass_check(_Scaled(), rect, samples=200_000, seed=0)
    assert not m.within_3sigma
    assert m.ratio == pytest.approx(1.05 ** 2, rel=0.02)


def test_verify_area_reduced():
    stats = verify_area(default_map(), samples=5000, seed=2, mc_samples=200_000)
    assert stats.passed()
    assert len(stats.mass) == 3
    d = stats.to_dict()
    assert d["method"] == "complex" and all(m["within_3sigma"] for m in d["mass"])
