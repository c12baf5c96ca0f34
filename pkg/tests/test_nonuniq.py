import numpy as np
import pytest

from xcurve import nonuniq as N
from xcurve.errors import InfeasibleBound


@pytest.fixture(scope="module")
def lsm():
    return N.compute_lsm()


@pytest.fixture(scope="module")
def sigma1(lsm):
    return N.build_sigma1(lsm.l_star)


def test_lsm_endpoints(lsm):
    st = lsm.state([-1.0, -7 / 8])
    assert st[0, 0] == pytest.approx(-1.0, abs=1e-15)
    assert st[0, 1] == pytest.approx(0.0, abs=1e-12)
    assert st[1, 1] == pytest.approx(lsm.l_star, rel=1e-12)


def test_l_star_at_least_eight(lsm):
    assert lsm.l_star >= 8


def test_lsm_monotone_convex(lsm):
    r = np.linspace(-1, -7 / 8, 401)
    st = lsm.state(r)
    assert np.all(st[1][1:] > 0)
    assert np.all(st[2] >= 0)


def test_sigma1_examples(sigma1):
    s = sigma1.sigma1
    assert s.value(-15 / 16) == pytest.approx((1 / 16) ** 2, abs=1e-17)
    g = np.linspace(-1, 1, 2001)
    assert np.array_equal(s.values(g), s.values(-g))
    assert np.all(s.values(g[1:-1]) > 0)


def test_sigma1_dip_bound(sigma1, lsm):
    d = sigma1.delta
    assert d == min(1 / (2 * (lsm.l_star + 1)), 7 / 16)
    grid = np.linspace(7 / 8 - 2 * d, 7 / 8 - d, 4097)
    assert np.max(sigma1.sigma1.values(grid)) < d * d * sigma1.delta0 / 2


def test_sigma1_fast_and_vector_agree(sigma1):
    s = sigma1.sigma1
    g = np.linspace(-1, 1, 777)
    assert np.allclose([s.value(float(r)) for r in g], s.values(g), rtol=1e-15, atol=0)


def test_sigma1_derivative(sigma1):
    s = sigma1.sigma1
    g = np.linspace(-0.99, 0.99, 301)
    h = 1e-7
    assert np.allclose(s.derivative(g), (s.values(g + h) - s.values(g - h)) / (2 * h), atol=1e-5)


def test_delta0_is_min_of_cubic():
    d = 0.05
    x = np.linspace(-1 + d, -8 * d / 15, 200001)
    assert N._delta0(d) == pytest.approx(np.min(x**3 - x), rel=1e-9)


def test_infeasible_bound():
    with pytest.raises(InfeasibleBound):
        N._delta0(0.99)
