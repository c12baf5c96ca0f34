import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from xcurve.errors import ProfileInvalid
from xcurve.profiles import (AnalyticProfile, ChebProfile, ReflectedProfile, SampledProfile, ScaledProfile,
                             minus_ratio_derivatives, named_profile, smoothstep, smoothstep_d)


def test_named_profiles():
    y = named_profile("cosine-round")["y"]
    assert y(-1.0, 1) == pytest.approx(1.0, abs=1e-15)
    assert y(1.0, 1) == pytest.approx(-1.0, abs=1e-15)
    assert set(named_profile("sine-cosine-round")) == {"y1", "y2"}
    with pytest.raises(ProfileInvalid):
        named_profile("nope")


def test_analytic_rejects_other_symbols():
    with pytest.raises(ProfileInvalid):
        AnalyticProfile("r*s", 0, 1)


def test_ratio_taylor_matches_direct():
    y = named_profile("cosine-round")["y"]
    u = np.array([1e-6, 5e-5, 2e-4, 1e-2])
    exact = np.cos(math.pi * (-1 + u) / 2) * 2 / math.pi / u
    assert np.allclose(y.ratio(u, "left"), exact, rtol=1e-12)
    assert np.allclose(y.ratio(u, "right"), exact, rtol=1e-12)


def test_sampled_cubic_reflection_keeps_parity():
    x = np.linspace(-1, 1, 201)
    s = SampledProfile(x, np.cos(math.pi * x / 2) * 2 / math.pi, ("odd", "odd"))
    # odd about the end means y'' = 0 there
    assert abs(s(-1.0, 2)) <= 1e-10
    assert s(-1.0, 1) == pytest.approx(1.0, abs=1e-5)


def test_sampled_validation():
    with pytest.raises(ProfileInvalid):
        SampledProfile([0, 1, 0.5, 2], [0, 1, 2, 3])
    with pytest.raises(ProfileInvalid):
        SampledProfile([0, 1, 2, 3], [0, np.nan, 2, 3])
    with pytest.raises(ValueError):
        SampledProfile(np.linspace(0, 1, 10), np.zeros(10), degree=4)


def test_cheb_fit_and_derivatives():
    p = ChebProfile.fit(np.exp, -1.0, 2.0, tol=1e-14)
    r = np.linspace(-1, 2, 101)
    for nu in range(4):
        assert np.allclose(p(r, nu), np.exp(r), rtol=1e-10)


def test_cheb_parity_is_exact_at_ends():
    p = ChebProfile.fit_with_parity(np.sin, 0.0, 1.0, ("odd", "even"), tol=1e-14)
    assert p(0.0) == 0.0 and p(0.0, 2) == 0.0
    assert np.allclose(p(np.linspace(0, 1, 51)), np.sin(np.linspace(0, 1, 51)), atol=1e-13)


def test_cheb_antiderivative():
    p = ChebProfile.fit(np.cos, 0.0, 3.0, breakpoints=(1.0, 2.0))
    F = p.antiderivative()
    r = np.linspace(0, 3, 31)
    assert np.allclose(F(r), np.sin(r), atol=1e-13)


@given(st.floats(0.1, 10.0))
def test_scaled_profile(c):
    y = named_profile("cosine-round")["y"]
    s = ScaledProfile(y, c)
    r = np.linspace(-1, 1, 9)
    assert np.allclose(s(r, 1), c * np.asarray(y(r, 1)))


def test_reflected_profile():
    y = AnalyticProfile("r**2 + r", 0, 1)
    m = ReflectedProfile(y)
    assert m(0.25) == pytest.approx(y(0.75))
    assert m(0.25, 1) == pytest.approx(-y(0.75, 1))


def test_minus_ratio_derivatives():
    f = AnalyticProfile("sin(r)", 0, 1)
    h = AnalyticProfile("1 + r**2", 0, 1)
    r = np.linspace(0, 1, 7)
    l0, l1, l2 = minus_ratio_derivatives(f, h, r)
    ref = lambda t: -np.cos(t) / (1 + t * t)  # noqa: E731
    d = 1e-5
    assert np.allclose(l0, ref(r))
    assert np.allclose(l1, (ref(r + d) - ref(r - d)) / (2 * d), atol=1e-9)
    assert np.allclose(l2, (ref(r + d) - 2 * ref(r) + ref(r - d)) / d**2, atol=1e-5)


def test_smoothstep():
    t = np.linspace(-0.5, 1.5, 401)
    s = smoothstep(t)
    assert s[0] == 0 and s[-1] == 1 and np.all(np.diff(s) >= 0)
    d = 1e-6
    inner = t[(t > 0.01) & (t < 0.99)]
    assert np.allclose(smoothstep_d(inner), (smoothstep(inner + d) - smoothstep(inner - d)) / (2 * d), atol=1e-8)
