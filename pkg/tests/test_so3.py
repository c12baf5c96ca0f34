import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import HP, manufactured_so3, so3_round
from xcurve import so3
from xcurve.errors import DegenerateEndpoint, ProfileInvalid
from xcurve.profiles import AnalyticProfile, FunctionProfile, ScaledProfile, named_profile

ROUND = so3.SquareOf(named_profile("cosine-round")["y"], even=True)
SEVEN_EIGHTHS = 7.0 / 8.0


def manufactured_profile(eps=0.2):
    l, dl, y, dy = manufactured_so3(eps)
    prof = FunctionProfile([lambda r, k=k: dy(r, k) for k in range(4)], -1, 1, ("odd", "odd"), "manufactured",
                           fast=lambda r: float(y(r)))
    return prof, l, dl


# ------------------------------------------------------------ truncation


def test_truncate_E_values():
    assert so3.truncate_E(np.array([1.0, -1.0, 0.0])) == pytest.approx([0.0, 0.0, 0.0], abs=0)
    assert so3.truncate_E(2.0) == pytest.approx(6.0, abs=1e-14)
    assert so3.truncate_E(3.5) == 0.0


def test_truncate_E_bounds():
    x = np.linspace(-4, 4, 100001)
    E = so3.truncate_E(x)
    assert np.max(np.abs(E)) <= 24.0
    assert np.all(E[x < -1] <= 0) and np.all(E[x > 1] >= 0)
    band = (np.abs(x) >= 2) & (np.abs(x) <= 3)
    assert np.all(np.abs(E[band]) <= np.abs(x[band] ** 3 - x[band]) + 1e-12)
    inner = np.abs(x) <= 2
    assert np.allclose(E[inner], x[inner] ** 3 - x[inner], atol=1e-13)


# --------------------------------------------------------------- shooting


def test_shoot_zero_alpha_is_constant():
    shot = so3.shoot_minus(ROUND, 0.0)
    assert np.allclose(shot.state(np.linspace(-1, 0, 11))[0], -1.0, atol=1e-15)
    plus = so3.shoot_plus(ROUND, 0.0)
    assert np.allclose(plus.state(np.linspace(0, 1, 11))[0], 1.0, atol=1e-15)


def test_shoot_round_oracle():
    end = so3.shoot_minus(ROUND, HP * HP).end()
    assert end[0] == pytest.approx(0.0, abs=1e-8)
    assert end[1] == pytest.approx(HP, abs=1e-8)
    rr = np.linspace(-1, 0, 41)
    assert np.allclose(so3.shoot_minus(ROUND, HP * HP).state(rr)[0], so3_round(rr)[1], atol=1e-8)
    plus = so3.shoot_plus(ROUND, HP * HP).state(0.0)[:, 0]
    assert plus[0] == pytest.approx(0.0, abs=1e-8) and plus[1] == pytest.approx(HP, abs=1e-8)


@given(st.floats(0.1, 20.0))
def test_shoot_plus_mirrors_minus_for_even_sigma(c):
    rr = np.linspace(0.0, 1.0, 9)
    plus = so3.shoot_plus(ROUND, c).state(rr)[0]
    minus = so3.shoot_minus(ROUND, c).state(-rr)[0]
    assert np.allclose(plus, -minus, atol=1e-12)


def test_J_round_zero():
    assert np.allclose(so3.J(ROUND, HP * HP, HP * HP), 0.0, atol=1e-8)


@given(st.floats(0.1, 20.0))
def test_J_diagonal_second_component_vanishes(c):
    assert abs(so3.J(ROUND, c, c)[1]) <= 1e-10


def test_sigma0_examples(sigma0_data):
    sig, cert = sigma0_data
    assert sig.value(-1.0) == 0.0
    assert sig.value(-15 / 16) == pytest.approx((1 / 16) ** 2, abs=1e-17)
    g = np.linspace(-1, 1, 2001)
    assert np.array_equal(sig.values(g), sig.values(-g))
    assert all(cert.properties.values()) and len(cert.properties) == 5
    assert cert.alpha0 == pytest.approx(64 * (cert.r_star + 1) ** 2, rel=1e-15)
    assert cert.mid_integral < min(cert.l_star / 48, 1 / 192)
    assert so3.shoot_left(sig, cert.alpha0, -SEVEN_EIGHTHS).end()[0] > 1.0


def test_J0_at_origin(sigma0_data):
    sig, _ = sigma0_data
    assert np.allclose(so3.J(sig, 0.0, 0.0), [2.0, 0.0], atol=1e-12)


# ------------------------------------------------------------------ solve


def test_solve_round(so3_round_solution):
    sol = so3_round_solution
    rr = np.linspace(-1, 1, 2001)
    assert np.max(np.abs(sol.l(rr) - np.sin(HP * rr))) <= 1e-6
    assert sol.residual.sup <= 1e-6
    assert sol.degree.winding == -1
    assert sol.alpha == pytest.approx(HP * HP, rel=1e-8)


def test_solve_manufactured_non_round():
    y, l, dl = manufactured_profile()
    sol = so3.solve(y)
    rr = np.linspace(-1, 1, 2001)
    assert np.max(np.abs(sol.l(rr) - l(rr))) <= 1e-6
    assert np.max(np.abs(sol.dl(rr) - dl(rr))) <= 1e-6
    assert sol.residual.sup <= 1e-6
    # l''(-1) = theta'(-1)^2
    assert sol.alpha == pytest.approx((HP * (1 - 0.2)) ** 2, rel=1e-8)


def test_solve_rejects_bad_slope():
    y = ScaledProfile(named_profile("cosine-round")["y"], 1.1)
    with pytest.raises(ProfileInvalid) as info:
        so3.solve(y)
    assert any("y'(-1)" in d for d in info.value.defects)


def test_validate_rejects_interior_zero():
    y = AnalyticProfile("(2/pi)*cos(pi*r/2)*r**2", -1, 1)
    with pytest.raises(ProfileInvalid):
        so3.validate_y(y)


def test_validate_rejects_domain():
    with pytest.raises(ProfileInvalid):
        so3.validate_y(AnalyticProfile("sin(pi*r)/pi", 0, 1))


# ---------------------------------------------------------- reconstruction


def test_reconstruct_round(so3_round_solution):
    g = so3_round_solution.metric
    rr = np.linspace(-1, 1, 401)
    _, _, _, f, h = so3_round(rr)
    assert np.allclose(g.f(rr), f, atol=1e-9)
    assert np.allclose(g.h(rr), h, atol=1e-9)
    assert g.h(-1.0) == pytest.approx(math.pi**2 / 4, abs=1e-9)
    assert abs(g.defects["f'(-1) - h(-1)"]) <= 1e-8


def test_forward_cross_round_metric_closed_form():
    y = named_profile("cosine-round")["y"]
    f = AnalyticProfile("(pi/2)*cos(pi*r/2)", -1, 1)
    h = AnalyticProfile(str(math.pi**2 / 4) + "+0*r", -1, 1)
    x_rr, x_qq = so3.forward_cross(so3.MetricSO3(h, f))
    rr = np.linspace(-1, 1, 201)
    assert np.allclose(x_rr(rr), 1.0, atol=1e-12)
    assert np.allclose(x_qq(rr), np.asarray(y(rr)) ** 2, atol=1e-12)
    assert x_qq(0.0)[0] == pytest.approx(4 / math.pi**2, abs=1e-14)


@pytest.mark.parametrize("c", [0.5, 2.0, 3.0])
def test_scaling_law_on_profile_solve(so3_round_solution, c):
    g = so3_round_solution.metric
    x_rr, x_qq = so3.forward_cross(g)
    sx_rr, sx_qq = so3.forward_cross(so3.MetricSO3(ScaledProfile(g.h, c), ScaledProfile(g.f, c)))
    rr = np.linspace(-0.99, 0.99, 199)
    # (h, f) -> (c h, c f) is g -> c^2 g, so X -> X/c^2
    assert np.allclose(sx_rr(rr), x_rr(rr) / c**2, rtol=1e-9)
    assert np.allclose(sx_qq(rr), x_qq(rr) / c**2, rtol=1e-9)


# -------------------------------------------------------------- scalars


def test_scalar_round(so3_round_solution):
    s_n, s_s = so3.scalar_at_singular_orbits(so3_round_solution, so3_round_solution.y)
    assert s_n == pytest.approx(24 / math.pi**2, rel=1e-8)
    assert s_n == pytest.approx(s_s, rel=1e-10)
    assert so3_round_solution.extra["scalar_check"] <= 1e-5


def test_scalar_degenerate():
    sol = so3.SolutionSO3(0.0, 1.0, None, None, ROUND)
    with pytest.raises(DegenerateEndpoint):
        so3.scalar_at_singular_orbits(sol, check=False)


# ------------------------------------------------------------- properties


def test_round_solution_properties(so3_round_solution):
    sol = so3_round_solution
    assert sol.extra["max_abs_l"] <= 1.0 + 1e-12
    assert sol.extra["min_dl_interior"] > 0
    assert sol.extra["truncation_inactive"]
    rr = np.linspace(0, 1, 501)
    assert np.max(np.abs(sol.l(rr) + sol.l(-rr))) <= 1e-8
    assert sol.max_parameters[0] <= sol.box[0] and sol.max_parameters[1] <= sol.box[1]
