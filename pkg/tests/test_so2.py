import math

import numpy as np
import pytest

from oracles import HP, so2_round
from xcurve import so2
from xcurve.errors import ProfileInvalid
from xcurve.profiles import AnalyticProfile, ScaledProfile, named_profile

A1, A2 = HP * HP, HP  # l1''(0) and l2'(0) of the round solution


def round_profile():
    return so2.ProfileSO2(**named_profile("sine-cosine-round"))


def perturbed_profile(eps=0.05):
    y1 = AnalyticProfile(f"(2/pi)*sin(pi*r/2) + {eps}*r**3*(1-r)**4", 0, 1, ("odd", "even"))
    y2 = AnalyticProfile(f"(2/pi)*cos(pi*r/2) + {eps}*(1-r)**3*r**4", 0, 1, ("even", "odd"))
    return so2.ProfileSO2(y1, y2)


def test_truncate_F():
    assert so2.truncate_F(np.array([0.0, 1.0, 2.0])) == pytest.approx([0.0, 1.0, 4.0], abs=1e-14)
    assert so2.truncate_F(3.1) == 0.0
    x = np.linspace(-4, 4, 100001)
    F = so2.truncate_F(x)
    assert np.max(F) <= 8.0 and np.min(F) >= 0.0


def test_shoot_from_0_round_oracle():
    y = round_profile()
    t = np.linspace(0, 0.5, 21)
    st = so2.shoot_from_0(y, 1.0, A1, A2).state(t)
    _, _, l1, l2, _, _, _ = so2_round(t)
    assert np.allclose(st[0], l1, atol=1e-8)
    assert np.allclose(st[2], l2, atol=1e-8)


def test_shoot_from_1_round_oracle():
    y = round_profile()
    t = np.linspace(0.5, 1, 21)
    st = so2.shoot_from_1(y, 1.0, HP, HP * HP).state(t)
    _, _, l1, l2, _, _, _ = so2_round(t)
    assert np.allclose(st[0], l1, atol=1e-8)
    assert np.allclose(st[2], l2, atol=1e-8)


def test_zero_parameters_are_stationary():
    y = round_profile()
    t = np.linspace(0, 0.5, 11)
    st = so2.shoot_from_0(y, 1.0, 0.0, 0.0).state(t)
    assert np.allclose(st[0], -1.0, atol=1e-15) and np.allclose(st[2], 0.0, atol=1e-15)
    st = so2.shoot_from_1(y, 1.0, 0.0, 0.0).state(1 - t)
    assert np.allclose(st[0], 0.0, atol=1e-15) and np.allclose(st[2], 1.0, atol=1e-15)


def test_G_round_zero():
    assert np.allclose(so2.G(round_profile(), 1.0, (A1, A2), (HP, HP * HP)), 0.0, atol=1e-8)


def test_G_at_origin_constant_shots():
    # zero parameters give the constant shots only where F(0) = 0 decouples them, at p = 1
    assert np.allclose(so2.G(round_profile(), 1.0, (0, 0), (0, 0)), [1.0, 0.0, 1.0, 0.0], atol=1e-14)
    assert not np.allclose(so2.G(round_profile(), 0.0, (0, 0), (0, 0)), [1.0, 0.0, 1.0, 0.0], atol=1e-3)


def test_p0_blocks_are_affine_and_decoupled():
    y = perturbed_profile()
    deg = so2.p0_blocks(so2.ShotCacheSO2(y, 0.0))
    assert deg.coupling <= 1e-9
    for b in deg.blocks:
        assert b.affine_defect <= 1e-9
        assert b.degree in (1, -1)
        assert b.probe_det < 0
    assert deg.degree in (1, -1)


def test_solve_round(so2_round_solution):
    sol = so2_round_solution
    t = np.linspace(0, 1, 2001)
    st = sol.state(t)
    assert np.max(np.abs(st[0] + np.cos(HP * t))) <= 1e-6
    assert np.max(np.abs(st[2] - np.sin(HP * t))) <= 1e-6
    assert sol.residual.sup <= 1e-6
    assert sol.extra["bounds_hold"] and sol.extra["truncation_inactive"]


def test_solve_perturbed_closed_loop():
    sol = so2.solve(perturbed_profile())
    assert sol.residual.sup <= 1e-6
    assert sol.bounds_margin() > 1e-10
    assert sol.extra["truncation_inactive"]


def test_reconstruct_round(so2_round_solution):
    g = so2_round_solution.metric
    t = np.linspace(0, 1, 401)
    _, _, _, _, h, f1, f2 = so2_round(t)
    assert np.allclose(g.h(t), h, atol=1e-9)
    assert np.allclose(g.f1(t), f1, atol=1e-9)
    assert np.allclose(g.f2(t), f2, atol=1e-9)
    assert g.h(0.0) == pytest.approx(math.pi**2 / 4, abs=1e-9)
    assert abs(g.defects["f1'(0) - h(0)"]) <= 1e-8


def test_forward_cross_closed_form():
    h = AnalyticProfile(f"{math.pi**2 / 4} + 0*r", 0, 1)
    f1 = AnalyticProfile("(pi/2)*sin(pi*r/2)", 0, 1)
    f2 = AnalyticProfile("(pi/2)*cos(pi*r/2)", 0, 1)
    x_rr, x_11, x_22 = so2.forward_cross(so2.MetricSO2(h, f1, f2))
    t = np.linspace(0, 1, 201)
    y1, y2, *_ = so2_round(t)
    assert np.allclose(x_rr(t), 1.0, atol=1e-12)
    assert np.allclose(x_11(t), y1**2, atol=1e-12)
    assert np.allclose(x_22(t), y2**2, atol=1e-12)


@pytest.mark.parametrize("c", [0.5, 2.0])
def test_scaling_law(so2_round_solution, c):
    g = so2_round_solution.metric
    base = so2.forward_cross(g)
    scaled = so2.forward_cross(so2.MetricSO2(*(ScaledProfile(p, c) for p in (g.h, g.f1, g.f2))))
    t = np.linspace(0, 1, 101)
    for x, sx in zip(base, scaled):
        assert np.allclose(sx(t), x(t) / c**2, rtol=1e-9, atol=1e-14)


def test_validate_rejects_slope():
    y = round_profile()
    with pytest.raises(ProfileInvalid) as info:
        so2.validate_y(so2.ProfileSO2(ScaledProfile(y.y1, 0.9), y.y2))
    assert any("y1'(0)" in d for d in info.value.defects)


def test_validate_rejects_domain():
    y = round_profile()
    with pytest.raises(ProfileInvalid):
        so2.validate_y(so2.ProfileSO2(AnalyticProfile("r", 0, 2), y.y2))
