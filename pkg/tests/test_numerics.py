import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from xcurve.errors import NoConvergence, PathLost, ZeroAtEndpoint, ZeroOnBoundary
from xcurve.numerics.continuation import arclength_continuation, continuation
from xcurve.numerics.degree import degree_1d, winding_certificate, winding_number
from xcurve.numerics.integrate import IntegratorConfig, integrate_ivp
from xcurve.numerics.newton import fd_jacobian, newton_nd
from xcurve.numerics.singular import KernelKind, SingularKernel, singular_start


# ------------------------------------------------------------ integrator


def test_exponential():
    sol = integrate_ivp(lambda t, y: y, 0.0, 1.0, [1.0])
    assert sol.y1[0] == pytest.approx(math.e, rel=1e-10)


def test_harmonic_oscillator():
    sol = integrate_ivp(lambda t, y: np.array([y[1], -y[0]]), 0.0, math.pi / 2, [0.0, 1.0])
    assert sol.y1[0] == pytest.approx(1.0, abs=1e-10)
    # dense output agrees with the exact solution between steps
    t = np.linspace(0, math.pi / 2, 50)
    assert np.max(np.abs(sol(t)[0] - np.sin(t))) < 1e-9


def test_backwards_and_breakpoints():
    sol = integrate_ivp(lambda t, y: -y, 1.0, 0.0, [1.0], breakpoints=(0.3, 0.6))
    assert sol.y1[0] == pytest.approx(math.e, rel=1e-10)


def test_tolerance_order():
    errs = []
    for tol in (1e-3, 1e-5, 1e-7):
        cfg = IntegratorConfig(abs_tol=tol, rel_tol=tol, max_step=30.0)
        errs.append(abs(integrate_ivp(lambda t, y: np.cos(t) * y, 0.0, 30.0, [1.0], cfg).y1[0] - math.exp(math.sin(30.0))))
    assert errs[2] < errs[1] < errs[0]


def test_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(abs_tol=0.0)
    with pytest.raises(ValueError):
        IntegratorConfig(singular_offset=1.0)


# ---------------------------------------------------------- singular start


def test_homogeneous_kernel_is_zero():
    start = singular_start(SingularKernel(KernelKind.SO2_FIRST, lambda u, c, p: np.zeros_like(u)))
    comp = start.components(np.linspace(0, start.eps, 5))[0]
    assert np.all(comp.s == 0) and np.all(comp.ds == 0)


@pytest.mark.parametrize("kind, s_exact, ds_exact", [
    # s'' - s'/u = u:  s = u^3/3
    (KernelKind.SO2_FIRST, lambda u: u**3 / 3, lambda u: u**2),
    # s'' + s'/u - s/u^2 = u:  s = u^3/8
    (KernelKind.SO2_SECOND, lambda u: u**3 / 8, lambda u: 3 * u**2 / 8),
    # s'' - 2 s/u^2 = u:  s = u^3/4
    (KernelKind.SO3, lambda u: u**3 / 4, lambda u: 3 * u**2 / 4),
])
def test_constant_source(kind, s_exact, ds_exact):
    start = singular_start(SingularKernel(kind, lambda u, c, p: np.ones_like(u)), eps=1e-2)
    u = np.linspace(0, start.eps, 7)
    comp = start.components(u)[0]
    assert comp.s[0] == 0.0 and comp.ds[0] == 0.0
    assert np.allclose(comp.s[1:], s_exact(u[1:]), atol=0.0, rtol=1e-10)
    assert np.allclose(comp.ds[1:], ds_exact(u[1:]), atol=0.0, rtol=1e-10)


def test_so3_kernel_round_oracle():
    # l = -cos(pi u/2) near r = -1, with v = l + 1 = alpha u^2/2 + s and alpha = pi^2/4
    alpha = math.pi**2 / 4

    def source(u, comps, _):
        s_u2 = comps[0].s_u2
        q = s_u2 + 0.5 * alpha  # v/u^2 with v = l + 1
        v = q * u * u
        u2_over_sigma = (u * (math.pi / 2) / np.sin(math.pi * u / 2)) ** 2
        # l^3 - l = (v - 1)(v - 2) v; s'' = (l^3 - l)/sigma - alpha and s'' - 2 s/u^2 = u S
        return ((v - 1.0) * (v - 2.0) * q * u2_over_sigma - alpha - 2.0 * s_u2) / u

    start = singular_start(SingularKernel(KernelKind.SO3, source), eps=1e-2)
    u = start.eps
    v = start.components([u])[0].s[0] + 0.5 * alpha * u * u
    assert v - 1.0 == pytest.approx(math.sin(math.pi * (-1 + u) / 2), abs=1e-9)


# ---------------------------------------------------------------- Newton


def test_newton_square_root():
    res = newton_nd(lambda x: x**2 - 4, [3.0], tol=1e-14)
    assert res.x[0] == pytest.approx(2.0, abs=1e-13)


def test_newton_no_real_root():
    with pytest.raises(NoConvergence) as info:
        newton_nd(lambda x: x**2 + 1, [1.0])
    assert info.value.best is not None


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_fd_jacobian_linear(a, b):
    M = np.array([[a, 1.0], [2.0, b]])
    J = fd_jacobian(lambda x: M @ x, np.array([0.3, -0.7]))
    assert np.allclose(J, M, atol=1e-8)


# ---------------------------------------------------------------- degree


def test_winding_identity_and_reflection():
    rect = (-1.0, 1.0, -1.0, 1.0)
    assert winding_number(lambda z: z, rect) == 1
    assert winding_number(lambda z: np.array([z[0], -z[1]]), rect) == -1


def test_winding_zero_outside():
    assert winding_number(lambda z: z - 5.0, (-1.0, 1.0, -1.0, 1.0)) == 0


def test_winding_zero_on_boundary():
    with pytest.raises(ZeroOnBoundary):
        winding_certificate(lambda z: z - np.array([1.0, 0.0]), (-1.0, 1.0, -1.0, 1.0))


@given(st.integers(-3, 3).filter(lambda k: k != 0))
def test_winding_power_map(k):
    def F(z):
        w = complex(*z) ** k if k > 0 else complex(*z).conjugate() ** (-k)
        return np.array([w.real, w.imag])

    assert winding_number(F, (-1.0, 1.0, -1.0, 1.0)) == k


def test_degree_1d():
    assert degree_1d(lambda x: x - 1, 0.0, 2.0) == 1
    assert degree_1d(lambda x: x * x, -1.0, 1.0) == 0
    with pytest.raises(ZeroAtEndpoint):
        degree_1d(lambda x: x, 0.0, 1.0)


# ---------------------------------------------------------- continuation


def test_natural_continuation_linear():
    path = continuation(lambda p, x: x - p, (0.0, 1.0), [0.0])
    assert np.allclose(path.xs().ravel(), path.ps(), atol=1e-12)
    assert path.end.p == 1.0


def test_natural_continuation_fold_is_lost():
    # x^2 + p^2 = 1 folds at p = 1; ask to continue beyond it
    with pytest.raises(PathLost):
        continuation(lambda p, x: x**2 + p**2 - 1, (0.0, 1.5), [1.0])


def test_arclength_through_fold():
    # circle x^2 + q^2 = 1 from (q, x) = (0, 1) around the fold at q = 1 to x = -0.5
    def F(z):
        return np.array([z[0] ** 2 + z[1] ** 2 - 1.0])

    def jac(z):
        return np.array([[2 * z[0], 2 * z[1]]])

    curve = arclength_continuation(F, jac, np.array([0.0, 1.0]), np.array([1.0, 0.0]), stop=(1, -0.5),
                                   ds0=0.05, ds_max=0.1)
    zs = curve.zs()
    assert np.allclose(zs[:, 0] ** 2 + zs[:, 1] ** 2, 1.0, atol=1e-10)
    assert zs[:, 0].max() > 0.99
    assert curve.end.z[1] == pytest.approx(-0.5, abs=1e-12)
