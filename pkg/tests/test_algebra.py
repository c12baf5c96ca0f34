import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import koszul_ricci, su2_cross_oracle, su2_structure
from xcurve import algebra as A
from xcurve.errors import NonPositiveMetric, NotPositiveCrossTensor, PositivityLost, SingularEinstein

entries = st.floats(0.2, 5.0)
triples = st.tuples(entries, entries, entries)


def spd(rng, n=3):
    m = rng.standard_normal((n, n))
    return m @ m.T + 0.5 * np.eye(n)


# ------------------------------------------------------------ pointwise


def test_cross_round_pointwise():
    assert np.allclose(A.cross_from_einstein(np.eye(3), -np.eye(3)), np.eye(3), atol=1e-15)


def test_cross_from_eigenvalues():
    X = A.cross_from_einstein(np.eye(3), np.diag([-1.0, -2.0, -3.0]))
    assert np.allclose(X, np.diag([6.0, 3.0, 2.0]), atol=1e-14)


def test_cross_singular_einstein():
    with pytest.raises(SingularEinstein):
        A.cross_from_einstein(np.eye(3), np.zeros((3, 3)))


def test_fmap_identity():
    T = A.fmap(np.eye(3))
    e = np.eye(3)
    assert np.allclose(T.M, np.eye(3))
    for i, j, k in A.CYCLIC:
        assert np.allclose(T(e[i], e[j]), e[k])


def test_fmap_stretched():
    T = A.fmap(np.diag([4.0, 1.0, 1.0]))
    e = np.eye(3)
    assert np.allclose(T(e[0], e[1]), 2 * e[2])
    assert np.allclose(T(e[1], e[2]), 0.5 * e[0])
    assert np.allclose(T(e[2], e[0]), 2 * e[1])


@given(st.floats(0.01, 100.0))
def test_fmap_scaling(c):
    assert np.allclose(A.fmap(c * np.eye(3)).M, np.sqrt(c) * np.eye(3), rtol=1e-13)


def test_fmap_antisymmetric_trace_free():
    rng = np.random.default_rng(3)
    T = A.fmap(spd(rng))
    comps = T.components()
    assert np.allclose(comps, -np.swapaxes(comps, 1, 2))
    # trace of B -> T(A, B) vanishes
    for a in np.eye(3):
        assert abs(np.trace(np.array([T(a, b) for b in np.eye(3)]).T)) < 1e-13


def test_fmap_inverse_identity_and_negative():
    assert np.allclose(A.fmap_inverse(np.eye(3)), np.eye(3))
    with pytest.raises(NotPositiveCrossTensor):
        A.fmap_inverse(np.diag([1.0, 1.0, -1.0]))


def test_fmap_round_trip_sweep():
    rng = np.random.default_rng(20)
    worst = max(float(np.max(np.abs(A.fmap_inverse(A.fmap(Y)) - Y))) for Y in (spd(rng) for _ in range(1000)))
    assert worst <= 1e-10


# -------------------------------------------------------------- SU(2)


def test_su2_fixed_values():
    assert np.max(np.abs(A.su2_cross([1, 1, 1]) - 1 / 16)) <= 1e-15
    assert np.max(np.abs(A.su2_cross([0.25] * 3) - 0.25)) <= 1e-15


def test_su2_cross_hand_value():
    X = A.su2_cross([1, 1, 2])
    assert X[0] == pytest.approx(-0.25, abs=1e-15)
    via_einstein = np.diag(A.cross_from_einstein(np.diag([1.0, 1.0, 2.0]), A.su2_einstein([1, 1, 2])))
    assert np.allclose(via_einstein, X, atol=1e-14)


def test_su2_ricci_round():
    assert np.allclose(np.diag(A.su2_ricci([1, 1, 1])), 0.5)
    ein = np.diag(A.su2_einstein([1, 1, 1]))
    assert np.allclose(ein, 0.5 - 0.75)
    assert np.allclose(A.su2_ricci([0.25] * 3), 2 * 0.25 * np.eye(3))


@given(triples)
def test_su2_ricci_matches_koszul(rho):
    ref = koszul_ricci(np.diag(rho), su2_structure())
    assert np.allclose(A.su2_ricci(rho), ref, atol=1e-12 * max(1.0, np.abs(ref).max()))


@given(triples)
def test_su2_cross_matches_oracle(rho):
    ref = su2_cross_oracle(rho)
    assert np.allclose(A.su2_cross(rho), ref, rtol=1e-10, atol=1e-12)


@given(triples)
def test_su2_cross_permutation_equivariant(rho):
    r = np.array(rho)
    X = A.su2_cross(r)
    # cyclic relabelling preserves the bracket
    assert np.allclose(A.su2_cross(np.roll(r, 1)), np.roll(X, 1), rtol=1e-13, atol=1e-15)


@given(triples, st.floats(0.1, 10.0))
def test_su2_scaling_law(rho, c):
    X = A.su2_cross(rho)
    assert np.allclose(A.su2_cross(c * np.array(rho)), X / c, rtol=1e-12, atol=1e-15)


def test_su2_nonpositive_metric():
    with pytest.raises(NonPositiveMetric):
        A.su2_cross([1.0, 0.0, 1.0])


def test_su2_solve_fixed():
    assert np.allclose(A.su2_solve([1 / 16] * 3), 1.0, rtol=1e-12)
    assert np.allclose(A.su2_solve([0.25] * 3), 0.25, rtol=1e-12)


@given(triples)
def test_su2_solve_round_trip(rho):
    X = A.su2_cross(rho)
    if not np.all(X > 0):
        return
    assert np.allclose(A.su2_solve(X), rho, rtol=1e-8)


def test_su2_solve_rejects_nonpositive():
    with pytest.raises(ValueError):
        A.su2_solve([1.0, -1.0, 1.0])


def test_lambda_ratio():
    assert A.lambda_ratio([1, 1, 1]) == 1
    assert A.lambda_ratio([2, 1, 1]) == 2


def test_signature():
    assert A.signature([1.0, -2.0, 0.0]) == (1, 1, 1)


def test_iterate_fixed_point():
    orbit = A.su2_iterate([0.25] * 3, 5)
    assert all(np.allclose(o, 0.25, atol=1e-15) for o in orbit)


def test_iterate_period_two_scaling():
    orbit = A.su2_iterate([1, 1, 1], 2)
    assert np.allclose(orbit[1], 1 / 16)
    assert np.allclose(orbit[2], 1.0)
    normalized = A.su2_iterate([1, 1, 1], 4, normalize=True)
    assert all(np.allclose(o, 1.0) for o in normalized)


def test_iterate_lambda_increases_near_round():
    orbit = A.su2_iterate([1.01, 1.0, 0.99], 2)
    lam = [A.lambda_ratio(o) for o in orbit]
    assert lam[0] < lam[1] < lam[2]


def test_iterate_positivity_lost():
    with pytest.raises(PositivityLost):
        A.su2_iterate([1.0, 2.0, 3.0], 3)


@pytest.mark.parametrize("h", [(1, 1, 1), (1, -1, 0)])
def test_linearization_identity(h):
    assert A.su2_linearization_check(h) <= 1e-6


def test_linearization_zero_direction():
    assert A.su2_linearization_check((0, 0, 0)) == 0.0
