"""Pointwise cross-curvature algebra and the left-invariant SU(2) theory.

Matrices are plain 3x3 ``numpy`` arrays written in a background oriented
orthonormal frame. Diagonal left-invariant metrics on SU(2) are triples
``rho = (g(e1,e1), g(e2,e2), g(e3,e3))`` in a basis with ``[e_i, e_j] = e_k``
for cyclic ``(i, j, k)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    NonPositiveMetric,
    NoConvergence,
    NotPositiveCrossTensor,
    NotPositiveDefinite,
    PositivityLost,
    SingularEinstein,
)
from .numerics.newton import newton_nd

CYCLIC = ((0, 1, 2), (1, 2, 0), (2, 0, 1))


def _sym3(a, name: str = "matrix") -> np.ndarray:
    m = np.asarray(a, dtype=float)
    if m.shape != (3, 3):
        raise ValueError(f"{name} must be 3x3, got shape {m.shape}")
    if not np.allclose(m, m.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(m).max())):
        raise ValueError(f"{name} is not symmetric")
    # keep the lower triangle as the source of truth
    low = np.tril(m)
    return low + np.tril(m, -1).T


def is_positive_definite(m) -> bool:
    m = np.asarray(m, dtype=float)
    minors = [np.linalg.det(m[:k, :k]) for k in (1, 2, 3)]
    return all(d > 0 for d in minors)


def _require_pd(m: np.ndarray, name: str) -> None:
    if not is_positive_definite(m):
        raise NotPositiveDefinite(f"{name} is not positive-definite", matrix=m)


@dataclass(frozen=True)
class CrossTensor12:
    """Antisymmetric, trace-free (1,2) tensor ``T(A, B) = M (A x B)``."""

    M: np.ndarray
    orientation: int = 1

    def __call__(self, A, B) -> np.ndarray:
        return self.orientation * self.M @ np.cross(np.asarray(A, float), np.asarray(B, float))

    def components(self) -> np.ndarray:
        """``T[k, i, j]``: the k-th component of ``T(e_i, e_j)``."""
        E = np.eye(3)
        T = np.zeros((3, 3, 3))
        for i in range(3):
            for j in range(3):
                T[:, i, j] = self(E[i], E[j])
        return T

    @property
    def is_positive(self) -> bool:
        return is_positive_definite(self.orientation * self.M)


def cross_from_einstein(g, ein, tol: float = 1e-12) -> np.ndarray:
    """``X = det(E) g(E^-1 ., .)`` with ``E = g^-1 ein``; as a matrix ``det(E) g ein^-1 g``."""
    g = _sym3(g, "g")
    ein = _sym3(ein, "ein")
    _require_pd(g, "g")
    E = np.linalg.solve(g, ein)
    detE = float(np.linalg.det(E))
    if abs(detE) <= tol:
        raise SingularEinstein(f"Einstein operator is singular (det={detE:.3e})", det=detE)
    X = detE * g @ np.linalg.solve(ein, g)
    return 0.5 * (X + X.T)


def fmap(Y, orientation: int = 1) -> CrossTensor12:
    """Hodge-star cross tensor ``T(A,B) = *_Y(A ^ B)``; ``M = sqrt(det Y) Y^-1``."""
    Y = _sym3(Y, "Y")
    _require_pd(Y, "Y")
    M = np.sqrt(np.linalg.det(Y)) * np.linalg.inv(Y)
    return CrossTensor12(M=0.5 * (M + M.T), orientation=orientation)


def fmap_inverse(T: CrossTensor12 | np.ndarray) -> np.ndarray:
    """The unique SPD ``Y`` with ``fmap(Y) == T``.

    Diagonalise ``M = Q diag(mu) Q^T`` with ``Q`` positively oriented, then
    rescale ``V_k = q_k / sqrt(mu_i mu_j)`` so that ``T(V_i, V_j) = V_k``;
    ``Y`` is the metric making ``{V_k}`` orthonormal.
    """
    if isinstance(T, CrossTensor12):
        M = T.orientation * np.asarray(T.M, float)
    else:
        M = np.asarray(T, float)
    M = _sym3(M, "M")
    mu, Q = np.linalg.eigh(M)
    if np.any(mu <= 0):
        raise NotPositiveCrossTensor("cross tensor is not positive", eigenvalues=mu)
    if np.linalg.det(Q) < 0:
        Q[:, 0] = -Q[:, 0]
    c = np.empty(3)
    for i, j, k in CYCLIC:
        c[k] = 1.0 / np.sqrt(mu[i] * mu[j])
    P = Q * c  # columns V_k
    Pinv = np.linalg.inv(P)
    Y = Pinv.T @ Pinv
    return 0.5 * (Y + Y.T)


# ---------------------------------------------------------------- SU(2)


def _rho(rho: Sequence[float]) -> np.ndarray:
    r = np.asarray(rho, dtype=float)
    if r.shape != (3,):
        raise ValueError("a diagonal metric is a triple of reals")
    if not np.all(r > 0):
        raise NonPositiveMetric("diagonal metric entries must be positive", rho=r)
    return r


def su2_cross(rho: Sequence[float]) -> np.ndarray:
    """Diagonal of the cross curvature of ``diag(rho)``; entries may have any sign."""
    r = _rho(rho)
    out = np.empty(3)
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        a, b, c = r[i], r[j], r[k]
        first = a * a + b * b - 3 * c * c - 2 * a * b + 2 * a * c + 2 * b * c
        second = a * a - 3 * b * b + c * c + 2 * a * b - 2 * a * c + 2 * b * c
        out[i] = first * second / (16.0 * a * b * b * c * c)
    return out


def signature(values: Sequence[float], tol: float = 0.0) -> tuple[int, int, int]:
    """``(n_positive, n_negative, n_zero)``."""
    v = np.asarray(values, float)
    return int(np.sum(v > tol)), int(np.sum(v < -tol)), int(np.sum(np.abs(v) <= tol))


def _milnor_ricci_orthonormal(r: np.ndarray) -> np.ndarray:
    # structure constants of the orthonormal frame e_i / sqrt(rho_i)
    lam = np.array([np.sqrt(r[k] / (r[i] * r[j])) for i, j, k in ((1, 2, 0), (2, 0, 1), (0, 1, 2))])
    mu = 0.5 * lam.sum() - lam
    return np.array([2.0 * mu[1] * mu[2], 2.0 * mu[2] * mu[0], 2.0 * mu[0] * mu[1]])


def su2_ricci(rho: Sequence[float]) -> np.ndarray:
    """Ricci (0,2) tensor of ``diag(rho)`` in the frame ``{e_i}`` (diagonal)."""
    r = _rho(rho)
    return np.diag(r * _milnor_ricci_orthonormal(r))


def su2_einstein(rho: Sequence[float]) -> np.ndarray:
    r = _rho(rho)
    ric_on = _milnor_ricci_orthonormal(r)
    scal = ric_on.sum()
    return np.diag(r * (ric_on - 0.5 * scal))


def su2_solve(Y: Sequence[float], tol: float = 1e-10, max_iter: int = 50) -> np.ndarray:
    """Unique ``rho`` with ``su2_cross(rho) == Y`` for positive ``Y``.

    With ``e`` the orthonormal Einstein eigenvalues, ``X_i = rho_i e_j e_k``,
    so a positive ``Y`` forces ``e_i = -sqrt(prod Y / prod rho) rho_i / Y_i``.
    That relation is linear in ``e`` and stays well conditioned where ``X``
    degenerates quadratically, so damped Newton runs on it in ``log(rho)``
    from the round guess ``rho_i = 1/(16 Ybar)``. A plain log-residual Newton
    is the fallback.
    """
    y = np.asarray(Y, dtype=float)
    if y.shape != (3,) or not np.all(y > 0):
        raise ValueError("Y must be a triple of positive reals")
    ly = np.log(y)
    scale = max(1.0, float(np.max(y)))
    x0 = np.full(3, -np.log(16.0) - ly.mean())

    def einstein_residual(x):
        ric = _milnor_ricci_orthonormal(np.exp(x))
        e = ric - 0.5 * ric.sum()
        return e * np.exp(ly - x - 0.5 * (ly.sum() - x.sum())) + 1.0

    def log_residual(x):
        return np.log(su2_cross(np.exp(x))) - ly

    def finite(x):
        return bool(np.all(np.abs(x) < 700))

    best, best_res = x0, np.inf
    for F in (einstein_residual, log_residual):
        try:
            x = newton_nd(F, x0, tol=1e-13, max_iter=max_iter, domain=finite).x
        except NoConvergence as exc:
            x = exc.best
        with np.errstate(all="ignore"):
            res = float(np.max(np.abs(su2_cross(np.exp(x)) - y)))
        if res <= tol * scale:
            return np.exp(x)
        if res < best_res:
            best, best_res = x, res
    raise NoConvergence("su2_solve residual above tolerance", best=np.exp(best), residual=best_res)


def lambda_ratio(m: Sequence[float]) -> float:
    v = np.asarray(m, float)
    if not np.all(v > 0):
        raise NonPositiveMetric("lambda ratio needs positive entries", values=v)
    return float(v.max() / v.min())


def su2_iterate(rho: Sequence[float], n: int, normalize: bool = False) -> list[np.ndarray]:
    """Orbit ``rho, X(rho), X(X(rho)), ...`` of length ``n + 1``.

    With ``normalize`` every iterate is rescaled to the volume of ``rho``.
    """
    r = _rho(rho)
    vol0 = float(np.prod(r))
    orbit = [r.copy()]
    for step in range(1, n + 1):
        nxt = su2_cross(orbit[-1])
        if not np.all(nxt > 0):
            raise PositivityLost(f"cross curvature not positive-definite at step {step}", step=step, value=nxt)
        if normalize:
            nxt = nxt * (vol0 / float(np.prod(nxt))) ** (1.0 / 3.0)
        orbit.append(nxt)
    return orbit


ROUND_RHO = np.full(3, 0.25)


def su2_linearization_check(h: Sequence[float], step: float = 1e-5) -> float:
    """``max|D_h X - (D_h Ric - h)|`` at the round metric with ``Ric = 2g``."""
    if not 1e-7 <= step <= 1e-3:
        raise ValueError("step must lie in [1e-7, 1e-3]")
    hv = np.asarray(h, dtype=float)
    if not np.any(hv):
        return 0.0
    plus, minus = ROUND_RHO + step * hv, ROUND_RHO - step * hv
    dX = (su2_cross(plus) - su2_cross(minus)) / (2 * step)
    dRic = (np.diag(su2_ricci(plus)) - np.diag(su2_ricci(minus))) / (2 * step)
    return float(np.max(np.abs(dX - (dRic - hv))))
