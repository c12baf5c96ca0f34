"""Independent reference computations used by the tests.

Nothing here imports the package: the Ricci tensor of a left-invariant
metric comes from the Koszul formula on structure constants, and the round
profiles are written out in closed form.
"""

from __future__ import annotations

import math

import numpy as np


def su2_structure() -> np.ndarray:
    """``C[i, j, k]``: the ``e_k`` component of ``[e_i, e_j]``, with ``[e_i, e_j] = e_k`` cyclically."""
    C = np.zeros((3, 3, 3))
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        C[i, j, k] = 1.0
        C[j, i, k] = -1.0
    return C


def koszul_ricci(g: np.ndarray, C: np.ndarray) -> np.ndarray:
    """Ricci (0,2) tensor of the left-invariant metric ``g`` (any symmetric PD matrix).

    ``g(nabla_X Y, Z) = 1/2 (g([X,Y],Z) - g([Y,Z],X) + g([Z,X],Y))`` for left-invariant fields.
    """
    n = g.shape[0]
    ginv = np.linalg.inv(g)
    # bracket as lowered tensor: B[i, j, m] = g([e_i, e_j], e_m)
    B = np.einsum("ijk,km->ijm", C, g)
    # Gamma[i, j, :] = components of nabla_{e_i} e_j
    low = 0.5 * (B - np.einsum("jmi->ijm", B) + np.einsum("mij->ijm", B))
    G = np.einsum("ijm,mk->ijk", low, ginv)

    def nabla(i, v):
        return np.einsum("j,jk->k", v, G[i])

    def bracket(u, v):
        return np.einsum("i,j,ijk->k", u, v, C)

    E = np.eye(n)
    ric = np.zeros((n, n))
    for j in range(n):
        for k in range(n):
            total = 0.0
            for i in range(n):
                # R(e_i, e_j) e_k, traced against e_i
                Rk = nabla(i, nabla(j, E[k])) - nabla(j, nabla(i, E[k]))
                br = bracket(E[i], E[j])
                Rk -= sum(br[m] * nabla(m, E[k]) for m in range(n))
                total += Rk[i]
            ric[j, k] = total
    return 0.5 * (ric + ric.T)


def cross_curvature(g: np.ndarray, ric: np.ndarray) -> np.ndarray:
    """``X = det(E) g E^-1`` with ``E = g^-1 (Ric - S g/2)`` lowered by ``g``."""
    S = float(np.trace(np.linalg.solve(g, ric)))
    ein = ric - 0.5 * S * g
    E = np.linalg.solve(g, ein)
    X = np.linalg.det(E) * g @ np.linalg.inv(E)
    return 0.5 * (X + X.T)


def su2_cross_oracle(rho) -> np.ndarray:
    g = np.diag(np.asarray(rho, float))
    return np.diag(cross_curvature(g, koszul_ricci(g, su2_structure())))


HP = 0.5 * math.pi


def so3_round(r):
    """``(y, l, l', f, h)`` for the round metric of radius ``pi/2``."""
    r = np.asarray(r, float)
    return np.cos(HP * r) / HP, np.sin(HP * r), HP * np.cos(HP * r), HP * np.cos(HP * r), np.full(r.shape, HP * HP)


def so2_round(t):
    """``(y1, y2, l1, l2, h, f1, f2)`` for the round metric in SO(2) x SO(2) form."""
    t = np.asarray(t, float)
    s, c = np.sin(HP * t), np.cos(HP * t)
    return s / HP, c / HP, -c, s, np.full(t.shape, HP * HP), HP * s, HP * c


def manufactured_so3(eps: float = 0.2):
    """A non-round exact pair for the SO(3) problem.

    ``l = sin(theta)`` with ``theta = (pi/2)(r + eps sin(pi r)/pi)``; then
    ``l'' = (l^3 - l)/y^2`` forces ``y^2 = sin(theta) cos(theta)^2 / (sin(theta) theta'^2 - cos(theta) theta'')``.
    Returns ``(l, dl, y, dy)`` with ``dy(r, k)`` the ``k``-th derivative away from ``r = 0``.
    """
    import sympy as sp

    def theta(r):
        return HP * (r + eps * np.sin(math.pi * r) / math.pi)

    def dtheta(r):
        return HP * (1 + eps * np.cos(math.pi * r))

    def l(r):
        return np.sin(theta(np.asarray(r, float)))

    def dl(r):
        r = np.asarray(r, float)
        return np.cos(theta(r)) * dtheta(r)

    def y(r):
        r = np.asarray(r, float)
        th, d1 = theta(r), dtheta(r)
        # sin(theta)/r and -theta''/r without the 0/0 at r = 0 (np.sinc(x) = sin(pi x)/(pi x))
        s_r = np.sinc(th / math.pi) * HP * (1 + eps * np.sinc(r))
        m_r = HP * math.pi * eps * math.pi * np.sinc(r)
        return np.cos(th) * np.sqrt(s_r / (s_r * d1 * d1 + np.cos(th) * m_r))

    R = sp.Symbol("r", real=True)
    th = sp.pi / 2 * (R + sp.Float(eps) * sp.sin(sp.pi * R) / sp.pi)
    expr = sp.cos(th) * sp.sqrt(sp.sin(th) / (sp.sin(th) * sp.diff(th, R) ** 2 - sp.cos(th) * sp.diff(th, R, 2)))
    derivs = [sp.lambdify(R, sp.diff(expr, R, k), "numpy") for k in range(4)]

    def dy(r, k):
        r = np.asarray(r, float)
        if k == 0:
            return y(r)
        if np.any(np.abs(r) < 1e-3):
            raise ValueError("derivative requested at the removable singularity")
        return np.asarray(derivs[k](r), float)

    return l, dl, y, dy
