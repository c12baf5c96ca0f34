"""SO(2)xSO(2)-invariant prescribed cross curvature.

On ``[0, 1]`` a metric ``g = h^2 dr^2 + f1^2 dth1^2 + f2^2 dth2^2`` with cross
curvature ``Y = dr^2 + y1^2 dth1^2 + y2^2 dth2^2`` is encoded by
``l_i = -f_i'/h``. With ``phi1 = y1/y2``, ``phi2 = y2/y1`` and ``sigma = y1 y2``
the homotopy system is

    (l1'/phi1)' = l1 F(p l2 + (1-p) sin(pi t/2)) / sigma
    (l2'/phi2)' = l2 F(p l1 - (1-p) cos(pi t/2)) / sigma

with ``F(x) = x^2`` truncated outside ``[-2, 2]``. Shots from ``t = 0`` carry
``(alpha1, alpha2) = (l1''(0), l2'(0))``, shots from ``t = 1`` carry
``(beta1, beta2) = (l1'(1), -l2''(1))``; they are matched at ``t = 1/2``.
At ``p = 0`` the system is linear and decoupled, so the matching map is a
pair of affine maps whose degrees are read off their determinants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateProfile, MonitorViolated, ProfileInvalid
from .numerics.continuation import ContinuationPath, continuation
from .numerics.integrate import DenseSolution, IntegratorConfig, integrate_ivp
from .numerics.newton import newton_nd
from .numerics.singular import KernelKind, SeriesStart, SingularKernel, singular_start
from .profiles import (
    ChebProfile,
    FunctionProfile,
    RadialProfile,
    ReflectedProfile,
    ResidualReport,
    minus_ratio_derivatives,
    smoothstep,
)
from .so3 import _blend

HALF = 0.5
HALF_PI = 0.5 * math.pi


def truncate_F(x):
    """``F(x) = x^2 w(|x|)`` with ``w`` a quintic blend from 1 at 2 to 0 at 3."""
    x = np.asarray(x, dtype=float)
    return x * x * (1.0 - smoothstep(np.abs(x) - 2.0))


def _F(x: float) -> tuple[float, float]:
    w, dw = _blend(abs(x))
    if w == 1.0:
        return x * x, 2.0 * x
    return x * x * w, 2.0 * x * w + x * x * dw * (1.0 if x > 0 else -1.0)


# ----------------------------------------------------------------- profiles


@dataclass
class ProfileSO2:
    """The pair ``(y1, y2)`` on ``[0, 1]``."""

    y1: RadialProfile
    y2: RadialProfile

    def mirrored(self) -> "ProfileSO2":
        """``(y2, y1)(1 - t)``: the problem seen from ``t = 1``."""
        return ProfileSO2(ReflectedProfile(self.y2), ReflectedProfile(self.y1))

    def is_symmetric(self, tol: float = 1e-13, n: int = 257) -> bool:
        t = np.linspace(0.0, 1.0, n)
        return bool(np.max(np.abs(np.asarray(self.y1(t)) - np.asarray(self.y2(1.0 - t)))) <= tol)


def validate_y(y: ProfileSO2, tol: float = 1e-9, n: int = 2001) -> None:
    defects = []
    for name, prof in (("y1", y.y1), ("y2", y.y2)):
        if (prof.a, prof.b) != (0.0, 1.0):
            defects.append(f"{name} domain is [{prof.a}, {prof.b}], expected [0, 1]")
    if defects:
        raise ProfileInvalid("so2 profiles have the wrong domain", defects)
    t = np.linspace(0.0, 1.0, n)
    v1, v2 = np.asarray(y.y1(t), float), np.asarray(y.y2(t), float)
    if not (np.all(np.isfinite(v1)) and np.all(np.isfinite(v2))):
        defects.append("non-finite values")
    else:
        if np.any(v1[1:] <= 0):
            defects.append(f"y1 <= 0 at r = {t[1:][v1[1:] <= 0][0]:.6g}")
        if np.any(v2[:-1] <= 0):
            defects.append(f"y2 <= 0 at r = {t[:-1][v2[:-1] <= 0][0]:.6g}")
    if abs(float(y.y1(0.0))) > tol:
        defects.append(f"y1(0) = {float(y.y1(0.0)):.3e}, expected 0")
    if abs(float(y.y2(1.0))) > tol:
        defects.append(f"y2(1) = {float(y.y2(1.0)):.3e}, expected 0")
    d = float(y.y1(0.0, 1))
    if abs(d - 1.0) > tol:
        defects.append(f"y1'(0) = {d:.12g}, expected 1")
    d = float(y.y2(1.0, 1))
    if abs(d + 1.0) > tol:
        defects.append(f"y2'(1) = {d:.12g}, expected -1")
    if defects:
        raise ProfileInvalid("so2 profiles fail the smoothness conditions", defects)


class AuxFields:
    """``phi1``, ``phi2``, ``sigma`` and the regular parts of their singular ratios.

    Near ``r = 0``::

        phi1'/phi1 = 1/r + S_phi1            phi1/sigma = 1/y2(0)^2 + S_sigma1
        phi2'/phi2 = -1/r + S_phi2           phi2/sigma = 1/r^2 - y1'''(0)/3 + S_sigma2

    All four are evaluated without cancellation: ``y1/r`` comes from
    :meth:`RadialProfile.ratio`, and ``r y1' - y1`` from a Taylor expansion
    below ``taylor_below``.
    """

    def __init__(self, y: ProfileSO2, taylor_below: float = 1e-4) -> None:
        self.y = y
        self.tb = taylor_below
        y1 = y.y1
        self.d1, self.d2, self.d3 = (float(y1(0.0, k)) for k in (1, 2, 3))
        self.y20 = float(y.y2(0.0))

    def phi1(self, r):
        return np.asarray(self.y.y1(r)) / np.asarray(self.y.y2(r))

    def phi2(self, r):
        return np.asarray(self.y.y2(r)) / np.asarray(self.y.y1(r))

    def sigma(self, r):
        return np.asarray(self.y.y1(r)) * np.asarray(self.y.y2(r))

    def rho1(self, r) -> np.ndarray:
        """``y1/r``."""
        return np.atleast_1d(self.y.y1.ratio(np.asarray(r, float), "left", self.tb))

    def A(self, r) -> np.ndarray:
        """``S_phi1 = y1'/y1 - 1/r - y2'/y2``; ``S_phi2 = -A``."""
        r = np.atleast_1d(np.asarray(r, float))
        rho = self.rho1(r)
        small = r < self.tb
        first = np.empty(r.size)
        if np.any(small):
            t = r[small]
            first[small] = (0.5 * self.d2 + self.d3 * t / 3.0) / rho[small]
        if np.any(~small):
            t = r[~small]
            first[~small] = (np.asarray(self.y.y1(t, 1)) - rho[~small]) / (t * rho[~small])
        return first - np.asarray(self.y.y2(r, 1)) / np.asarray(self.y.y2(r))

    def rho1_m1_r2(self, r) -> np.ndarray:
        """``(y1/r - 1)/r^2``."""
        r = np.atleast_1d(np.asarray(r, float))
        out = np.empty(r.size)
        small = r < self.tb
        if np.any(small):
            t = r[small]
            out[small] = (self.d1 - 1.0) / t**2 + 0.5 * self.d2 / t + self.d3 / 6.0
        if np.any(~small):
            t = r[~small]
            out[~small] = (self.rho1(t) - 1.0) / t**2
        return out

    def S_phi1(self, r):
        return self.A(r)

    def S_phi2(self, r):
        return -self.A(r)

    def S_sigma1(self, r):
        return 1.0 / np.asarray(self.y.y2(r)) ** 2 - 1.0 / self.y20**2

    def S_sigma2(self, r):
        # 1/y1^2 - 1/r^2 + y1'''(0)/3 = -(rho - 1)(rho + 1)/(r^2 rho^2) + y1'''(0)/3
        r = np.atleast_1d(np.asarray(r, float))
        rho = self.rho1(r)
        return -self.rho1_m1_r2(r) * (rho + 1.0) / rho**2 + self.d3 / 3.0

    def check(self, r_max: float = 1e-2, n: int = 8) -> dict[str, float]:
        """Polynomial extrapolation of the regular parts to ``r = 0`` (all should vanish)."""
        r = np.linspace(r_max / n, r_max, n)
        out = {}
        for name in ("S_phi1", "S_phi2", "S_sigma1", "S_sigma2"):
            vals = np.asarray(getattr(self, name)(r), float)
            out[name] = float(np.polynomial.polynomial.polyfit(r, vals, 4)[0])
        return out


# ----------------------------------------------------------------- shooting


def _so2_sources(aux: AuxFields, alpha1: float, alpha2: float, p: float):
    """Sources ``S1, S2`` of the two model problems for ``s1 = l1 - alpha1 t^2/2 + 1``
    and ``s2 = l2 - alpha2 t``."""
    cache: dict[float, tuple] = {}

    def coeffs(u):
        key = float(u[-1])
        if key not in cache:
            sin_t = np.sin(HALF_PI * u) / u
            sin4 = 2.0 * np.sin(0.25 * math.pi * u) ** 2 / u**2  # (1 - cos(pi t/2))/t^2
            y2 = np.asarray(aux.y.y2(u), float)
            rho = aux.rho1(u)
            cache[key] = (aux.A(u), 1.0 / (y2 * y2), sin_t, sin4, rho, aux.rho1_m1_r2(u))
        return cache[key]

    def S1(u, comps, _params):
        A, inv_y2sq, sin_t, _, _, _ = coeffs(u)
        s1, s2 = comps
        l1 = s1.s + 0.5 * alpha1 * u * u - 1.0
        c1_t = p * (s2.s_u + alpha2) + (1.0 - p) * sin_t  # C1/t
        c1 = c1_t * u
        w = 1.0 - smoothstep(np.abs(c1) - 2.0)
        return (s1.ds_u + alpha1) * A + l1 * w * c1_t * c1_t * u * inv_y2sq

    def S2(u, comps, _params):
        A, _, _, sin4, rho, rho_m1 = coeffs(u)
        s1, s2 = comps
        l2_t = s2.s_u + alpha2
        c2p1_t2 = p * (s1.s_u2 + 0.5 * alpha1) + (1.0 - p) * sin4  # (C2 + 1)/t^2
        c2 = c2p1_t2 * u * u - 1.0
        # (F(C2) - rho^2)/(t^2 rho^2) with F = C2^2 on the start interval
        num = c2p1_t2 * (c2 - 1.0) - rho_m1 * (rho + 1.0)
        return l2_t * num / (rho * rho) - (s2.ds_u * u + alpha2) * A / u

    return S1, S2


def _start(aux: AuxFields, a1: float, a2: float, p: float, eps: float, fixed: bool = False) -> SeriesStart:
    S1, S2 = _so2_sources(aux, a1, a2, p)
    kernels = [SingularKernel(KernelKind.SO2_FIRST, S1), SingularKernel(KernelKind.SO2_SECOND, S2)]
    return singular_start(kernels, eps=eps, min_eps=0.99 * eps if fixed else 1e-8)


@dataclass
class ShotSO2:
    """Shot from ``t = 0`` up to ``t_end``; state ``(l1, l1', l2, l2')`` and its
    derivatives in ``alpha1`` and ``alpha2``."""

    alpha: tuple[float, float]
    t_end: float
    start: SeriesStart
    dense: DenseSolution

    @property
    def eps(self) -> float:
        return self.start.eps

    def state(self, t) -> np.ndarray:
        """Shape ``(12, n)``: ``(l1, l1', l2, l2')``, then d/dalpha1, then d/dalpha2."""
        t = np.atleast_1d(np.asarray(t, float))
        out = np.zeros((12, t.size))
        near = t < self.eps
        if np.any(near):
            u = np.maximum(t[near], 0.0)
            c1, c2 = self.start.components(u)
            a1, a2 = self.alpha
            out[0, near] = c1.s + 0.5 * a1 * u * u - 1.0
            out[1, near] = c1.ds + a1 * u
            out[2, near] = c2.s + a2 * u
            out[3, near] = c2.ds + a2
            # leading-order sensitivities; the series corrections are O(t^3)
            out[4, near] = 0.5 * u * u
            out[5, near] = u
            out[10, near] = u
            out[11, near] = 1.0
        if np.any(~near):
            out[:, ~near] = self.dense(t[~near])
        return out

    def l2_over_t(self, t) -> np.ndarray:
        """``l2/t`` without cancellation near ``t = 0``."""
        t = np.atleast_1d(np.asarray(t, float))
        out = np.empty(t.size)
        near = t < self.eps
        if np.any(near):
            out[near] = self.start.components(t[near])[1].s_u + self.alpha[1]
        if np.any(~near):
            out[~near] = self.dense(t[~near])[2] / t[~near]
        return out

    def end(self) -> np.ndarray:
        return self.state(self.t_end)[:, 0]


def shoot_from_0(y: ProfileSO2, p: float, alpha1: float, alpha2: float, t_end: float = HALF,
                 config: IntegratorConfig | None = None, aux: AuxFields | None = None) -> ShotSO2:
    cfg = config or IntegratorConfig()
    aux = aux or AuxFields(y)
    a1, a2, p = float(alpha1), float(alpha2), float(p)
    # keep C2 near -1 and C1 small on the start interval
    eps = min(cfg.singular_offset, 0.5 / math.sqrt(abs(a1) + 1.0), 0.5 / (abs(a2) + 1.0), 0.5 * t_end)
    start = _start(aux, a1, a2, p, eps)
    e = start.eps
    (s1, ds1), (s2, ds2) = start.at_eps()
    y0 = np.zeros(12)
    y0[:4] = (s1 + 0.5 * a1 * e * e - 1.0, ds1 + a1 * e, s2 + a2 * e, ds2 + a2)
    for k, (da1, da2) in enumerate(((1.0, 0.0), (0.0, 1.0))):
        h = 1e-6 * max(1.0, abs(a1) if k == 0 else abs(a2))
        (p1, dp1), (p2, dp2) = _start(aux, a1 + h * da1, a2 + h * da2, p, e, fixed=True).at_eps()
        (m1, dm1), (m2, dm2) = _start(aux, a1 - h * da1, a2 - h * da2, p, e, fixed=True).at_eps()
        base = 4 + 4 * k
        y0[base:base + 4] = (
            (p1 - m1) / (2 * h) + da1 * 0.5 * e * e,
            (dp1 - dm1) / (2 * h) + da1 * e,
            (p2 - m2) / (2 * h) + da2 * e,
            (dp2 - dm2) / (2 * h) + da2,
        )
    y1f, y2f = aux.y.y1.fast_d, aux.y.y2.fast_d
    q = 1.0 - p

    def rhs(t, z):
        v1, d1y = y1f(t, 0), y1f(t, 1)
        v2, d2y = y2f(t, 0), y2f(t, 1)
        a = d1y / v1 - d2y / v2  # phi1'/phi1
        i1, i2 = 1.0 / (v2 * v2), 1.0 / (v1 * v1)
        l1, dl1, l2, dl2 = z[0], z[1], z[2], z[3]
        F1, dF1 = _F(p * l2 + q * math.sin(HALF_PI * t))
        F2, dF2 = _F(p * l1 - q * math.cos(HALF_PI * t))
        out = [dl1, dl1 * a + l1 * F1 * i1, dl2, -dl2 * a + l2 * F2 * i2]
        for b in (4, 8):
            w1, dw1, w2, dw2 = z[b], z[b + 1], z[b + 2], z[b + 3]
            out += [
                dw1,
                dw1 * a + (w1 * F1 + l1 * dF1 * p * w2) * i1,
                dw2,
                -dw2 * a + (w2 * F2 + l2 * dF2 * p * w1) * i2,
            ]
        return out

    dense = integrate_ivp(rhs, e, t_end, y0, cfg)
    return ShotSO2((a1, a2), t_end, start, dense)


class MirroredShotSO2:
    """Shot from ``t = 1``: ``l1(t) = -L2(1 - t)``, ``l2(t) = -L1(1 - t)`` where ``L``
    is a shot from 0 for the mirrored profiles with ``(alpha1, alpha2) = (beta2, beta1)``."""

    def __init__(self, shot: ShotSO2) -> None:
        self.shot = shot
        self.beta = (shot.alpha[1], shot.alpha[0])

    def state(self, t) -> np.ndarray:
        """Rows ``(l1, l1', l2, l2')``, then d/dbeta1, then d/dbeta2."""
        t = np.atleast_1d(np.asarray(t, float))
        s = self.shot.state(1.0 - t)

        def block(b):
            return [-s[b + 2], s[b + 3], -s[b], s[b + 1]]

        # mirrored alpha1 is beta2 and mirrored alpha2 is beta1
        return np.array(block(0) + block(8) + block(4))

    def l1_over_u(self, t) -> np.ndarray:
        """``-l1/(1 - t)`` without cancellation near ``t = 1``."""
        return self.shot.l2_over_t(1.0 - np.atleast_1d(np.asarray(t, float)))


def shoot_from_1(y: ProfileSO2, p: float, beta1: float, beta2: float, t_end: float = HALF,
                 config: IntegratorConfig | None = None, aux: AuxFields | None = None) -> MirroredShotSO2:
    m = y.mirrored()
    return MirroredShotSO2(shoot_from_0(m, p, beta2, beta1, 1.0 - t_end, config, aux))


class ShotCacheSO2:
    def __init__(self, y: ProfileSO2, p: float, config: IntegratorConfig | None = None, maxsize: int = 512) -> None:
        self.y = y
        self.p = float(p)
        self.config = config or IntegratorConfig()
        self.aux = AuxFields(y)
        self.mirror = y.mirrored()
        self.aux_m = AuxFields(self.mirror)
        self._l: dict[tuple, ShotSO2] = {}
        self._r: dict[tuple, ShotSO2] = {}
        self.maxsize = maxsize

    def left(self, a1: float, a2: float) -> ShotSO2:
        key = (float(a1), float(a2))
        if key not in self._l:
            if len(self._l) > self.maxsize:
                self._l.clear()
            self._l[key] = shoot_from_0(self.y, self.p, *key, config=self.config, aux=self.aux)
        return self._l[key]

    def right(self, b1: float, b2: float) -> MirroredShotSO2:
        key = (float(b2), float(b1))
        if key not in self._r:
            if len(self._r) > self.maxsize:
                self._r.clear()
            self._r[key] = shoot_from_0(self.mirror, self.p, *key, config=self.config, aux=self.aux_m)
        return MirroredShotSO2(self._r[key])

    def G_and_jac(self, x) -> tuple[np.ndarray, np.ndarray]:
        a1, a2, b1, b2 = (float(v) for v in x)
        sm = self.left(a1, a2).end()
        sp = self.right(b1, b2).state(HALF)[:, 0]
        val = sp[:4] - sm[:4]
        jac = np.column_stack([-sm[4:8], -sm[8:12], sp[4:8], sp[8:12]])
        return val, jac

    def G(self, x) -> np.ndarray:
        return self.G_and_jac(x)[0]


def G(y: ProfileSO2, p: float, alpha, beta, config: IntegratorConfig | None = None) -> np.ndarray:
    """``((l1+ - l1-), (l1+ - l1-)', (l2+ - l2-), (l2+ - l2-)')`` at ``t = 1/2``."""
    return ShotCacheSO2(y, p, config).G([alpha[0], alpha[1], beta[0], beta[1]])


# ------------------------------------------------------------- p = 0 blocks


@dataclass
class BlockDegree:
    """Affine block ``H_i(alpha_i, beta_i) = A_i (alpha_i, beta_i) + B_i`` at ``p = 0``."""

    index: int
    A: np.ndarray
    B: np.ndarray
    degree: int
    probe: tuple[float, float]
    probe_det: float
    affine_defect: float

    def to_dict(self) -> dict:
        return {
            "block": self.index,
            "A": self.A.tolist(),
            "B": self.B.tolist(),
            "degree": self.degree,
            "probe_alpha_beta": list(self.probe),
            "probe_det": self.probe_det,
            "affine_defect": self.affine_defect,
        }


@dataclass
class DegreeSO2:
    blocks: list[BlockDegree]
    coupling: float  # largest off-block Jacobian entry

    @property
    def degree(self) -> int:
        return self.blocks[0].degree * self.blocks[1].degree

    def to_dict(self) -> dict:
        return {"degree": self.degree, "blocks": [b.to_dict() for b in self.blocks], "off_block_max": self.coupling}


def p0_blocks(cache: ShotCacheSO2, n_check: int = 5, span: float = 10.0) -> DegreeSO2:
    """Affine blocks of ``G_0`` and their degrees, with an affinity check on a grid."""
    if cache.p != 0.0:
        raise ValueError("blocks are defined at p = 0")
    g0, jac = cache.G_and_jac(np.zeros(4))
    rows = {1: [0, 1], 2: [2, 3]}
    cols = {1: [0, 2], 2: [1, 3]}
    off = max(float(np.max(np.abs(jac[np.ix_(rows[1], cols[2])]))), float(np.max(np.abs(jac[np.ix_(rows[2], cols[1])]))))
    blocks = []
    grid = np.linspace(-span, span, n_check)
    for i in (1, 2):
        A = jac[np.ix_(rows[i], cols[i])]
        B = g0[rows[i]]
        defect = 0.0
        for u in grid:
            for v in grid:
                x = np.zeros(4)
                x[cols[i]] = (u, v)
                defect = max(defect, float(np.max(np.abs(cache.G(x)[rows[i]] - (A @ [u, v] + B)))))
        # probes: alpha* sends the left value at 1/2 to the right constant, beta* the
        # right value to the left constant (l1: 0 and -1; l2: 1 and 0)
        left0 = cache.left(0.0, 0.0).end()
        right0 = cache.right(0.0, 0.0).state(HALF)[:, 0]
        k = 0 if i == 1 else 2
        target_left, target_right = (0.0, -1.0) if i == 1 else (1.0, 0.0)
        a_star = (target_left - left0[k]) / -A[0, 0]
        b_star = (target_right - right0[k]) / A[0, 1]
        probe = np.array([A @ [a_star, 0.0], A @ [0.0, b_star]])
        det = float(np.linalg.det(A))
        blocks.append(BlockDegree(i, A, B, int(np.sign(det)), (float(a_star), float(b_star)),
                                  float(np.linalg.det(probe)), defect))
    return DegreeSO2(blocks, off)


# ------------------------------------------------------------------ solving


@dataclass
class SolutionSO2:
    alpha: tuple[float, float]
    beta: tuple[float, float]
    left: ShotSO2
    right: MirroredShotSO2
    y: ProfileSO2
    path: ContinuationPath | None = None
    degree: DegreeSO2 | None = None
    residual: ResidualReport | None = None
    metric: "MetricSO2 | None" = None
    max_parameters: tuple[float, ...] = ()
    extra: dict = field(default_factory=dict)

    def state(self, t) -> np.ndarray:
        """``(l1, l1', l2, l2')`` glued at ``t = 1/2``."""
        t = np.atleast_1d(np.asarray(t, float))
        out = np.empty((4, t.size))
        lo = t <= HALF
        if np.any(lo):
            out[:, lo] = self.left.state(t[lo])[:4]
        if np.any(~lo):
            out[:, ~lo] = self.right.state(t[~lo])[:4]
        return out

    def bounds_margin(self, n: int = 2001) -> float:
        """Smallest distance to the bounds ``-1 < l1 < 0`` and ``0 < l2 < 1`` inside."""
        t = np.linspace(0.0, 1.0, n)[1:-1]
        st = self.state(t)
        return float(min(np.min(st[0] + 1), np.min(-st[0]), np.min(st[2]), np.min(1 - st[2])))


def _glue(cache: ShotCacheSO2, x) -> SolutionSO2:
    a1, a2, b1, b2 = (float(v) for v in x)
    return SolutionSO2((a1, a2), (b1, b2), cache.left(a1, a2), cache.right(b1, b2), cache.y)


def solve_p0(y: ProfileSO2, config: IntegratorConfig | None = None) -> tuple[np.ndarray, DegreeSO2]:
    cache = ShotCacheSO2(y, 0.0, config)
    deg = p0_blocks(cache)
    res = newton_nd(cache.G, np.zeros(4), tol=1e-12, jacobian=lambda x: cache.G_and_jac(x)[1])
    return res.x, deg


def solve(
    y: ProfileSO2,
    config: IntegratorConfig | None = None,
    tol: float = 1e-10,
    start: np.ndarray | None = None,
    bound_margin: float = 1e-10,
    n_grid: int = 2001,
    validate: bool = True,
) -> SolutionSO2:
    """Continuation in ``p`` from the affine ``p = 0`` problem to ``p = 1``."""
    if validate:
        validate_y(y)
    cfg = config or IntegratorConfig()
    if start is None:
        x0, deg = solve_p0(y, cfg)
    else:
        x0, deg = np.asarray(start, float), None
    caches: dict[float, ShotCacheSO2] = {}

    def cache_for(p: float) -> ShotCacheSO2:
        if p not in caches:
            if len(caches) > 8:
                caches.clear()
            caches[p] = ShotCacheSO2(y, p, cfg)
        return caches[p]

    biggest = np.abs(x0).copy()

    def on_point(pt):
        biggest[:] = np.maximum(biggest, np.abs(pt.x))
        sol = _glue(cache_for(pt.p), pt.x)
        m = sol.bounds_margin(401)
        if m <= bound_margin:
            raise MonitorViolated("maximum-principle bounds fail at an accepted continuation point",
                                  p=pt.p, parameters=pt.x, margin=m)

    path = continuation(lambda p, x: cache_for(p).G(x), (0.0, 1.0), x0, tol=tol, on_point=on_point,
                        jacobian=lambda p, x: cache_for(p).G_and_jac(x)[1], dp0=0.1, dp_max=0.25)
    sol = _glue(cache_for(1.0), path.end.x)
    sol.path = path
    sol.degree = deg
    sol.max_parameters = tuple(float(v) for v in biggest)
    sol.extra["p0_zero"] = x0.tolist()
    finish(sol, n_grid, bound_margin)
    return sol


RECONSTRUCT_CONFIG = IntegratorConfig(abs_tol=1e-14, rel_tol=1e-13)


def finish(sol: SolutionSO2, n_grid: int = 2001, bound_margin: float = 1e-10,
           config: IntegratorConfig | None = RECONSTRUCT_CONFIG) -> "MetricSO2":
    """Checks on a solved pair and the closed-loop residual (shots repeated at ``config``)."""
    if config is not None:
        cache = ShotCacheSO2(sol.y, 1.0, config)
        x = [*sol.alpha, *sol.beta]
        tight = _glue(cache, x)
        sol.left, sol.right = tight.left, tight.right
        sol.extra["G_at_reconstruct_config"] = cache.G(x).tolist()
    margin = sol.bounds_margin(n_grid)
    sol.extra["bounds_margin"] = margin
    sol.extra["bounds_hold"] = bool(margin > bound_margin)
    t = np.linspace(0.0, 1.0, n_grid)
    st = sol.state(t)
    sol.extra["truncation_inactive"] = bool(np.max(np.abs(st[0])) <= 2 and np.max(np.abs(st[2])) <= 2)
    g = reconstruct(sol)
    sol.metric = g
    sol.residual = residual_report(sol, g, n_grid)
    return g


# ----------------------------------------------------------------- metrics


@dataclass
class MetricSO2:
    h: RadialProfile
    f1: RadialProfile
    f2: RadialProfile
    defects: dict = field(default_factory=dict)


def h_values(sol: SolutionSO2, t) -> np.ndarray:
    """``h = -l1 l2/sigma`` with the endpoint limits ``l2'(0)/y2(0)`` and ``l1'(1)/y1(1)``."""
    t = np.atleast_1d(np.asarray(t, float))
    y = sol.y
    out = np.empty(t.size)
    lo = t <= HALF
    if np.any(lo):
        tl = t[lo]
        st = sol.left.state(tl)
        rho = np.atleast_1d(y.y1.ratio(tl, "left"))
        out[lo] = -st[0] * sol.left.l2_over_t(tl) / (rho * np.asarray(y.y2(tl)))
    if np.any(~lo):
        tr = t[~lo]
        st = sol.right.state(tr)
        rho = np.atleast_1d(y.y2.ratio(1.0 - tr, "right"))
        out[~lo] = st[2] * sol.right.l1_over_u(tr) / (rho * np.asarray(y.y1(tr)))
    return out


def reconstruct(sol: SolutionSO2, tol: float = 1e-12) -> MetricSO2:
    """``h = -l1 l2/sigma``, ``f1 = -int_0^r l1 h``, ``f2 = int_r^1 l2 h``."""
    if not (sol.alpha[1] > 0 and sol.beta[0] > 0):
        raise DegenerateProfile("need l2'(0) > 0 and l1'(1) > 0", alpha=sol.alpha, beta=sol.beta)
    fit = ChebProfile.fit_with_parity
    h = fit(lambda t: h_values(sol, t), 0.0, 1.0, ("even", "even"), tol=tol, breakpoints=(HALF,), name="h")
    g1 = fit(lambda t: -sol.state(t)[0] * h_values(sol, t), 0.0, 1.0, ("even", "odd"), tol=tol, breakpoints=(HALF,))
    g2 = fit(lambda t: sol.state(t)[2] * h_values(sol, t), 0.0, 1.0, ("odd", "even"), tol=tol, breakpoints=(HALF,))
    f1 = g1.antiderivative("f1")
    F2 = g2.antiderivative()
    total = float(F2(1.0))
    panels = []
    for lo, hi, c in F2.panels:
        c = -c
        c[0] += total
        panels.append((lo, hi, c))
    f2 = ChebProfile(panels, parity=("even", "odd"), name="f2")
    f2.a, f2.b = 0.0, 1.0
    f1.parity = ("odd", "even")
    h0, h1 = (float(v) for v in h_values(sol, [0.0, 1.0]))
    defects = {
        "f1'(0) - h(0)": float(f1(0.0, 1)) - h0,
        "f2'(1) + h(1)": float(f2(1.0, 1)) + h1,
        "f1(0)": float(f1(0.0)),
        "f2(1)": float(f2(1.0)),
    }
    if not (f1(1.0) > 0 and f2(0.0) > 0 and h0 > 0 and h1 > 0):
        raise DegenerateProfile("reconstructed metric is not positive at the ends", **defects)
    return MetricSO2(h, f1, f2, defects)


def forward_cross(g: MetricSO2) -> tuple[FunctionProfile, FunctionProfile, FunctionProfile]:
    """``(X_rr, X_11, X_22)`` of ``g`` with ``l_i = -f_i'/h`` recomputed from the profiles."""
    a, b = 0.0, 1.0

    def parts(t):
        t = np.atleast_1d(np.asarray(t, float))
        l1, dl1, ddl1 = minus_ratio_derivatives(g.f1, g.h, t)
        l2, dl2, ddl2 = minus_ratio_derivatives(g.f2, g.h, t)
        f1, f2, h = (np.asarray(p(t), float) for p in (g.f1, g.f2, g.h))
        return t, l1, dl1, ddl1, l2, dl2, ddl2, f1, f2, h

    def x_rr(t):
        t, l1, dl1, ddl1, l2, dl2, ddl2, f1, f2, h = parts(t)
        with np.errstate(all="ignore"):
            q1 = dl1 / f1
            q2 = dl2 / f2
        at0, at1 = t <= a, t >= b
        q1[at0] = ddl1[at0] / np.asarray(g.f1(t[at0], 1))
        q2[at1] = ddl2[at1] / np.asarray(g.f2(t[at1], 1))
        return q1 * q2

    def x_11(t):
        t, l1, dl1, _, l2, _, _, f1, f2, h = parts(t)
        with np.errstate(all="ignore"):
            out = -l1 * l2 * dl1 / (f2 * h)
        at1 = t >= b
        if np.any(at1):
            # l1/f2 -> l1'/f2' at t = 1
            out[at1] = -l2[at1] * dl1[at1] ** 2 / (np.asarray(g.f2(t[at1], 1)) * h[at1])
        return out

    def x_22(t):
        t, l1, dl1, _, l2, dl2, _, f1, f2, h = parts(t)
        with np.errstate(all="ignore"):
            out = -l1 * l2 * dl2 / (f1 * h)
        at0 = t <= a
        if np.any(at0):
            # l2/f1 -> l2'/f1' at t = 0
            out[at0] = -l1[at0] * dl2[at0] ** 2 / (np.asarray(g.f1(t[at0], 1)) * h[at0])
        return out

    return (FunctionProfile([x_rr], a, b, name="X_rr"), FunctionProfile([x_11], a, b, name="X_11"),
            FunctionProfile([x_22], a, b, name="X_22"))


def residual_report(sol: SolutionSO2, g: MetricSO2 | None = None, n: int = 2001) -> ResidualReport:
    g = g or reconstruct(sol)
    x_rr, x_11, x_22 = forward_cross(g)
    t = np.linspace(0.0, 1.0, n)
    y1, y2 = np.asarray(sol.y.y1(t)), np.asarray(sol.y.y2(t))
    comps = {"rr": x_rr(t) - 1.0, "11": x_11(t) - y1 * y1, "22": x_22(t) - y2 * y2}
    ends = sol.state([0.0, 1.0])
    defects = dict(g.defects)
    defects.update({
        "l1(0) + 1": float(ends[0, 0] + 1), "l1'(0)": float(ends[1, 0]), "l2(0)": float(ends[2, 0]),
        "l1(1)": float(ends[0, 1]), "l2(1) - 1": float(ends[2, 1] - 1), "l2'(1)": float(ends[3, 1]),
    })
    return ResidualReport(t, comps, defects, margin=float(min(sol.alpha[1], sol.beta[0])))
