"""SO(3)-invariant prescribed cross curvature.

A metric ``g = h(r)^2 dr^2 + f(r)^2 Q`` on ``[-1, 1]`` with cross curvature
``Y = dr^2 + y(r)^2 Q`` is encoded by ``l = -f'/h``, which solves

    l'' = (l^3 - l) / sigma,   sigma = y^2,
    l(-1) = -1, l(1) = 1, l'(-1) = l'(1) = 0.

The problem is solved by shooting from both singular ends with free
parameters ``alpha = l''(-1)`` and ``beta = -l''(1)`` against the mismatch
``J = ((l+ - l-)(0), (l+ - l-)'(0))``. A homotopy from a special profile
``sigma0``, for which ``J`` has winding number -1 on a box, carries the zero
to the target ``sigma``. The cubic is replaced by a truncation ``E`` that
agrees with it on ``[-2, 2]`` so that every shot exists globally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .errors import (
    ConstructionFailed,
    DegenerateEndpoint,
    DegenerateProfile,
    MonitorViolated,
    NoConvergence,
    PathLost,
    ProfileInvalid,
)
from .numerics.continuation import ContinuationPath, continuation
from .numerics.degree import WindingCertificate, winding_certificate
from .numerics.integrate import DenseSolution, IntegratorConfig, integrate_ivp
from .numerics.newton import newton_nd
from .numerics.singular import KernelKind, SeriesStart, SingularKernel, singular_start
from .profiles import (
    ChebProfile,
    FunctionProfile,
    RadialProfile,
    ResidualReport,
    minus_ratio_derivatives,
    smoothstep,
    smoothstep_d,
    smoothstep_fast,
)

SEVEN_EIGHTHS = 7.0 / 8.0

# ------------------------------------------------------------------ truncation


def _blend(t: float) -> tuple[float, float]:
    """Cutoff weight on ``|x|`` and its derivative: 1 up to 2, 0 from 3."""
    if t <= 2.0:
        return 1.0, 0.0
    if t >= 3.0:
        return 0.0, 0.0
    s = t - 2.0
    return 1.0 - s * s * s * (10.0 + s * (-15.0 + 6.0 * s)), -30.0 * s * s * (1.0 - s) ** 2


def truncate_E(x):
    """``E(x) = (x^3 - x) w(|x|)`` with ``w`` a quintic blend from 1 at 2 to 0 at 3."""
    x = np.asarray(x, dtype=float)
    t = np.abs(x)
    w = 1.0 - smoothstep(t - 2.0)
    return (x**3 - x) * w


def _E_v(v: float) -> tuple[float, float]:
    """``E(v - 1)`` and ``E'(v - 1)``; the product form keeps accuracy near ``v = 0``."""
    x = v - 1.0
    w, dw = _blend(abs(x))
    cubic = x * (x - 1.0) * v  # (v-1)(v-2)v
    dcubic = 3.0 * x * x - 1.0
    if w == 1.0:
        return cubic, dcubic
    return cubic * w, dcubic * w + cubic * dw * (1.0 if x > 0 else -1.0)


# ---------------------------------------------------------------- coefficients


class Coefficient:
    """The positive function ``zeta`` multiplying ``l''``; ``~ (1 -+ r)^2`` at the ends."""

    breakpoints: tuple[float, ...] = ()

    def value(self, r: float) -> float:
        raise NotImplementedError

    def values(self, r) -> np.ndarray:
        return np.array([self.value(float(t)) for t in np.atleast_1d(r)])

    def ratio2(self, u: np.ndarray, side: str) -> np.ndarray:
        """``zeta(-1 + u)/u^2`` (left) or ``zeta(1 - u)/u^2`` (right)."""
        raise NotImplementedError

    def mirrored(self) -> "Coefficient":
        return Mirror(self)

    def is_even(self) -> bool:
        return False


class Mirror(Coefficient):
    def __init__(self, base: Coefficient) -> None:
        self.base = base
        self.breakpoints = tuple(-b for b in base.breakpoints)

    def value(self, r: float) -> float:
        return self.base.value(-r)

    def ratio2(self, u, side):
        return self.base.ratio2(u, "right" if side == "left" else "left")

    def mirrored(self) -> Coefficient:
        return self.base

    def is_even(self) -> bool:
        return self.base.is_even()


class SquareOf(Coefficient):
    """``zeta = y^2`` for a profile ``y`` vanishing linearly at both ends."""

    def __init__(self, y: RadialProfile, even: bool = False) -> None:
        self.y = y
        self._even = even

    def value(self, r: float) -> float:
        v = self.y.fast(r)
        return v * v

    def values(self, r):
        return np.asarray(self.y(np.asarray(r, float)), float) ** 2

    def ratio2(self, u, side):
        return self.y.ratio(u, side) ** 2

    def is_even(self) -> bool:
        return self._even


class Quadratic(Coefficient):
    """``(r + 1)^2`` on ``[-1, inf)``: the reference problem."""

    def value(self, r: float) -> float:
        return (r + 1.0) ** 2

    def ratio2(self, u, side):
        return np.ones_like(np.asarray(u, float))


class Sigma0(Coefficient):
    """Even profile equal to ``(1 - |r|)^2`` for ``|r| >= 7/8`` and rising to the
    plateau ``A`` over ``7/8 - width <= |r| <= 7/8`` by a quintic blend."""

    def __init__(self, amplitude: float, width: float = 1e-3) -> None:
        self.A = float(amplitude)
        self.w = float(width)
        c = SEVEN_EIGHTHS
        self.breakpoints = (-c, -c + self.w, c - self.w, c)

    def value(self, r: float) -> float:
        a = abs(r)
        q = (1.0 - a) ** 2
        if a >= SEVEN_EIGHTHS:
            return q
        psi = smoothstep_fast((SEVEN_EIGHTHS - a) / self.w)
        return q + psi * (self.A - q)

    def values(self, r):
        a = np.abs(np.asarray(r, float))
        q = (1.0 - a) ** 2
        psi = smoothstep((SEVEN_EIGHTHS - a) / self.w)
        return q + psi * (self.A - q)

    def derivative(self, r, nu: int = 1):
        """Derivatives of the even profile (used for plotting and smoothness checks)."""
        r = np.asarray(r, float)
        a = np.abs(r)
        s = np.sign(r)
        x = (SEVEN_EIGHTHS - a) / self.w
        psi = smoothstep(x)
        q = (1 - a) ** 2
        dq = -2 * (1 - a)  # d/da
        if nu == 1:
            dpsi = -smoothstep_d(x, 1) / self.w
            return s * (dq * (1 - psi) + dpsi * (self.A - q))
        raise ValueError("only the first derivative is provided")

    def ratio2(self, u, side):
        u = np.asarray(u, float)
        if np.any(u > 1.0 / 8.0):
            raise ValueError("ratio2 only defined near the ends")
        return np.ones_like(u)

    def is_even(self) -> bool:
        return True

    def inverse_integral(self) -> float:
        """``int_{-7/8}^{7/8} dr / sigma0`` by adaptive quadrature on the pieces."""
        c = SEVEN_EIGHTHS
        ramp = quad(lambda r: 1.0 / self.value(r), c - self.w, c, limit=200, epsabs=0, epsrel=1e-12)[0]
        return 2.0 * ramp + 2.0 * (c - self.w) / self.A


class Blend(Coefficient):
    """``zeta_p = (1 - p) c0 + p c1``, with ``1 - p`` passed separately for accuracy."""

    def __init__(self, c0: Coefficient, c1: Coefficient, p: float, one_minus_p: float | None = None) -> None:
        self.c0, self.c1 = c0, c1
        self.p = float(p)
        self.q = float(1.0 - p if one_minus_p is None else one_minus_p)
        self.breakpoints = tuple(sorted(set(c0.breakpoints) | set(c1.breakpoints)))

    def value(self, r: float) -> float:
        if self.p == 0.0:
            return self.c0.value(r)
        if self.q == 0.0:
            return self.c1.value(r)
        return self.q * self.c0.value(r) + self.p * self.c1.value(r)

    def values(self, r):
        return self.q * self.c0.values(r) + self.p * self.c1.values(r)

    def ratio2(self, u, side):
        if self.p == 0.0:
            return self.c0.ratio2(u, side)
        if self.q == 0.0:
            return self.c1.ratio2(u, side)
        return self.q * self.c0.ratio2(u, side) + self.p * self.c1.ratio2(u, side)

    def is_even(self) -> bool:
        return self.c0.is_even() and self.c1.is_even()


# -------------------------------------------------------------------- shooting


def _so3_source(u, comps, params):
    alpha, w = params
    s = comps[0]
    kappa = (w - 1.0) / u
    vu2 = s.s_u2 + 0.5 * alpha
    v = s.s + 0.5 * alpha * u * u
    return 2.0 * kappa * s.s_u2 + alpha * kappa + w * (v - 3.0) * vu2 * vu2 * u


@dataclass
class Shot:
    """Solution launched from ``r = -1`` with ``l''(-1) = alpha``, up to ``r_end``.

    The state is ``v = l + 1``. ``dense`` covers ``[-1 + eps, r_end]``; the
    series start covers ``[-1, -1 + eps]``.
    """

    alpha: float
    r_end: float
    start: SeriesStart
    dense: DenseSolution

    @property
    def eps(self) -> float:
        return self.start.eps

    def state(self, r) -> np.ndarray:
        """``(l, l', dl/dalpha, dl'/dalpha)`` at points ``r`` (shape ``(4, n)``)."""
        r = np.atleast_1d(np.asarray(r, float))
        out = np.empty((4, r.size))
        u = r + 1.0
        near = u < self.eps
        if np.any(near):
            comp = self.start.components(np.maximum(u[near], 0.0))[0]
            a = self.alpha
            out[0, near] = comp.s + 0.5 * a * u[near] ** 2 - 1.0
            out[1, near] = comp.ds + a * u[near]
            out[2, near] = 0.5 * u[near] ** 2
            out[3, near] = u[near]
        far = ~near
        if np.any(far):
            y = self.dense(r[far])
            out[0, far] = y[0] - 1.0
            out[1, far] = y[1]
            out[2, far] = y[2]
            out[3, far] = y[3]
        return out

    def v(self, r) -> np.ndarray:
        """``l + 1`` with full relative accuracy near ``r = -1``."""
        r = np.atleast_1d(np.asarray(r, float))
        u = r + 1.0
        out = np.empty(r.size)
        near = u < self.eps
        if np.any(near):
            comp = self.start.components(np.maximum(u[near], 0.0))[0]
            out[near] = comp.s + 0.5 * self.alpha * u[near] ** 2
        if np.any(~near):
            out[~near] = self.dense(r[~near])[0]
        return out

    def end(self) -> np.ndarray:
        return self.state(self.r_end)[:, 0]


def shoot_left(coef: Coefficient, alpha: float, r_end: float = 0.0, config: IntegratorConfig | None = None) -> Shot:
    """Shot from the singular end ``r = -1`` for ``l'' = E(l)/zeta``."""
    cfg = config or IntegratorConfig()
    alpha = float(alpha)
    eps = cfg.singular_offset
    if alpha != 0.0:
        # keep the start inside the range where E is the plain cubic
        eps = min(eps, 0.5 / math.sqrt(abs(alpha)))
    eps = min(eps, 0.5 * (r_end + 1.0))
    start = _series(coef, alpha, eps)
    e = start.eps
    (s, ds), = start.at_eps()
    h = 1e-6 * max(1.0, abs(alpha))
    (sp_, dsp), = _series(coef, alpha + h, e, fixed=True).at_eps()
    (sm_, dsm), = _series(coef, alpha - h, e, fixed=True).at_eps()
    v0 = s + 0.5 * alpha * e * e
    dv0 = ds + alpha * e
    w0 = (sp_ - sm_) / (2 * h) + 0.5 * e * e
    dw0 = (dsp - dsm) / (2 * h) + e
    zeta = coef.value

    def rhs(r, y):
        z = zeta(r)
        E, dE = _E_v(y[0])
        return (y[1], E / z, y[3], dE * y[2] / z)

    dense = integrate_ivp(rhs, -1.0 + e, r_end, (v0, dv0, w0, dw0), cfg, breakpoints=coef.breakpoints)
    return Shot(alpha, r_end, start, dense)


def _series(coef: Coefficient, alpha: float, eps: float, fixed: bool = False) -> SeriesStart:
    # the weight w = u^2/zeta depends on the node set, so it is cached per node set
    cache: dict[float, np.ndarray] = {}

    def source(u, comps, _params):
        key = float(u[-1])
        if key not in cache:
            cache[key] = 1.0 / coef.ratio2(u, "left")
        return _so3_source(u, comps, (alpha, cache[key]))

    kern = SingularKernel(KernelKind.SO3, source)
    return singular_start(kern, None, eps=eps, min_eps=eps * 0.99 if fixed else 1e-8)


def shoot_minus(coef: Coefficient, alpha: float, config: IntegratorConfig | None = None) -> Shot:
    return shoot_left(coef, alpha, 0.0, config)


class MirroredShot:
    """``l(r) = -L(-r)`` where ``L`` is a left shot for the mirrored coefficient."""

    def __init__(self, shot: Shot) -> None:
        self.shot = shot
        self.beta = shot.alpha
        self.r_start = -shot.r_end

    def state(self, r) -> np.ndarray:
        r = np.atleast_1d(np.asarray(r, float))
        st = self.shot.state(-r)
        return np.vstack([-st[0], st[1], -st[2], st[3]])

    def one_minus(self, r) -> np.ndarray:
        """``1 - l`` accurately near ``r = 1``."""
        return self.shot.v(-np.atleast_1d(np.asarray(r, float)))


def shoot_plus(coef: Coefficient, beta: float, config: IntegratorConfig | None = None, r_end: float = 0.0) -> MirroredShot:
    """Shot from ``r = 1`` with ``l''(1) = -beta`` down to ``r_end``."""
    return MirroredShot(shoot_left(coef.mirrored(), beta, -r_end, config))


class ShotCache:
    """Memoized left/right shots for one coefficient."""

    def __init__(self, coef: Coefficient, config: IntegratorConfig | None = None, maxsize: int = 4096) -> None:
        self.coef = coef
        self.config = config or IntegratorConfig()
        self._left: dict[float, Shot] = {}
        self._right: dict[float, Shot] = {}
        self.maxsize = maxsize
        self.mirror = coef.mirrored()
        self.even = coef.is_even()

    def left(self, alpha: float) -> Shot:
        key = float(alpha)
        if key not in self._left:
            if len(self._left) > self.maxsize:
                self._left.clear()
            self._left[key] = shoot_left(self.coef, key, 0.0, self.config)
        return self._left[key]

    def right(self, beta: float) -> MirroredShot:
        if self.even:
            return MirroredShot(self.left(beta))
        key = float(beta)
        if key not in self._right:
            if len(self._right) > self.maxsize:
                self._right.clear()
            self._right[key] = shoot_left(self.mirror, key, 0.0, self.config)
        return MirroredShot(self._right[key])

    def J_and_jac(self, ab) -> tuple[np.ndarray, np.ndarray]:
        a, b = float(ab[0]), float(ab[1])
        lm = self.left(a).end()
        lp = self.right(b).state(0.0)[:, 0]
        val = np.array([lp[0] - lm[0], lp[1] - lm[1]])
        jac = np.array([[-lm[2], lp[2]], [-lm[3], lp[3]]])
        return val, jac

    def J(self, ab) -> np.ndarray:
        return self.J_and_jac(ab)[0]


def J(coef: Coefficient, alpha: float, beta: float, config: IntegratorConfig | None = None) -> np.ndarray:
    """``((l+ - l-)(0), (l+ - l-)'(0))``."""
    return ShotCache(coef, config).J((alpha, beta))


# --------------------------------------------------------------- sigma0


def reference_solution(config: IntegratorConfig | None = None, r_max: float = 64.0) -> Shot:
    """``l~'' = E(l~)/(r+1)^2``, ``l~(-1) = -1``, ``l~''(-1) = 1``, run until ``l~ >= 2``."""
    cfg = config or IntegratorConfig()
    r_end = 1.0
    while True:
        shot = shoot_left(Quadratic(), 1.0, r_end, cfg.replace(max_step=max(cfg.max_step, 0.05 * (r_end + 1))))
        if shot.end()[0] >= 2.0 or r_end >= r_max:
            return shot
        r_end = 2 * r_end + 1


@dataclass
class Sigma0Certificate:
    r0: float
    r_star: float
    alpha0: float
    alpha_minus: float
    l_star: float
    bound: float
    mid_integral: float
    amplitude: float
    width: float
    properties: dict[str, bool] = field(default_factory=dict)
    details: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "r0": self.r0,
            "r_star": self.r_star,
            "alpha0": self.alpha0,
            "alpha_minus": self.alpha_minus,
            "l_star": self.l_star,
            "integral_bound": self.bound,
            "mid_integral": self.mid_integral,
            "amplitude": self.amplitude,
            "ramp_width": self.width,
            "properties": dict(self.properties),
            "details": dict(self.details),
        }


R_STAR_LEVEL = 17.0 / 16.0


@lru_cache(maxsize=4)
def _reference(abs_tol: float, rel_tol: float) -> Shot:
    return reference_solution(IntegratorConfig(abs_tol=abs_tol, rel_tol=rel_tol))


def reference_numbers(config: IntegratorConfig | None = None) -> dict[str, float]:
    """``r0`` (first zero of ``l~``), ``r*`` (``l~ = 17/16``), ``alpha0``, ``alpha-``, ``l*``."""
    cfg = config or IntegratorConfig()
    ref = _reference(cfg.abs_tol, cfg.rel_tol)

    def l(r):
        return float(ref.state(r)[0, 0])

    def dl(r):
        return float(ref.state(r)[1, 0])

    hi = ref.r_end
    grid = np.linspace(-1.0 + 1e-9, hi, 4001)
    vals = ref.state(grid)[0]
    i0 = int(np.argmax(vals >= 0.0))
    r0 = brentq(l, grid[i0 - 1], grid[i0], xtol=1e-15)
    i1 = int(np.argmax(vals >= R_STAR_LEVEL))
    r_star = brentq(lambda r: l(r) - R_STAR_LEVEL, grid[i1 - 1], grid[i1], xtol=1e-15)
    alpha0 = 64.0 * (r_star + 1.0) ** 2

    # l~' increases while l~ < 0, so the sup over [-1, c - 1] sits at c - 1
    def ok(c):
        return l(c - 1.0) < -0.75 and 8.0 * c * dl(c - 1.0) < 0.25

    lo, hi_c = 1e-6, math.sqrt(alpha0) / 8.0
    for _ in range(80):
        mid = 0.5 * (lo + hi_c)
        if ok(mid):
            lo = mid
        else:
            hi_c = mid
    c_minus = 0.9 * lo
    alpha_minus = 64.0 * c_minus**2
    span = np.linspace(c_minus - 1.0, r_star, 4001)
    inf_dl = float(np.min(ref.state(span)[1]))
    # refine the minimiser
    k = int(np.argmin(ref.state(span)[1]))
    a_, b_ = span[max(k - 1, 0)], span[min(k + 1, span.size - 1)]
    from scipy.optimize import minimize_scalar

    res = minimize_scalar(dl, bounds=(a_, b_), method="bounded", options={"xatol": 1e-13})
    inf_dl = min(inf_dl, float(res.fun))
    l_star = math.sqrt(alpha_minus) * inf_dl
    return {
        "r0": r0,
        "r_star": r_star,
        "alpha0": alpha0,
        "alpha_minus": alpha_minus,
        "l_star": l_star,
        "dl_r0": dl(r0),
    }


def build_sigma0(config: IntegratorConfig | None = None, width: float = 1e-3, check: bool = True) -> tuple[Sigma0, Sigma0Certificate]:
    """Construct ``sigma0`` and certify its properties numerically."""
    cfg = config or IntegratorConfig()
    nums = reference_numbers(cfg)
    bound = min(nums["l_star"] / 48.0, 1.0 / 192.0)
    amp = 64.0
    sig = Sigma0(amp, width)
    while sig.inverse_integral() > 0.5 * bound:
        amp *= 2.0
        if amp > 1e12:
            raise ConstructionFailed("integral bound unreachable", property=0)
        sig = Sigma0(amp, width)
    cert = Sigma0Certificate(
        r0=nums["r0"],
        r_star=nums["r_star"],
        alpha0=nums["alpha0"],
        alpha_minus=nums["alpha_minus"],
        l_star=nums["l_star"],
        bound=bound,
        mid_integral=sig.inverse_integral(),
        amplitude=amp,
        width=width,
    )
    if check:
        _certify_sigma0(sig, cert, cfg)
    return sig, cert


def _certify_sigma0(sig: Sigma0, cert: Sigma0Certificate, cfg: IntegratorConfig) -> None:
    props = cert.properties
    grid = np.linspace(-1.0, -SEVEN_EIGHTHS, 257)
    props["1_quadratic_end"] = bool(np.max(np.abs(sig.values(grid) - (grid + 1) ** 2)) <= 1e-15)
    g = np.linspace(-1.0, 1.0, 2001)
    props["2_even"] = bool(np.max(np.abs(sig.values(g) - sig.values(-g))) == 0.0)
    # property 3 on an alpha grid, property 4 at alpha0, property 5 by shooting
    pos = True
    alphas = np.concatenate([np.geomspace(1e-3, cert.alpha0, 24), [1.5 * cert.alpha0, 3 * cert.alpha0]])
    rr = np.linspace(-1.0 + 1e-4, 0.0, 801)
    for a in alphas:
        st = shoot_left(sig, a, 0.0, cfg).state(rr)
        pos = pos and bool(np.all(st[1] > 0))
    props["3_positive_derivative"] = pos
    shot = shoot_left(sig, cert.alpha0, -SEVEN_EIGHTHS, cfg)
    cert.details["l_at_-7/8_alpha0"] = float(shot.end()[0])
    props["4_exit_at_alpha0"] = shot.end()[0] > 1.0
    # property 5: at the alpha where l(7/8) = 0 the slope is below 5/7
    a_zero = _k0_zero(sig, cert, cfg)
    st = shoot_left(sig, a_zero, SEVEN_EIGHTHS, cfg).end()
    cert.details["alpha_K0_zero"] = a_zero
    cert.details["slope_at_7/8"] = float(st[1])
    props["5_slope_bound"] = bool(st[1] < 5.0 / 7.0)
    failed = [k for k, v in props.items() if not v]
    if failed:
        raise ConstructionFailed(f"sigma0 violates {failed}", property=failed[0])


def K(coef: Coefficient, alpha: float, config: IntegratorConfig | None = None) -> float:
    """``l^alpha(7/8)`` for the shot from ``r = -1``."""
    return float(shoot_left(coef, alpha, SEVEN_EIGHTHS, config).end()[0])


def _k0_zero(sig: Sigma0, cert: Sigma0Certificate, cfg: IntegratorConfig) -> float:
    lo, hi = cert.alpha_minus * 1e-3, cert.alpha0
    flo, fhi = K(sig, lo, cfg), K(sig, hi, cfg)
    if not (flo < 0 < fhi):
        raise ConstructionFailed("K0 has no sign change on [0, alpha0]", property=5, values=[flo, fhi])
    return brentq(lambda a: K(sig, a, cfg), lo, hi, xtol=1e-13, rtol=1e-14)


# ------------------------------------------------------------------ solving


def homotopy_schedule(q: float, decades: float = 6.0) -> tuple[float, float]:
    """``(p, 1 - p)`` with ``1 - p = (1 - q) 10^(-decades q)``.

    Away from the ends ``sigma0`` dwarfs the target, so the zero only moves once
    ``1 - p`` is small; this spreads that range evenly over ``q``.
    """
    one_minus = (1.0 - q) * 10.0 ** (-decades * q)
    return 1.0 - one_minus, one_minus


@dataclass
class SolutionSO3:
    alpha: float
    beta: float
    left: Shot
    right: MirroredShot
    coef: Coefficient
    path: ContinuationPath | None = None
    degree: WindingCertificate | None = None
    box: tuple[float, float] | None = None
    residual: ResidualReport | None = None
    max_parameters: tuple[float, float] = (0.0, 0.0)
    extra: dict = field(default_factory=dict)
    metric: "MetricSO3 | None" = None
    y: RadialProfile | None = None
    scalar: tuple[float, float] | None = None

    def state(self, r) -> np.ndarray:
        """``(l, l')`` glued at ``r = 0``."""
        r = np.atleast_1d(np.asarray(r, float))
        out = np.empty((2, r.size))
        neg = r <= 0
        if np.any(neg):
            out[:, neg] = self.left.state(r[neg])[:2]
        if np.any(~neg):
            out[:, ~neg] = self.right.state(r[~neg])[:2]
        return out

    def l(self, r):
        return self.state(r)[0]

    def dl(self, r):
        return self.state(r)[1]

    def one_minus_l2(self, r) -> np.ndarray:
        """``1 - l^2`` without cancellation near the ends."""
        r = np.atleast_1d(np.asarray(r, float))
        out = np.empty(r.size)
        neg = r <= 0
        if np.any(neg):
            v = self.left.v(r[neg])
            out[neg] = v * (2.0 - v)
        if np.any(~neg):
            w = self.right.one_minus(r[~neg])
            out[~neg] = w * (2.0 - w)
        return out

    @property
    def l2_left(self) -> float:
        return self.alpha

    @property
    def l2_right(self) -> float:
        return -self.beta


def degree_box(cert: Sigma0Certificate, factor: float = 1.5) -> tuple[float, float]:
    a = factor * cert.alpha0
    return a, a


def solve_p0(sigma0: Sigma0, cert: Sigma0Certificate, config: IntegratorConfig | None = None,
             box: tuple[float, float] | None = None, n_samples: int = 64) -> tuple[np.ndarray, WindingCertificate]:
    """Winding certificate of ``J0`` on the box and its zero by Newton."""
    cache = ShotCache(sigma0, config)
    amax, bmax = box or degree_box(cert)
    wc = winding_certificate(cache.J, (0.0, amax, 0.0, bmax), n_samples=n_samples)
    # start Newton on the diagonal, where J0 is (Delta, 0) by parity
    diag = np.linspace(0.0, amax, 65)[1:]
    first = np.array([cache.J((a, a))[0] for a in diag])
    k = int(np.argmax(first <= 0)) if np.any(first <= 0) else len(diag) - 1
    a0 = brentq(lambda a: cache.J((a, a))[0], diag[k - 1] if k else 1e-9, diag[k], xtol=1e-14)
    res = newton_nd(cache.J, np.array([a0, a0]), tol=1e-12, jacobian=lambda x: cache.J_and_jac(x)[1])
    return res.x, wc


def solve_sigma(
    sigma: Coefficient,
    config: IntegratorConfig | None = None,
    tol: float = 1e-10,
    decades: float = 6.0,
    sigma0_data: tuple[Sigma0, Sigma0Certificate] | None = None,
    certify: bool = True,
    start: np.ndarray | None = None,
) -> SolutionSO3:
    """Homotopy from ``sigma0`` to ``sigma``; returns the glued solution at ``p = 1``."""
    cfg = config or IntegratorConfig()
    sig0, cert = sigma0_data or build_sigma0(cfg, check=certify)
    box = degree_box(cert)
    if start is None:
        x0, wc = solve_p0(sig0, cert, cfg, box)
    else:
        x0, wc = np.asarray(start, float), None
    caches: dict[float, ShotCache] = {}

    def cache_for(q: float) -> ShotCache:
        if q not in caches:
            if len(caches) > 8:
                caches.clear()
            p, omp = homotopy_schedule(q, decades)
            caches[q] = ShotCache(Blend(sig0, sigma, p, omp), cfg)
        return caches[q]

    def F(q, x):
        return cache_for(q).J(x)

    def jac(q, x):
        return cache_for(q).J_and_jac(x)[1]

    max_ab = [0.0, 0.0]

    def accept(q, x):
        return bool(x[0] > 0.0 and x[1] > 0.0)

    def newton_domain(x):
        return bool(np.all(np.abs(x) < 1e4 * max(box)))

    def on_point(pt):
        max_ab[0] = max(max_ab[0], float(pt.x[0]))
        max_ab[1] = max(max_ab[1], float(pt.x[1]))
        c = cache_for(pt.p)
        sol = _glue(c, pt.x)
        rr = np.linspace(-1.0, 1.0, 401)[1:-1]
        d = sol.dl(rr)
        if np.any(d <= 0):
            raise MonitorViolated("l' <= 0 at an accepted continuation point", q=pt.p, alpha=pt.x[0], beta=pt.x[1],
                                  min_derivative=float(np.min(d)))

    path = continuation(F, (0.0, 1.0), x0, accept=accept, tol=tol, on_point=on_point, domain=newton_domain,
                        jacobian=jac, dp0=0.05, dp_max=0.1)
    end = path.end
    sol = _glue(cache_for(1.0), end.x)
    sol.path = path
    sol.degree = wc
    sol.box = box
    sol.max_parameters = (max_ab[0], max_ab[1])
    sol.coef = sigma
    sol.extra["sigma0"] = cert.to_dict()
    sol.extra["p0_zero"] = [float(x0[0]), float(x0[1])]
    if max_ab[0] > box[0] or max_ab[1] > box[1]:
        sol.extra["warning"] = "tracked zero left the p=0 degree box"
    return sol


def _glue(cache: ShotCache, x) -> SolutionSO3:
    a, b = float(x[0]), float(x[1])
    return SolutionSO3(a, b, cache.left(a), cache.right(b), cache.coef)


# ----------------------------------------------------- profiles and metrics


def validate_y(y: RadialProfile, tol: float = 1e-9, n: int = 2001) -> None:
    """Check that ``Y = dr^2 + y^2 Q`` closes up smoothly at both ends."""
    defects = []
    if (y.a, y.b) != (-1.0, 1.0):
        defects.append(f"domain is [{y.a}, {y.b}], expected [-1, 1]")
        raise ProfileInvalid("so3 profile has the wrong domain", defects)
    rr = np.linspace(-1.0, 1.0, n)
    vals = np.asarray(y(rr), float)
    if not np.all(np.isfinite(vals)):
        defects.append("non-finite values")
    elif np.any(vals[1:-1] <= 0):
        defects.append(f"y <= 0 at r = {rr[1:-1][vals[1:-1] <= 0][0]:.6g}")
    for r_end, want in ((-1.0, 1.0), (1.0, -1.0)):
        v = float(y(r_end))
        if abs(v) > tol:
            defects.append(f"y({r_end:g}) = {v:.3e}, expected 0")
        d = float(y(r_end, 1))
        if abs(d - want) > tol:
            defects.append(f"y'({r_end:g}) = {d:.12g}, expected {want:g}")
    if defects:
        raise ProfileInvalid("so3 profile fails the smoothness conditions", defects)


def is_even_profile(y: RadialProfile, tol: float = 1e-13, n: int = 513) -> bool:
    rr = np.linspace(0.0, 1.0, n)
    return bool(np.max(np.abs(np.asarray(y(rr)) - np.asarray(y(-rr)))) <= tol)


@dataclass
class MetricSO3:
    """``g = h^2 dr^2 + f^2 Q``; ``defects`` holds the endpoint smoothness defects."""

    h: RadialProfile
    f: RadialProfile
    defects: dict = field(default_factory=dict)


def _one_minus_l2_over_u2(sol: SolutionSO3, u, side: str) -> np.ndarray:
    """``(1 - l^2)/u^2`` at distance ``u`` from an end, exact at ``u = 0``."""
    u = np.atleast_1d(np.asarray(u, float))
    shot = sol.left if side == "left" else sol.right.shot
    a = shot.alpha
    out = np.empty(u.size)
    near = u < shot.eps
    if np.any(near):
        comp = shot.start.components(u[near])[0]
        q = comp.s_u2 + 0.5 * a  # v/u^2
        out[near] = q * (2.0 - q * u[near] ** 2)
    if np.any(~near):
        v = shot.v(-1.0 + u[~near])
        out[~near] = v * (2.0 - v) / u[~near] ** 2
    return out


def _y_ratio(y: RadialProfile, u, side: str) -> np.ndarray:
    return np.atleast_1d(y.ratio(np.asarray(u, float), side))


def h_values(sol: SolutionSO3, y: RadialProfile, r) -> np.ndarray:
    """``h = (1 - l^2)/y^2`` with the removable singularities at the ends resolved."""
    r = np.atleast_1d(np.asarray(r, float))
    out = np.empty(r.size)
    for side, mask, u in (("left", r <= 0, r + 1.0), ("right", r > 0, 1.0 - r)):
        if np.any(mask):
            num = _one_minus_l2_over_u2(sol, u[mask], side)
            out[mask] = num / _y_ratio(y, u[mask], side) ** 2
    return out


def reconstruct(sol: SolutionSO3, y: RadialProfile, tol: float = 1e-12, **fit_kw) -> MetricSO3:
    """``f = l'`` and ``h = (1 - l^2)/y^2`` as piecewise Chebyshev profiles.

    ``f`` is the integral of ``l'' = -l h`` from ``f(-1) = 0``, so ``f(1)``
    measures how well the shot closes up."""
    rr = np.linspace(-1.0, 1.0, 801)[1:-1]
    if np.any(sol.dl(rr) <= 0) or np.any(np.abs(sol.l(rr)) >= 1):
        raise DegenerateProfile("reconstruction needs l' > 0 and |l| < 1 inside")
    # 1 - l^2 and y^2 must both vanish quadratically
    for side, a in (("left", sol.alpha), ("right", sol.beta)):
        if not a > 0:
            raise DegenerateProfile(f"1 - l^2 does not vanish quadratically at the {side} end", parameter=a)
    bps = (0.0,) + tuple(getattr(sol.coef, "breakpoints", ()))
    h = ChebProfile.fit_with_parity(lambda r: h_values(sol, y, r), -1.0, 1.0, ("even", "even"), tol=tol,
                                    breakpoints=bps, name="h", **fit_kw)
    # f' = l'' = -l h uses only values of l, which the integrator delivers more
    # accurately than l'; integrating from f(-1) = 0 saves one differentiation
    fp = ChebProfile.fit_with_parity(lambda r: -sol.l(r) * h_values(sol, y, r), -1.0, 1.0, ("even", "even"),
                                     tol=tol, breakpoints=bps, name="f'", **fit_kw)
    f = fp.antiderivative(name="f")
    f.parity = ("odd", "odd")
    hl, hr = h_values(sol, y, [-1.0, 1.0])
    defects = {
        "f'(-1) - h(-1)": float(f(-1.0, 1) - hl),
        "f'(1) + h(1)": float(f(1.0, 1) + hr),
        "f(-1)": float(f(-1.0)),
        "f(1)": float(f(1.0)),
    }
    return MetricSO3(h, f, defects)


def _l_derivs(g: MetricSO3, r):
    return minus_ratio_derivatives(g.f, g.h, r)


def forward_cross(g: MetricSO3) -> tuple[FunctionProfile, FunctionProfile]:
    """``X_rr = (l')^2/f^2`` and ``X_QQ = -l'(l^2 - 1)/(h f)`` with ``l = -f'/h``.

    At the ends both are 0/0; there ``X_rr`` takes its limit ``(l''/f')^2``
    and ``X_QQ`` its limit 0.
    """
    a, b = g.f.a, g.f.b

    def x_rr(r):
        r = np.atleast_1d(np.asarray(r, float))
        l0, l1, l2 = _l_derivs(g, r)
        f0 = np.asarray(g.f(r), float)
        end = (r <= a) | (r >= b)
        with np.errstate(all="ignore"):
            out = (l1 / f0) ** 2
        if np.any(end):
            out[end] = (l2[end] / np.asarray(g.f(r[end], 1))) ** 2
        return out

    def x_qq(r):
        r = np.atleast_1d(np.asarray(r, float))
        l0, l1, _ = _l_derivs(g, r)
        f0 = np.asarray(g.f(r), float)
        h0 = np.asarray(g.h(r), float)
        end = (r <= a) | (r >= b)
        with np.errstate(all="ignore"):
            out = -l1 * (l0 * l0 - 1.0) / (h0 * f0)
        out[end] = 0.0
        return out

    return (FunctionProfile([x_rr], a, b, ("even", "even"), "X_rr"),
            FunctionProfile([x_qq], a, b, ("even", "even"), "X_QQ"))


def residual_report(sol: SolutionSO3, y: RadialProfile, g: MetricSO3 | None = None, n: int = 2001) -> ResidualReport:
    """``X(g) - Y`` on a uniform grid, plus boundary and smoothness defects."""
    g = g or reconstruct(sol, y)
    x_rr, x_qq = forward_cross(g)
    rr = np.linspace(-1.0, 1.0, n)
    yy = np.asarray(y(rr), float)
    comps = {"rr": x_rr(rr) - 1.0, "QQ": x_qq(rr) - yy * yy}
    ends = sol.state([-1.0, 1.0])
    defects = dict(g.defects)
    defects["l(-1) + 1"] = float(ends[0, 0] + 1.0)
    defects["l(1) - 1"] = float(ends[0, 1] - 1.0)
    defects["l'(-1)"] = float(ends[1, 0])
    defects["l'(1)"] = float(ends[1, 1])
    return ResidualReport(rr, comps, defects, margin=float(min(sol.alpha, sol.beta)))


def scalar_at_singular_orbits(sol: SolutionSO3, y: RadialProfile | None = None,
                              check: bool = True) -> tuple[float, float]:
    """``(6/l''(-1), -6/l''(1))``; optionally cross-checked against the interior
    formula ``4 sigma/(1 - l^2) - 2(l^2 - 1)/(l')^2`` extrapolated to the ends."""
    if not (sol.alpha > 0 and sol.beta > 0):
        raise DegenerateEndpoint("l'' must be positive at -1 and negative at 1", alpha=sol.alpha, beta=sol.beta)
    s_n, s_s = 6.0 / sol.alpha, 6.0 / sol.beta
    if check and y is not None:
        ext = scalar_extrapolated(sol, y)
        sol.extra["scalar_extrapolated"] = ext
        sol.extra["scalar_check"] = max(abs(ext[0] - s_n), abs(ext[1] - s_s))
    return s_n, s_s


def scalar_extrapolated(sol: SolutionSO3, y: RadialProfile, u_max: float = 2e-2, n: int = 9) -> tuple[float, float]:
    u = np.linspace(u_max / n, u_max, n)
    out = []
    for side in ("left", "right"):
        r = -1.0 + u if side == "left" else 1.0 - u
        q = _one_minus_l2_over_u2(sol, u, side)  # (1 - l^2)/u^2
        yr = _y_ratio(y, u, side)
        dl_u = sol.dl(r) / u
        S = 4.0 * yr**2 / q + 2.0 * q / dl_u**2
        out.append(float(np.polynomial.polynomial.polyfit(u, S, 4)[0]))
    return out[0], out[1]


def solve(
    y: RadialProfile,
    config: IntegratorConfig | None = None,
    tol: float = 1e-10,
    sigma0_data: tuple[Sigma0, Sigma0Certificate] | None = None,
    certify: bool = True,
    start: np.ndarray | None = None,
    n_grid: int = 2001,
) -> SolutionSO3:
    """Solve ``X(g) = dr^2 + y^2 Q`` and attach the closed-loop residual."""
    validate_y(y)
    sigma = SquareOf(y, even=is_even_profile(y))
    sol = solve_sigma(sigma, config, tol=tol, sigma0_data=sigma0_data, certify=certify, start=start)
    finish(sol, y, n_grid)
    return sol


RECONSTRUCT_CONFIG = IntegratorConfig(abs_tol=1e-14, rel_tol=1e-13)


def finish(sol: SolutionSO3, y: RadialProfile, n_grid: int = 2001,
           config: IntegratorConfig | None = RECONSTRUCT_CONFIG, **fit_kw) -> MetricSO3:
    """Post-checks on a solved ``l``: truncation inactive, metric, residual.

    The two shots are repeated at ``config`` first; profile fits and their
    derivatives need the interpolated ``l`` smoother than the shooting
    tolerance delivers.
    """
    if config is not None:
        tight = _glue(ShotCache(sol.coef, config), (sol.alpha, sol.beta))
        sol.left, sol.right = tight.left, tight.right
        sol.extra["J_at_reconstruct_config"] = ShotCache(sol.coef, config).J((sol.alpha, sol.beta)).tolist()
    rr = np.linspace(-1.0, 1.0, n_grid)
    st = sol.state(rr)
    sol.extra["max_abs_l"] = float(np.max(np.abs(st[0])))
    sol.extra["min_dl_interior"] = float(np.min(st[1][1:-1]))
    sol.extra["truncation_inactive"] = bool(sol.extra["max_abs_l"] <= 2.0)
    g = reconstruct(sol, y, **fit_kw)
    sol.residual = residual_report(sol, y, g, n_grid)
    sol.metric = g
    sol.y = y
    sol.scalar = scalar_at_singular_orbits(sol, y)
    return g
