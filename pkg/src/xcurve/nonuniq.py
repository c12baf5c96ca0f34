"""Three SO(3)-invariant metrics with the same cross curvature.

The target is ``Y = dr^2 + sigma Q`` for an even ``sigma`` equal to
``(1 - |r|)^2`` near the ends. Writing ``l^{p,alpha}`` for the shot from
``r = -1`` with ``l''(-1) = alpha`` and coefficient
``sigma_p = (1 - p) sigma0 + p sigma1``:

* ``l_sm`` is the shot for ``(r + 1)^2`` that vanishes at ``-7/8``, with
  slope ``l*`` there;
* ``(p*, alpha*)`` is a zero of ``K_p(alpha) = l^{p,alpha}(7/8)`` at which
  the slope at ``7/8`` equals ``l*``, so ``l_sm`` mirrored glues onto it;
* ``alpha^`` is the first ``alpha`` where ``l^{p*,alpha}(0) = 0``, giving the
  odd solution.

With ``sigma = sigma_{p*}`` the two glued functions and the odd one solve the
boundary-value problem. Each is stored as an ordinary two-sided SO(3)
solution (``l''(-1)``, ``-l''(1)``), polished by Newton on the matching
conditions at ``r = 0``, and then reconstructed and checked in closed loop.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from . import so3
from .errors import (
    GluingDefect,
    InfeasibleBound,
    NoConvergence,
    NoSignChange,
    ObstructionDegenerate,
    OddnessDefect,
    ResidualTooLarge,
)
from .numerics.continuation import Curve, arclength_continuation, curve_point_between
from .numerics.degree import degree_1d
from .numerics.integrate import IntegratorConfig
from .numerics.newton import newton_nd
from .profiles import ODD, RadialProfile, smoothstep, smoothstep_d, smoothstep_fast

SEVEN_EIGHTHS = so3.SEVEN_EIGHTHS
TIGHT = IntegratorConfig(abs_tol=1e-13, rel_tol=1e-12)
# l stays within 1e-3 of -1 over long stretches, so the final shots use
# relative error control only
RECONSTRUCT = IntegratorConfig(abs_tol=1e-16, rel_tol=1e-13)

# ---------------------------------------------------------------- l_sm


@dataclass
class SmallSolution:
    """``l_sm(r) = l~(sqrt(alpha)(r + 1) - 1)`` on ``[-1, -7/8]``."""

    alpha: float
    r0: float
    l_star: float
    reference: so3.Shot

    @property
    def scale(self) -> float:
        return math.sqrt(self.alpha)

    def state(self, r) -> np.ndarray:
        """``(l_sm, l_sm', l_sm'')``."""
        r = np.atleast_1d(np.asarray(r, float))
        s = self.scale
        x = s * (r + 1.0) - 1.0
        st = self.reference.state(x)
        u = x + 1.0
        d2 = np.empty(r.size)
        near = u < 1e-8
        # l~'' = (l~^3 - l~)/(x + 1)^2 -> 1 at x = -1
        d2[near] = 1.0
        with np.errstate(all="ignore"):
            d2[~near] = (st[0][~near] ** 3 - st[0][~near]) / u[~near] ** 2
        return np.vstack([st[0], s * st[1], self.alpha * d2])


def compute_lsm(config: IntegratorConfig | None = None) -> SmallSolution:
    """Rescale the reference solution so that its first zero sits at ``-7/8``."""
    cfg = config or TIGHT
    ref = so3._reference(cfg.abs_tol, cfg.rel_tol)
    nums = so3.reference_numbers(cfg)
    r0 = nums["r0"]
    alpha = 64.0 * (r0 + 1.0) ** 2
    return SmallSolution(alpha, r0, math.sqrt(alpha) * nums["dl_r0"], ref)


# -------------------------------------------------------------- sigma1


class Sigma1(so3.Coefficient):
    """Even, ``(1 - |r|)^2`` for ``|r| >= 7/8``, a plateau ``dip`` on
    ``7/8 - 2 delta <= |r| <= 7/8 - delta`` and a plateau ``mid`` inside
    ``|r| <= 7/8 - 3 delta``, joined by quintic blends of width ``delta``."""

    def __init__(self, delta: float, dip: float, mid: float = 1.0) -> None:
        self.delta, self.dip, self.mid = float(delta), float(dip), float(mid)
        c, d = SEVEN_EIGHTHS, self.delta
        knots = (c, c - d, c - 2 * d, c - 3 * d)
        self.breakpoints = tuple(sorted(set(knots) | {-k for k in knots}))

    def value(self, r: float) -> float:
        a = abs(r)
        c, d = SEVEN_EIGHTHS, self.delta
        if a >= c:
            return (1.0 - a) ** 2
        if a >= c - d:
            q = (1.0 - a) ** 2
            w = smoothstep_fast((c - a) / d)
            return (1.0 - w) * q + w * self.dip
        if a >= c - 2 * d:
            return self.dip
        return self.dip + smoothstep_fast((c - 2 * d - a) / d) * (self.mid - self.dip)

    def values(self, r):
        a = np.abs(np.asarray(r, float))
        c, d = SEVEN_EIGHTHS, self.delta
        q = (1.0 - a) ** 2
        w = smoothstep((c - a) / d)
        outer = (1.0 - w) * q + w * self.dip
        inner = self.dip + smoothstep((c - 2 * d - a) / d) * (self.mid - self.dip)
        return np.where(a >= c - 2 * d, outer, inner)

    def derivative(self, r, nu: int = 1):
        if nu != 1:
            raise ValueError("only the first derivative is provided")
        r = np.asarray(r, float)
        a = np.abs(r)
        c, d = SEVEN_EIGHTHS, self.delta
        q = (1.0 - a) ** 2
        dq = -2.0 * (1.0 - a)
        t1 = (c - a) / d
        psi1 = smoothstep(t1)
        outer = dq * (1 - psi1) - smoothstep_d(t1, 1) / d * (self.dip - q)
        inner = -smoothstep_d((c - 2 * d - a) / d, 1) / d * (self.mid - self.dip)
        return np.sign(r) * np.where(a >= c - 2 * d, outer, inner)

    def ratio2(self, u, side):
        u = np.asarray(u, float)
        if np.any(u > 1.0 / 8.0):
            raise ValueError("ratio2 only defined near the ends")
        return np.ones_like(u)

    def is_even(self) -> bool:
        return True


@dataclass
class Sigma1Data:
    sigma1: Sigma1
    delta: float
    delta0: float
    bound: float
    max_on_interval: float


def _delta0(delta: float) -> float:
    lo, hi = -1.0 + delta, -8.0 * delta / 15.0
    if not lo < hi:
        raise InfeasibleBound("the interval [-1 + delta, -8 delta/15] is empty", delta=delta)

    def cubic(x):
        return x**3 - x

    res = minimize_scalar(cubic, bounds=(lo, hi), method="bounded", options={"xatol": 1e-14})
    return float(min(cubic(lo), cubic(hi), res.fun))


def build_sigma1(l_star: float, mid: float = 1.0, safety: float = 0.5) -> Sigma1Data:
    """``sigma1`` with ``sigma1 < delta^2 delta0 / 2`` on ``[7/8 - 2 delta, 7/8 - delta]``."""
    delta = min(1.0 / (2.0 * (l_star + 1.0)), 7.0 / 16.0)
    delta0 = _delta0(delta)
    if not delta0 > 0:
        raise InfeasibleBound("delta0 is not positive", delta=delta, delta0=delta0)
    bound = 0.5 * delta * delta * delta0
    sig = Sigma1(delta, safety * bound, mid)
    grid = np.linspace(SEVEN_EIGHTHS - 2 * delta, SEVEN_EIGHTHS - delta, 1025)
    vmax = float(np.max(sig.values(grid)))
    if not vmax < bound:
        raise InfeasibleBound("sigma1 exceeds the bound on its dip", max=vmax, bound=bound)
    return Sigma1Data(sig, delta, delta0, bound, vmax)


# -------------------------------------------------------------- p*


def alpha_max(cert: so3.Sigma0Certificate) -> float:
    """Above ``alpha0`` every shot leaves ``[-7/8]`` above 1; ``sigma_p`` agrees
    with ``(r + 1)^2`` there for all ``p``."""
    return cert.alpha0


def k0_degree(sig0: so3.Sigma0, a_max: float, config: IntegratorConfig | None = None) -> dict:
    """``deg(K0, [0, a_max])`` with the endpoint values."""
    k_lo = so3.K(sig0, 0.0, config)
    k_hi = so3.K(sig0, a_max, config)
    return {"degree": degree_1d(lambda a: so3.K(sig0, a, config), 0.0, a_max), "K0(0)": k_lo, "K0(alpha_max)": k_hi,
            "alpha_max": a_max, "min_abs": min(abs(k_lo), abs(k_hi))}


@dataclass
class PStar:
    p: float
    one_minus_p: float
    q: float
    alpha: float
    monitor: float
    K: float
    curve: Curve
    monitor_ends: tuple[float, float]
    bracket: tuple[int, int]
    min_slope: float = float("nan")

    def path_summary(self) -> dict:
        st = self.curve.steps()
        return {
            "points": len(self.curve.points),
            "rejected": self.curve.rejected,
            "max_step_over_median": float(np.max(st) / np.median(st)),
            "min_slope_on_path": self.min_slope,
        }


LOG_SCALE = 10.0
PATH_TOL = 1e-10
BRACKET_TOL = 1e-11


class _KFamily:
    """``K_p(alpha)`` and the slope at ``7/8`` on the curve coordinates
    ``z = (q, ln(alpha)/LOG_SCALE)``, ``p`` given by the homotopy schedule."""

    def __init__(self, sig0, sig1, decades: float, config: IntegratorConfig, dq: float = 1e-7) -> None:
        self.sig0, self.sig1, self.decades, self.config, self.dq = sig0, sig1, decades, config, dq
        self._coefs: dict[float, so3.Coefficient] = {}
        self._shots: dict[tuple[float, float], so3.Shot] = {}

    def coef(self, q: float) -> so3.Coefficient:
        q = float(q)
        if q not in self._coefs:
            if len(self._coefs) > 64:
                self._coefs.clear()
            p, omp = so3.homotopy_schedule(min(max(q, 0.0), 1.0), self.decades)
            self._coefs[q] = so3.Blend(self.sig0, self.sig1, p, omp)
        return self._coefs[q]

    def shot(self, q: float, alpha: float) -> so3.Shot:
        key = (float(q), float(alpha))
        if key not in self._shots:
            if len(self._shots) > 256:
                self._shots.clear()
            self._shots[key] = so3.shoot_left(self.coef(q), alpha, SEVEN_EIGHTHS, self.config)
        return self._shots[key]

    def end(self, q: float, alpha: float) -> np.ndarray:
        return self.shot(q, alpha).end()

    @staticmethod
    def alpha(z) -> float:
        return float(math.exp(LOG_SCALE * z[1]))

    def F(self, z) -> np.ndarray:
        return self.end(z[0], self.alpha(z))[:1]

    def jac(self, z) -> np.ndarray:
        a = self.alpha(z)
        q, h = float(z[0]), self.dq
        lo, hi = max(q - h, 0.0), min(q + h, 1.0)
        dq = (self.end(hi, a)[0] - self.end(lo, a)[0]) / (hi - lo)
        return np.array([[dq, self.end(q, a)[2] * a * LOG_SCALE]])

    def zero(self, q: float, guess: float, tol: float = 1e-13) -> float:
        res = newton_nd(lambda x: self.end(q, x[0])[:1], np.array([guess]), tol=tol,
                        jacobian=lambda x: self.end(q, x[0])[2:3].reshape(1, 1))
        return float(res.x[0])

    def min_slope(self, z, n: int = 400) -> float:
        rr = np.linspace(-1.0, SEVEN_EIGHTHS, n + 1)[1:]
        return float(np.min(self.shot(z[0], self.alpha(z)).state(rr)[1]))


def find_pstar(
    sig0: so3.Sigma0,
    cert: so3.Sigma0Certificate,
    sig1: Sigma1,
    l_star: float,
    config: IntegratorConfig | None = None,
    decades: float = 12.0,
    monitor_tol: float = 1e-8,
) -> PStar:
    """Follow the zero curve of ``K_p`` from ``p = 0`` to ``p = 1`` and bisect
    the slope monitor ``l'(7/8) - l*`` along it.

    The curve turns back in ``alpha`` on the way, so it is parametrized by
    pseudo-arclength rather than by ``p``.
    """
    cfg = config or TIGHT
    fam = _KFamily(sig0, sig1, decades, cfg)
    a_max = alpha_max(cert)
    a0 = fam.zero(0.0, cert.details.get("alpha_K0_zero") or so3._k0_zero(sig0, cert, cfg))

    def monitor(z):
        return float(fam.end(z[0], fam.alpha(z))[1] - l_star)

    # K is only reproducible to a few 1e-12 late on the path; a tighter corrector
    # tolerance stalls on that noise and wastes steps
    curve = arclength_continuation(fam.F, fam.jac, [0.0, math.log(a0) / LOG_SCALE], [1.0, 0.0], (0, 1.0),
                                   monitor=monitor, accept=lambda z: fam.alpha(z) < a_max, tol=PATH_TOL,
                                   ds0=0.01, ds_max=0.05)
    mons = curve.monitors()
    m0, m1 = float(mons[0]), float(mons[-1])
    if not (m0 < 0 < m1):
        raise NoSignChange("slope monitor does not change sign along the K_p zero curve", monitor_p0=m0, monitor_p1=m1)
    k = int(np.argmax(mons > 0))
    A, B = curve.points[k - 1], curve.points[k]
    memo: dict[float, np.ndarray] = {}

    def z_at(s):
        if s not in memo:
            memo[s] = A.z if s == 0.0 else B.z if s == 1.0 else curve_point_between(fam.F, fam.jac, A, B, s, BRACKET_TOL)
        return memo[s]

    s_star = brentq(lambda s: monitor(z_at(s)), 0.0, 1.0, xtol=1e-15, rtol=1e-15, maxiter=200)
    z = z_at(s_star)
    m_star = monitor(z)
    if abs(m_star) > monitor_tol:
        raise NoConvergence("monitor bisection stalled above tolerance", best=z.tolist(), residual=abs(m_star))
    q_star = float(z[0])
    p, omp = so3.homotopy_schedule(q_star, decades)
    a_star = fam.alpha(z)
    slopes = [fam.min_slope(pt.z) for pt in curve.points[: k + 1]]
    return PStar(p, omp, q_star, a_star, m_star, float(fam.end(q_star, a_star)[0]), curve, (m0, m1), (k - 1, k),
                 float(min(slopes)))


# -------------------------------------------------------------- the three solutions


class SigmaRoot(RadialProfile):
    """``y = sqrt(sigma)`` for an even coefficient equal to ``(1 - |r|)^2`` on
    ``|r| >= 7/8``; there ``y = 1 - |r|`` exactly. Second and third
    derivatives are only provided on that end region."""

    def __init__(self, sigma: so3.Coefficient, name: str = "sqrt(sigma)") -> None:
        self.sigma = sigma
        self.a, self.b = -1.0, 1.0
        self.parity = (ODD, ODD)
        self.name = name

    def __call__(self, r, nu: int = 0):
        r_arr = np.asarray(r, float)
        r = np.atleast_1d(r_arr)
        a = np.abs(r)
        end = a >= SEVEN_EIGHTHS
        if nu == 0:
            out = np.where(end, 1.0 - a, np.sqrt(np.abs(self.sigma.values(r))))
        elif nu == 1:
            out = np.empty(r.size)
            out[end] = -np.sign(r[end])
            if np.any(~end):
                y = np.sqrt(self.sigma.values(r[~end]))
                out[~end] = self._dsigma(r[~end]) / (2.0 * y)
        else:
            out = np.where(end, 0.0, np.nan)
        return out.reshape(r_arr.shape) if r_arr.ndim else float(out[0])

    def _dsigma(self, r):
        s = self.sigma
        if isinstance(s, so3.Blend):
            return s.q * s.c0.derivative(r) + s.p * s.c1.derivative(r)
        return s.derivative(r)

    def fast(self, r: float) -> float:
        a = abs(r)
        return 1.0 - a if a >= SEVEN_EIGHTHS else math.sqrt(self.sigma.value(r))

    def ratio(self, u, side: str = "left", taylor_below: float = 1e-4):
        u_arr = np.asarray(u, float)
        u = np.atleast_1d(u_arr)
        out = np.where(u <= 1.0 / 8.0, 1.0, np.sqrt(self.sigma.values(self.a + u if side == "left" else self.b - u)) / np.where(u > 0, u, 1.0))
        return out.reshape(u_arr.shape) if u_arr.ndim else float(out[0])


def _ode_residual(sol: so3.SolutionSO3, n: int = 2001) -> float:
    """``max |sigma f' - (l^3 - l)|`` with ``f = l'`` from the reconstruction."""
    rr = np.linspace(-1.0, 1.0, n)
    l = sol.l(rr)
    d2 = np.asarray(sol.metric.f(rr, 1), float)
    return float(np.max(np.abs(sol.coef.values(rr) * d2 - (l**3 - l))))


@dataclass
class NonUniqCertificate:
    sigma: so3.Coefficient
    y: RadialProfile
    p_star: float
    one_minus_p_star: float
    alpha_star: float
    alpha_hat: float
    l_star: float
    lsm: SmallSolution
    minus: so3.SolutionSO3
    plus: so3.SolutionSO3
    zero: so3.SolutionSO3
    residuals: dict[str, dict] = field(default_factory=dict)
    scalars: dict[str, tuple[float, float]] = field(default_factory=dict)
    checks: dict[str, float] = field(default_factory=dict)
    numbers: dict[str, float] = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)
    obstruction: dict | None = None
    pstar: "PStar | None" = None

    def solutions(self) -> dict[str, so3.SolutionSO3]:
        return {"minus": self.minus, "plus": self.plus, "zero": self.zero}

    def to_dict(self) -> dict:
        return {
            "p_star": self.p_star,
            "one_minus_p_star": self.one_minus_p_star,
            "alpha_star": self.alpha_star,
            "alpha_hat": self.alpha_hat,
            "l_star": self.l_star,
            "alpha_sm": self.lsm.alpha,
            "endpoint_second_derivatives": {k: [s.alpha, -s.beta] for k, s in self.solutions().items()},
            "numbers": dict(self.numbers),
            "checks": dict(self.checks),
            "residuals": dict(self.residuals),
            "scalar_curvature": {k: list(v) for k, v in self.scalars.items()},
            "obstruction": self.obstruction,
            "timings_s": dict(self.timings),
        }


def _alpha_hat(cache: so3.ShotCache, lo: float, hi: float, n_scan: int = 64) -> tuple[float, dict]:
    """First ``alpha`` in ``[lo, hi]`` with ``l^alpha(0) = 0``.

    The scan also checks the sup characterization on the way: below the root
    the shot stays in ``[-1, 0]`` with ``l' >= 0`` on ``(-1, 0)``."""
    grid = np.linspace(lo, hi, n_scan)
    rr = np.linspace(-1.0, 0.0, 257)[1:]
    vals = []
    admissible = True
    for a in grid:
        st = cache.left(a).state(rr)
        vals.append(float(st[0, -1]))
        if vals[-1] < 0:
            admissible = admissible and bool(np.all(st[1] >= 0) and np.all(st[0] >= -1) and np.all(st[0] <= 0))
    vals = np.array(vals)
    if not (vals[0] < 0 < vals[-1]):
        raise NoSignChange("l(0) does not change sign on the alpha scan", lo=vals[0], hi=vals[-1])
    k = int(np.argmax(vals >= 0))
    a_hat = brentq(lambda a: float(cache.left(a).end()[0]), grid[k - 1], grid[k], xtol=1e-15, rtol=1e-15)
    increasing = bool(np.all(np.diff(vals[: k + 1]) > 0))
    return a_hat, {"scan_monotone": increasing, "scan_admissible": admissible, "l0_at_alpha_hat": float(cache.left(a_hat).end()[0])}


def assemble_solutions(
    sig0: so3.Sigma0,
    sig1: Sigma1,
    pstar: PStar,
    lsm: SmallSolution,
    config: IntegratorConfig | None = None,
    residual_tol: float = 1e-5,
    gluing_tol: float = 1e-7,
    distinct_tol: float = 1e-2,
    n_grid: int = 2001,
    reconstruct_config: IntegratorConfig | None = RECONSTRUCT,
) -> NonUniqCertificate:
    """Glue ``l_-``, ``l_+``, build ``l_0`` and check all three in closed loop."""
    cfg = config or TIGHT
    sigma = so3.Blend(sig0, sig1, pstar.p, pstar.one_minus_p)
    y = SigmaRoot(sigma)
    cache = so3.ShotCache(sigma, cfg)

    # gluing: l_lg = l^{p*, alpha*} meets -l_sm(-r) at 7/8 in value and slope
    lg = so3.shoot_left(sigma, pstar.alpha, SEVEN_EIGHTHS, cfg).end()
    sm = lsm.state(-SEVEN_EIGHTHS)[:, 0]
    gl_value = float(lg[0] + sm[0])
    gl_slope = float(lg[1] - sm[1])
    if max(abs(gl_value), abs(gl_slope)) > gluing_tol:
        raise GluingDefect("l_lg and the mirrored l_sm do not match at 7/8", value=gl_value, slope=gl_slope)

    # l_+ has l''(-1) = alpha*, l''(1) = -alpha_sm; polish the matching at 0
    x0 = np.array([pstar.alpha, lsm.alpha])
    j0 = cache.J(x0)
    try:
        res = newton_nd(cache.J, x0, tol=1e-13, jacobian=lambda x: cache.J_and_jac(x)[1])
        x_pol, j_pol = res.x, res.residual
    except NoConvergence as exc:
        # stalls at the integrator's noise floor; accept anything below it
        if not exc.residual <= gluing_tol:
            raise
        x_pol, j_pol = exc.best, exc.residual
    a_p, b_p = float(x_pol[0]), float(x_pol[1])
    plus = so3._glue(cache, (a_p, b_p))
    minus = so3._glue(cache, (b_p, a_p))
    a_hat, scan = _alpha_hat(cache, a_p, alpha_max_from(sigma, lsm))
    zero = so3._glue(cache, (a_hat, a_hat))

    cert = NonUniqCertificate(sigma, y, pstar.p, pstar.one_minus_p, a_p, a_hat, lsm.l_star, lsm, minus, plus, zero)
    cert.checks.update({
        "gluing_value_defect": gl_value,
        "gluing_slope_defect": gl_slope,
        "J_before_polish": float(np.max(np.abs(j0))),
        "J_after_polish": float(j_pol),
        "polish_shift_alpha": a_p - pstar.alpha,
        "polish_shift_beta": b_p - lsm.alpha,
        **scan,
    })
    for name, sol in cert.solutions().items():
        so3.finish(sol, y, n_grid, reconstruct_config, local=True)
        rep = sol.residual.to_dict()
        rep["ode"] = _ode_residual(sol, n_grid)
        rep["J"] = float(np.max(np.abs(cache.J((sol.alpha, sol.beta)))))
        cert.residuals[name] = rep
        cert.scalars[name] = sol.scalar
        if rep["sup"] > residual_tol:
            raise ResidualTooLarge(f"closed-loop residual of l_{name} above tolerance", sup=rep["sup"])

    rr = np.linspace(-1.0, 1.0, n_grid)
    L = {k: s.l(rr) for k, s in cert.solutions().items()}
    odd = {k: float(np.max(np.abs(v + v[::-1]))) for k, v in L.items()}
    cert.checks.update({
        "oddness_zero": odd["zero"],
        "oddness_minus": odd["minus"],
        "oddness_plus": odd["plus"],
        "mirror_defect": float(np.max(np.abs(L["plus"] + L["minus"][::-1]))),
        "dist_minus_plus": float(np.max(np.abs(L["minus"] - L["plus"]))),
        "dist_minus_zero": float(np.max(np.abs(L["minus"] - L["zero"]))),
        "dist_plus_zero": float(np.max(np.abs(L["plus"] - L["zero"]))),
    })
    left = rr <= -SEVEN_EIGHTHS
    cert.checks["lsm_vs_minus"] = float(np.max(np.abs(L["minus"][left] - lsm.state(rr[left])[0])))
    if odd["zero"] > 1e-8:
        raise OddnessDefect("l_0 is not odd", defect=odd["zero"])
    if min(odd["minus"], odd["plus"]) < distinct_tol:
        raise OddnessDefect("l_- or l_+ is numerically odd", minus=odd["minus"], plus=odd["plus"])
    if min(cert.checks[k] for k in ("dist_minus_plus", "dist_minus_zero", "dist_plus_zero")) < distinct_tol:
        raise OddnessDefect("the three solutions are not distinct", **{k: cert.checks[k] for k in cert.checks if k.startswith("dist")})
    return cert


def alpha_max_from(sigma: so3.Coefficient, lsm: SmallSolution) -> float:
    """An ``alpha`` with ``l^alpha(0) > 0``: doubling from ``l_sm''(-1)``."""
    a = lsm.alpha
    while so3.shoot_left(sigma, a, 0.0).end()[0] <= 0:
        a *= 2.0
    return a


def isometry_obstruction(cert: NonUniqCertificate, tol: float = 1e-6) -> dict:
    """Endpoint scalar curvatures ``(6/l''(-1), -6/l''(1))`` of the three metrics.

    The two values of ``g_+`` must both differ from both values of ``g_0``."""
    plus, zero = cert.scalars["plus"], cert.scalars["zero"]
    gaps = [abs(a - b) for a in plus for b in zero]
    report = {
        "scalar_curvature": {k: list(v) for k, v in cert.scalars.items()},
        "min_gap_plus_zero": float(min(gaps)),
        "zero_symmetric_defect": float(abs(zero[0] - zero[1])),
        "mirror_multiset_defect": float(abs(sorted(cert.scalars["plus"])[0] - sorted(cert.scalars["minus"])[0])
                                        + abs(sorted(cert.scalars["plus"])[1] - sorted(cert.scalars["minus"])[1])),
        "tolerance": tol,
    }
    if min(gaps) <= tol:
        raise ObstructionDegenerate("endpoint scalar curvatures of g_+ and g_0 coincide", **report)
    cert.obstruction = report
    return report


SIGMA0_WIDTH = 1e-3
SIGMA1_MID = 1.0


def run(config: IntegratorConfig | None = None, decades: float = 12.0, n_grid: int = 2001,
        sigma0_width: float = SIGMA0_WIDTH, sigma1_mid: float = SIGMA1_MID,
        residual_tol: float = 1e-5) -> NonUniqCertificate:
    """The full pipeline: ``l*``, ``sigma0``, ``sigma1``, the parameter ``p*`` and
    the three solutions with their closed-loop residuals."""
    cfg = config or TIGHT
    t = {}
    t0 = time.perf_counter()
    lsm = compute_lsm(cfg)
    sig0, cert0 = so3.build_sigma0(cfg, width=sigma0_width)
    t["sigma0"] = time.perf_counter() - t0
    s1 = build_sigma1(lsm.l_star, mid=sigma1_mid)
    a_max = alpha_max(cert0)
    deg = k0_degree(sig0, a_max, cfg)
    t1 = time.perf_counter()
    ps = find_pstar(sig0, cert0, s1.sigma1, lsm.l_star, cfg, decades)
    t["find_pstar"] = time.perf_counter() - t1
    t2 = time.perf_counter()
    cert = assemble_solutions(sig0, s1.sigma1, ps, lsm, cfg, n_grid=n_grid, residual_tol=residual_tol)
    t["assemble"] = time.perf_counter() - t2
    isometry_obstruction(cert)
    cert.numbers.update({
        "r0": lsm.r0,
        "r_star": cert0.r_star,
        "alpha0": cert0.alpha0,
        "alpha_max": a_max,
        "delta": s1.delta,
        "delta0": s1.delta0,
        "sigma1_bound": s1.bound,
        "sigma1_dip_max": s1.max_on_interval,
        "q_star": ps.q,
        "monitor_at_p_star": ps.monitor,
        "K_at_p_star": ps.K,
        "monitor_p0": ps.monitor_ends[0],
        "monitor_p1": ps.monitor_ends[1],
        "sigma0_amplitude": cert0.amplitude,
        "sigma0_width": sigma0_width,
        "sigma1_mid": sigma1_mid,
        "K0_degree": deg["degree"],
        "K0(0)": deg["K0(0)"],
        "K0(alpha_max)": deg["K0(alpha_max)"],
        **{"path_" + k: v for k, v in ps.path_summary().items()},
    })
    t["total"] = time.perf_counter() - t0
    cert.timings.update(t)
    cert.pstar = ps
    return cert
