"""Radial profiles: scalar functions of ``r`` on a closed interval.

Three concrete kinds share one interface:

* :class:`AnalyticProfile` from a sympy expression, with exact derivatives;
* :class:`SampledProfile` from grid samples, a cubic spline built on data
  reflected through the endpoints according to their parity, so an odd
  endpoint gets an exactly odd interpolant;
* :class:`ChebProfile`, an adaptive piecewise Chebyshev fit of a callable,
  used for reconstructed metric profiles and spectral differentiation.

``profile(r, nu)`` evaluates the ``nu``-th derivative. ``profile.fast`` is a
scalar-only evaluator of the value for use inside ODE right-hand sides.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import sympy as sp
from numpy.polynomial import chebyshev as C
from scipy.interpolate import make_interp_spline

from .errors import ProfileInvalid

ODD, EVEN = "odd", "even"
R = sp.Symbol("r", real=True)


class RadialProfile:
    a: float
    b: float
    parity: tuple[str | None, str | None] = (None, None)
    name: str = "profile"

    def __call__(self, r, nu: int = 0):
        raise NotImplementedError

    def fast(self, r: float) -> float:
        return float(self(r))

    def fast_d(self, r: float, nu: int) -> float:
        return float(self(r, nu))

    def ratio(self, u, side: str = "left", taylor_below: float = 1e-4):
        """``|y(e + u)| / u`` (left end) or ``|y(e - u)| / u`` (right end).

        For ``u < taylor_below`` a cubic Taylor expansion at the end is used,
        since ``y(e + u)`` has only ``1e-16/u`` relative accuracy there. Assumes
        ``y(e) = 0``; ``u = 0`` gives ``|y'(e)|``.
        """
        u_arr = np.asarray(u, dtype=float)
        u = np.atleast_1d(u_arr)
        e, sgn = (self.a, 1.0) if side == "left" else (self.b, -1.0)
        out = np.empty(u.shape)
        small = u < taylor_below
        if np.any(small):
            d1, d2, d3 = (float(self(e, k)) for k in (1, 2, 3))
            us = sgn * u[small]
            out[small] = np.abs(d1 + us * (d2 / 2.0 + us * d3 / 6.0))
        if np.any(~small):
            big = u[~small]
            out[~small] = np.abs(self(e + sgn * big)) / big
        return out.reshape(u_arr.shape) if u_arr.ndim else float(out[0])

    def grid(self, n: int) -> np.ndarray:
        return np.linspace(self.a, self.b, n)

    def scaled(self, c: float) -> "RadialProfile":
        return ScaledProfile(self, c)


class ScaledProfile(RadialProfile):
    """``c * base`` (derivatives scale alike)."""

    def __init__(self, base: RadialProfile, c: float) -> None:
        self.base = base
        self.c = float(c)
        self.a, self.b, self.parity = base.a, base.b, base.parity
        self.name = f"{c:g}*{base.name}"

    def __call__(self, r, nu: int = 0):
        return self.c * self.base(r, nu)

    def fast(self, r: float) -> float:
        return self.c * self.base.fast(r)

    def fast_d(self, r: float, nu: int) -> float:
        return self.c * self.base.fast_d(r, nu)


class ReflectedProfile(RadialProfile):
    """``base(a + b - r)``: the profile read from the other end."""

    def __init__(self, base: RadialProfile) -> None:
        self.base = base
        self.a, self.b = base.a, base.b
        self.parity = (base.parity[1], base.parity[0])
        self.name = f"reflected {base.name}"
        self._m = base.a + base.b

    def __call__(self, r, nu: int = 0):
        r = np.asarray(r, dtype=float)
        return (-1.0) ** nu * np.asarray(self.base(self._m - r, nu), float)

    def fast(self, r: float) -> float:
        return self.base.fast(self._m - r)

    def fast_d(self, r: float, nu: int) -> float:
        return (-1.0) ** nu * self.base.fast_d(self._m - r, nu)


class AnalyticProfile(RadialProfile):
    def __init__(self, expr, a: float, b: float, parity=(None, None), name: str | None = None) -> None:
        if isinstance(expr, str):
            expr = sp.sympify(expr, locals={"r": R, "pi": sp.pi})
        free = expr.free_symbols
        if free - {R}:
            syms = {s.name: s for s in free}
            if set(syms) - {"r"}:
                raise ProfileInvalid("analytic profile may only depend on r", defects=[f"free symbols {sorted(syms)}"])
            expr = expr.subs(syms["r"], R)
        self.expr = expr
        self.a, self.b = float(a), float(b)
        self.parity = tuple(parity)
        self.name = name or str(expr)
        self._np = []
        self._math = []
        d = expr
        for _ in range(5):
            self._np.append(sp.lambdify(R, d, modules="numpy"))
            self._math.append(sp.lambdify(R, d, modules="math"))
            d = sp.diff(d, R)

    def __call__(self, r, nu: int = 0):
        r_arr = np.asarray(r, dtype=float)
        val = self._np[nu](r_arr)
        return np.broadcast_to(np.asarray(val, dtype=float), r_arr.shape).copy() if np.ndim(val) < r_arr.ndim else np.asarray(val, float)

    def fast(self, r: float) -> float:
        return self._math[0](r)

    def fast_d(self, r: float, nu: int) -> float:
        return float(self._math[nu](r))

    def exact(self, r, nu: int = 0) -> sp.Expr:
        return sp.diff(self.expr, R, nu).subs(R, r)


class SampledProfile(RadialProfile):
    """Interpolating spline through samples; endpoint parities are imposed by reflection.

    ``degree`` is odd; 3 is the usual cubic spline, higher degrees keep third
    derivatives accurate when the samples come from a smooth profile.
    """

    def __init__(self, grid, values, parity=(None, None), name: str = "samples", degree: int = 3) -> None:
        x = np.asarray(grid, dtype=float)
        y = np.asarray(values, dtype=float)
        if degree < 3 or degree % 2 == 0:
            raise ValueError("spline degree must be odd and at least 3")
        if x.ndim != 1 or x.shape != y.shape or x.size < degree + 1:
            raise ProfileInvalid(f"sampled profile needs matching 1-D grid and values with at least {degree + 1} points")
        if not np.all(np.diff(x) > 0):
            raise ProfileInvalid("sample grid must be strictly increasing", defects=["grid not increasing"])
        if not np.all(np.isfinite(y)):
            raise ProfileInvalid("sample values must be finite", defects=["non-finite values"])
        self.a, self.b = float(x[0]), float(x[-1])
        self.parity = tuple(parity)
        self.name = name
        self.samples = (x.copy(), y.copy())
        xs, ys = x, y
        left, right = self.parity
        # odd about (x0, y0): y(x0 - d) = 2 y0 - y(x0 + d); even: y(x0 - d) = y(x0 + d)
        if left in (ODD, EVEN):
            mirrored = y[:0:-1]
            xs = np.concatenate([2 * x[0] - x[:0:-1], xs])
            ys = np.concatenate([2 * y[0] - mirrored if left == ODD else mirrored, ys])
        if right in (ODD, EVEN):
            mirrored = y[-2::-1]
            xs = np.concatenate([xs, 2 * x[-1] - x[-2::-1]])
            ys = np.concatenate([ys, 2 * y[-1] - mirrored if right == ODD else mirrored])
        self.degree = degree
        self._spline = make_interp_spline(xs, ys, k=degree)
        self._d = [self._spline.derivative(k) if k else self._spline for k in range(degree + 1)]

    def __call__(self, r, nu: int = 0):
        if nu > self.degree:
            return np.zeros_like(np.asarray(r, dtype=float))
        return self._d[nu](np.asarray(r, dtype=float))

    def fast(self, r: float) -> float:
        return float(self._spline(r))

    def fast_d(self, r: float, nu: int) -> float:
        return float(self._d[nu](r)) if nu <= self.degree else 0.0


class ChebProfile(RadialProfile):
    """Adaptive piecewise Chebyshev interpolant of a callable."""

    def __init__(self, panels: list[tuple[float, float, np.ndarray]], parity=(None, None), name: str = "cheb") -> None:
        self.panels = panels
        self.edges = np.array([p[0] for p in panels] + [panels[-1][1]])
        self.a, self.b = float(self.edges[0]), float(self.edges[-1])
        self.parity = tuple(parity)
        self.name = name
        self._deriv_cache: dict[int, list[np.ndarray]] = {0: [p[2] for p in panels]}

    @classmethod
    def fit(
        cls,
        func: Callable[[np.ndarray], np.ndarray],
        a: float,
        b: float,
        deg: int = 24,
        tol: float = 1e-13,
        breakpoints: Sequence[float] = (),
        max_panels: int = 512,
        min_width: float = 1e-6,
        parity=(None, None),
        name: str = "cheb",
        oversample: int = 1,
        local: bool = False,
    ) -> "ChebProfile":
        """Per panel, ``oversample * (deg + 1)`` Chebyshev points are fitted by least
        squares; oversampling damps the amplification of noise in the data at the
        panel ends, where derivatives of an interpolant are least accurate.

        The tail of each panel is measured against the larger of the panel's own
        magnitude and that of the first panel; ``local=True`` drops the latter, for
        functions that are small but must keep relative accuracy somewhere."""
        edges = sorted({float(a), float(b), *[float(t) for t in breakpoints if a < t < b]})
        todo = list(zip(edges[:-1], edges[1:]))[::-1]
        done: list[tuple[float, float, np.ndarray]] = []
        scale = None
        m = max(1, int(oversample)) * (deg + 1)
        while todo:
            lo, hi = todo.pop()
            nodes = np.cos(np.pi * (np.arange(m) + 0.5) / m)
            xs = 0.5 * (lo + hi) + 0.5 * (hi - lo) * nodes
            vals = np.asarray(func(xs), dtype=float)
            coef = C.chebfit(nodes, vals, deg)
            if scale is None:
                scale = 0.0 if local else max(1.0, float(np.max(np.abs(vals))))
            tail = float(np.max(np.abs(coef[-3:])))
            if tail > tol * max(scale, float(np.max(np.abs(vals)))) and hi - lo > min_width and len(done) + len(todo) < max_panels:
                mid = 0.5 * (lo + hi)
                todo.append((mid, hi))
                todo.append((lo, mid))
                continue
            done.append((lo, hi, coef))
        done.sort(key=lambda t: t[0])
        return cls(done, parity=parity, name=name)

    @classmethod
    def fit_with_parity(
        cls,
        func: Callable[[np.ndarray], np.ndarray],
        a: float,
        b: float,
        parity: tuple[str, str],
        halo: float = 0.125,
        breakpoints: Sequence[float] = (),
        **kw,
    ) -> "ChebProfile":
        """Fit on ``[a - halo, b + halo]``, extending ``func`` across each end by its
        parity, so that the ends are interior points of a panel centred on them.

        When such a centred panel survives refinement its coefficients of the wrong
        parity are dropped, which makes the parity exact. The returned profile
        reports the domain ``[a, b]``.
        """

        def ext(r):
            r = np.asarray(r, dtype=float)
            out = np.empty_like(r)
            lo, hi = r < a, r > b
            mid = ~(lo | hi)
            if np.any(mid):
                out[mid] = func(r[mid])
            for mask, end, kind in ((lo, a, parity[0]), (hi, b, parity[1])):
                if np.any(mask):
                    refl = np.asarray(func(2 * end - r[mask]), float)
                    out[mask] = -refl if kind == ODD else refl
            return out

        bps = (a + halo, b - halo, *breakpoints)
        prof = cls.fit(ext, a - halo, b + halo, breakpoints=bps, parity=parity, **kw)
        panels = []
        for lo, hi, c in prof.panels:
            for end, kind in ((a, parity[0]), (b, parity[1])):
                if abs(0.5 * (lo + hi) - end) < 1e-14 * max(1.0, abs(end)):
                    c = c.copy()
                    # T_k(-x) = (-1)^k T_k(x): odd keeps odd k, even keeps even k
                    c[0 if kind == ODD else 1::2] = 0.0
            panels.append((lo, hi, c))
        out = cls(panels, parity=parity, name=prof.name)
        out.a, out.b = float(a), float(b)
        return out

    def _coeffs(self, nu: int) -> list[np.ndarray]:
        if nu not in self._deriv_cache:
            out = []
            for lo, hi, c in self.panels:
                out.append(C.chebder(c, nu) * (2.0 / (hi - lo)) ** nu if nu else c)
            self._deriv_cache[nu] = out
        return self._deriv_cache[nu]

    def __call__(self, r, nu: int = 0):
        r_arr = np.asarray(r, dtype=float)
        flat = np.atleast_1d(r_arr).ravel()
        idx = np.clip(np.searchsorted(self.edges, flat, side="right") - 1, 0, len(self.panels) - 1)
        coeffs = self._coeffs(nu)
        out = np.empty_like(flat)
        for k in np.unique(idx):
            m = idx == k
            lo, hi, _ = self.panels[k]
            out[m] = C.chebval((2 * flat[m] - lo - hi) / (hi - lo), coeffs[k])
        return out.reshape(r_arr.shape) if r_arr.ndim else float(out[0])


    def antiderivative(self, name: str = "integral") -> "ChebProfile":
        """``int_a^r`` of the profile, continuous across panels."""
        panels = []
        acc = 0.0
        for lo, hi, c in self.panels:
            ci = C.chebint(c, lbnd=-1) * (0.5 * (hi - lo))
            ci[0] += acc
            acc = float(C.chebval(1.0, ci))
            panels.append((lo, hi, ci))
        out = ChebProfile(panels, name=name)
        shift = float(out(self.a))
        if shift != 0.0:
            out = ChebProfile([(lo, hi, np.concatenate([[c[0] - shift], c[1:]])) for lo, hi, c in panels], name=name)
        out.a, out.b = self.a, self.b
        return out


def minus_ratio_derivatives(f: RadialProfile, h: RadialProfile, r):
    """``l = -f'/h`` and its first two derivatives from the profiles' derivatives."""
    f1, f2, f3 = (np.asarray(f(r, k), float) for k in (1, 2, 3))
    h0, h1, h2 = (np.asarray(h(r, k), float) for k in (0, 1, 2))
    l0 = -f1 / h0
    l1 = -f2 / h0 + f1 * h1 / h0**2
    l2 = -f3 / h0 + 2 * f2 * h1 / h0**2 + f1 * h2 / h0**2 - 2 * f1 * h1**2 / h0**3
    return l0, l1, l2


class FunctionProfile(RadialProfile):
    """Profile given by explicit callables for value and derivatives."""

    def __init__(self, funcs: Sequence[Callable], a: float, b: float, parity=(None, None), name: str = "function",
                 fast: Callable[[float], float] | None = None) -> None:
        self.funcs = list(funcs)
        self.a, self.b = float(a), float(b)
        self.parity = tuple(parity)
        self.name = name
        self._fast = fast

    def __call__(self, r, nu: int = 0):
        return self.funcs[nu](np.asarray(r, dtype=float))

    def fast(self, r: float) -> float:
        return self._fast(r) if self._fast else float(self.funcs[0](np.asarray(r, dtype=float)))


# ---------------------------------------------------------------- residuals


@dataclass
class ResidualReport:
    """Componentwise residuals ``X(g) - Y`` on a grid plus endpoint defects."""

    grid: np.ndarray
    components: dict[str, np.ndarray]
    endpoint_defects: dict[str, float] = field(default_factory=dict)
    margin: float = 0.0

    @property
    def sup(self) -> float:
        vals = [float(np.max(np.abs(v))) for v in self.components.values()]
        return max(vals) if vals else 0.0

    @property
    def endpoint_sup(self) -> float:
        return max((abs(v) for v in self.endpoint_defects.values()), default=0.0)

    def to_dict(self) -> dict:
        return {
            "sup": self.sup,
            "components": {k: float(np.max(np.abs(v))) for k, v in self.components.items()},
            "endpoint_defects": {k: float(v) for k, v in self.endpoint_defects.items()},
            "endpoint_margin": self.margin,
            "n_grid": int(self.grid.size),
        }


# ------------------------------------------------------------ named profiles


def smoothstep(t):
    """Quintic Hermite blend: 0 for t <= 0, 1 for t >= 1, C^2."""
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t))


def smoothstep_d(t, nu: int = 1):
    inside = (t > 0) & (t < 1)
    t = np.clip(t, 0.0, 1.0)
    if nu == 1:
        v = 30.0 * t * t * (1 - t) ** 2
    elif nu == 2:
        v = 60.0 * t * (1 - t) * (1 - 2 * t)
    elif nu == 3:
        v = 60.0 * (1 - 6 * t + 6 * t * t)
    else:
        raise ValueError("nu must be 1, 2 or 3")
    return np.where(inside, v, 0.0)


def smoothstep_fast(t: float) -> float:
    if t <= 0.0:
        return 0.0
    if t >= 1.0:
        return 1.0
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t))


NAMED = {
    # so3 round: y = (2/pi) cos(pi r / 2) on [-1, 1]
    "cosine-round": lambda: {"y": AnalyticProfile(2 / sp.pi * sp.cos(sp.pi * R / 2), -1, 1, (ODD, ODD), "cosine-round")},
    # so2 round: y1 = (2/pi) sin(pi r/2), y2 = (2/pi) cos(pi r/2) on [0, 1]
    "sine-cosine-round": lambda: {
        "y1": AnalyticProfile(2 / sp.pi * sp.sin(sp.pi * R / 2), 0, 1, (ODD, EVEN), "sine-round"),
        "y2": AnalyticProfile(2 / sp.pi * sp.cos(sp.pi * R / 2), 0, 1, (EVEN, ODD), "cosine-round"),
    },
}


def named_profile(name: str) -> dict[str, RadialProfile]:
    try:
        return NAMED[name]()
    except KeyError:
        raise ProfileInvalid(f"unknown analytic profile {name!r}", defects=[f"known: {sorted(NAMED)}"]) from None


def sqrt_profile(sigma: RadialProfile, quad_ends: tuple[float, float]) -> FunctionProfile:
    """``y = sqrt(sigma)`` where ``sigma = (r - a)^2`` on ``[a, quad_ends[0]]`` and
    ``(b - r)^2`` on ``[quad_ends[1], b]``; there ``y`` is the exact linear root."""
    a, b = sigma.a, sigma.b
    lo, hi = quad_ends

    def value(r):
        r = np.asarray(r, float)
        mid = np.sqrt(np.maximum(sigma(r), 0.0))
        return np.where(r <= lo, r - a, np.where(r >= hi, b - r, mid))

    def d1(r):
        r = np.asarray(r, float)
        with np.errstate(all="ignore"):
            mid = sigma(r, 1) / (2 * np.sqrt(sigma(r)))
        return np.where(r <= lo, 1.0, np.where(r >= hi, -1.0, mid))

    def d2(r):
        r = np.asarray(r, float)
        with np.errstate(all="ignore"):
            y = np.sqrt(sigma(r))
            mid = (sigma(r, 2) - 2 * (sigma(r, 1) / (2 * y)) ** 2) / (2 * y)
        return np.where((r <= lo) | (r >= hi), 0.0, mid)

    def fast(r: float) -> float:
        if r <= lo:
            return r - a
        if r >= hi:
            return b - r
        return math.sqrt(sigma.fast(r))

    return FunctionProfile([value, d1, d2], a, b, (ODD, ODD), name=f"sqrt({sigma.name})", fast=fast)
