"""Natural-parameter predictor-corrector continuation of a zero path."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..errors import NoConvergence, PathLost, XCurveError
from .newton import newton_nd


@dataclass
class PathPoint:
    p: float
    x: np.ndarray
    monitor: float | None = None
    residual: float = 0.0


@dataclass
class ContinuationPath:
    points: list[PathPoint] = field(default_factory=list)
    rejected: int = 0

    @property
    def end(self) -> PathPoint:
        return self.points[-1]

    def ps(self) -> np.ndarray:
        return np.array([pt.p for pt in self.points])

    def xs(self) -> np.ndarray:
        return np.array([pt.x for pt in self.points])

    def monitors(self) -> np.ndarray:
        return np.array([np.nan if pt.monitor is None else pt.monitor for pt in self.points])


def continuation(
    F: Callable[[float, np.ndarray], np.ndarray],
    p_range: tuple[float, float],
    x0,
    monitor: Callable[[float, np.ndarray], float] | None = None,
    accept: Callable[[float, np.ndarray], bool] | None = None,
    tol: float = 1e-10,
    dp0: float = 0.05,
    dp_min: float = 1e-5,
    dp_max: float = 0.1,
    newton_iter: int = 12,
    domain: Callable[[np.ndarray], bool] | None = None,
    on_point: Callable[[PathPoint], None] | None = None,
    jacobian: Callable[[float, np.ndarray], np.ndarray] | None = None,
) -> ContinuationPath:
    """Track ``F(p, x) = 0`` from ``(p_range[0], x0)`` to ``p_range[1]``.

    Secant predictor, damped Newton corrector. ``dp`` halves on corrector
    failure or when ``accept`` rejects a point, and grows by 1.5 after quick
    corrections. ``PathLost`` carries the last accepted point. ``jacobian``,
    if given, replaces the finite-difference Jacobian in the corrector.
    """

    def corrector(p, guess):
        jac = None if jacobian is None else (lambda z: jacobian(p, z))
        return newton_nd(lambda z: F(p, z), guess, tol=tol, max_iter=newton_iter, domain=domain, jacobian=jac)

    p_start, p_end = map(float, p_range)
    sign = 1.0 if p_end >= p_start else -1.0
    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    f0 = np.atleast_1d(F(p_start, x))
    res0 = float(np.max(np.abs(f0)))
    if res0 > tol:
        try:
            x = corrector(p_start, x).x
        except NoConvergence as exc:
            raise PathLost("initial point is not a zero", last_point=(p_start, x), residual=exc.residual) from exc
        res0 = float(np.max(np.abs(F(p_start, x))))
    first = PathPoint(p_start, x, None if monitor is None else float(monitor(p_start, x)), res0)
    path = ContinuationPath([first])
    if on_point:
        on_point(first)
    dp = dp0
    prev: PathPoint | None = None
    cur = first
    while sign * (p_end - cur.p) > 0:
        step = min(dp, abs(p_end - cur.p))
        p_new = cur.p + sign * step
        if abs(p_end - p_new) < 1e-14:
            p_new = p_end
        if prev is not None:
            slope = (cur.x - prev.x) / (cur.p - prev.p)
            guess = cur.x + slope * (p_new - cur.p)
        else:
            guess = cur.x
        ok = False
        try:
            res = corrector(p_new, guess)
            ok = accept is None or bool(accept(p_new, res.x))
        except (NoConvergence, XCurveError, FloatingPointError):
            res = None
        if not ok:
            path.rejected += 1
            dp = 0.5 * dp
            if dp < dp_min:
                raise PathLost(
                    f"corrector failed at p={p_new:.6g} with dp below {dp_min:g}",
                    last_point=(cur.p, cur.x.tolist()),
                )
            continue
        mon = None if monitor is None else float(monitor(p_new, res.x))
        pt = PathPoint(p_new, res.x, mon, res.residual)
        path.points.append(pt)
        if on_point:
            on_point(pt)
        prev, cur = cur, pt
        if res.iterations <= 4:
            dp = min(dp_max, 1.5 * dp)
    return path


# ------------------------------------------------------------ pseudo-arclength


@dataclass
class CurvePoint:
    z: np.ndarray
    tangent: np.ndarray
    monitor: float | None = None
    residual: float = 0.0


@dataclass
class Curve:
    points: list[CurvePoint] = field(default_factory=list)
    rejected: int = 0

    @property
    def end(self) -> CurvePoint:
        return self.points[-1]

    def zs(self) -> np.ndarray:
        return np.array([pt.z for pt in self.points])

    def monitors(self) -> np.ndarray:
        return np.array([np.nan if pt.monitor is None else pt.monitor for pt in self.points])

    def steps(self) -> np.ndarray:
        return np.linalg.norm(np.diff(self.zs(), axis=0), axis=1)


def _tangent(jac: np.ndarray, previous: np.ndarray | None) -> np.ndarray:
    t = np.linalg.svd(jac)[2][-1]
    if previous is not None and float(t @ previous) < 0:
        t = -t
    return t / np.linalg.norm(t)


def _keller_newton(F, jacobian, z_pred, normal, tol, max_iter, fixed: tuple[int, float] | None = None):
    """Solve ``F(z) = 0`` with ``normal . (z - z_pred) = 0`` (or a fixed coordinate)."""
    z = z_pred.copy()
    for it in range(1, max_iter + 1):
        f = np.atleast_1d(F(z))
        J = np.atleast_2d(jacobian(z))
        if fixed is None:
            g = float(normal @ (z - z_pred))
            row = normal
        else:
            g = float(z[fixed[0]] - fixed[1])
            row = np.zeros(z.size)
            row[fixed[0]] = 1.0
        res = float(np.max(np.abs(f)))
        if res <= tol and abs(g) <= 1e-14 * max(1.0, float(np.max(np.abs(z)))):
            return z, res, it
        A = np.vstack([J, row])
        b = -np.concatenate([f, [g]])
        dz = np.linalg.solve(A, b)
        if not np.all(np.isfinite(dz)):
            break
        z = z + dz
    f = np.atleast_1d(F(z))
    res = float(np.max(np.abs(f)))
    if res <= tol:
        return z, res, max_iter
    raise NoConvergence("arclength corrector did not converge", best=z.tolist(), residual=res)


def arclength_continuation(
    F: Callable[[np.ndarray], np.ndarray],
    jacobian: Callable[[np.ndarray], np.ndarray],
    z0,
    direction,
    stop: tuple[int, float],
    monitor: Callable[[np.ndarray], float] | None = None,
    accept: Callable[[np.ndarray], bool] | None = None,
    tol: float = 1e-11,
    ds0: float = 0.02,
    ds_min: float = 1e-7,
    ds_max: float = 0.1,
    max_points: int = 5000,
    newton_iter: int = 8,
) -> Curve:
    """Follow the curve ``F(z) = 0``, ``z`` in ``R^(n+1)``, by pseudo-arclength steps.

    Starts at ``z0`` heading along ``direction`` and stops when coordinate
    ``stop[0]`` reaches ``stop[1]``; the last point is solved with that
    coordinate fixed. Turning points in any coordinate are passed through.
    """
    k_stop, v_stop = stop
    z = np.asarray(z0, float).copy()
    z, res, _ = _keller_newton(F, jacobian, z, np.zeros(z.size), tol, newton_iter, fixed=(k_stop, z[k_stop]))
    t = _tangent(jacobian(z), np.asarray(direction, float))
    mon = (lambda w: None if monitor is None else float(monitor(w)))
    curve = Curve([CurvePoint(z, t, mon(z), res)])
    ds = ds0
    sign = 1.0 if v_stop >= z[k_stop] else -1.0
    while len(curve.points) < max_points:
        cur = curve.end
        z_pred = cur.z + ds * cur.tangent
        crossing = sign * (z_pred[k_stop] - v_stop) >= 0
        try:
            if crossing:
                # land on the stop value: move along the tangent to it, then fix it
                s = (v_stop - cur.z[k_stop]) / cur.tangent[k_stop]
                z_new, res, its = _keller_newton(F, jacobian, cur.z + s * cur.tangent, None, tol, newton_iter,
                                                 fixed=(k_stop, v_stop))
            else:
                z_new, res, its = _keller_newton(F, jacobian, z_pred, cur.tangent, tol, newton_iter)
            ok = accept is None or bool(accept(z_new))
            t_new = _tangent(jacobian(z_new), cur.tangent)
            # a reversed or sharply turned tangent means the corrector jumped branches
            ok = ok and float(t_new @ cur.tangent) > 0.5
        except (NoConvergence, XCurveError, FloatingPointError, np.linalg.LinAlgError):
            ok = False
        if not ok:
            curve.rejected += 1
            ds *= 0.5
            if ds < ds_min:
                raise PathLost(f"arclength continuation stalled at z={cur.z.tolist()}", last_point=cur.z.tolist())
            continue
        curve.points.append(CurvePoint(z_new, t_new, mon(z_new), res))
        if crossing:
            return curve
        if its <= 3:
            ds = min(ds_max, 1.5 * ds)
    raise PathLost("arclength continuation exceeded the point budget", last_point=curve.end.z.tolist())


def curve_point_between(F, jacobian, a: CurvePoint, b: CurvePoint, s: float, tol: float = 1e-11) -> np.ndarray:
    """Point of the curve near the chord from ``a`` to ``b`` at fraction ``s``."""
    chord = b.z - a.z
    normal = chord / np.linalg.norm(chord)
    z_pred = a.z + s * chord
    return _keller_newton(F, jacobian, z_pred, normal, tol, 12)[0]
