"""Winding numbers of planar maps and degrees of scalar maps."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..errors import RefinementExhausted, ZeroAtEndpoint, ZeroOnBoundary


@dataclass
class WindingCertificate:
    winding: int
    min_abs: float
    n_evaluations: int
    max_increment: float
    rectangle: tuple[float, float, float, float]
    boundary: list[tuple[float, float, float, float]] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "winding": self.winding,
            "min_abs_on_boundary": self.min_abs,
            "n_evaluations": self.n_evaluations,
            "max_angle_increment": self.max_increment,
            "rectangle": list(self.rectangle),
        }


def _boundary_param(rect):
    x0, x1, y0, y1 = rect
    corners = [(x0, y0), (x1, y0), (x1, y1), (x0, y1), (x0, y0)]

    def point(s: float) -> tuple[float, float]:
        # s in [0, 4): counter-clockwise around the rectangle
        i = min(int(s), 3)
        f = s - i
        (ax, ay), (bx, by) = corners[i], corners[i + 1]
        return ax + f * (bx - ax), ay + f * (by - ay)

    return point


def winding_certificate(
    F: Callable[[np.ndarray], np.ndarray],
    rect: tuple[float, float, float, float],
    n_samples: int = 64,
    zero_tol: float = 1e-12,
    max_increment: float = np.pi / 4,
    max_evaluations: int = 20000,
) -> WindingCertificate:
    """Winding number of ``F`` along the counter-clockwise boundary of ``rect``.

    Segments whose angle increment is at least ``max_increment`` (default
    pi/4, safely below the pi/2 requirement) are bisected until every
    increment is small.
    """
    x0, x1, y0, y1 = map(float, rect)
    if not (x1 > x0 and y1 > y0):
        raise ValueError("rectangle must have positive width and height")
    point = _boundary_param((x0, x1, y0, y1))
    evals = 0
    cache: dict[float, np.ndarray] = {}

    def value(s: float) -> np.ndarray:
        nonlocal evals
        key = float(s)
        if key not in cache:
            if evals >= max_evaluations:
                raise RefinementExhausted("boundary refinement exceeded the evaluation budget", evaluations=evals)
            evals += 1
            v = np.asarray(F(np.array(point(key))), dtype=float).reshape(2)
            if not np.all(np.isfinite(v)):
                raise ZeroOnBoundary("non-finite map value on the boundary", s=key)
            cache[key] = v
        return cache[key]

    per_edge = max(2, n_samples // 4)
    params = [i / per_edge for i in range(4 * per_edge)] + [4.0]
    stack = list(zip(params[:-1], params[1:]))[::-1]
    total = 0.0
    worst = 0.0
    min_abs = np.inf
    while stack:
        a, b = stack.pop()
        fa = value(a % 4.0)
        fb = value(b % 4.0)
        min_abs = min(min_abs, float(np.hypot(*fa)), float(np.hypot(*fb)))
        if min_abs < zero_tol:
            raise ZeroOnBoundary(f"|F| = {min_abs:.3e} on the boundary", min_abs=min_abs)
        d = float(np.angle(complex(*fb) / complex(*fa)))
        if abs(d) >= max_increment:
            if b - a < 1e-12:
                raise RefinementExhausted("angle increment not resolved by bisection", at=a)
            m = 0.5 * (a + b)
            stack.append((m, b))
            stack.append((a, m))
            continue
        total += d
        worst = max(worst, abs(d))
    w = total / (2 * np.pi)
    wi = int(round(w))
    if abs(w - wi) > 1e-6:
        raise RefinementExhausted(f"winding sum {w} is not an integer")
    boundary = [(s, *point(s), *cache[s]) for s in sorted(cache)]
    return WindingCertificate(wi, float(min_abs), evals, worst, (x0, x1, y0, y1), boundary)


def winding_number(F, rect, n_samples: int = 64, zero_tol: float = 1e-12) -> int:
    return winding_certificate(F, rect, n_samples=n_samples, zero_tol=zero_tol).winding


def degree_1d(F: Callable[[float], float], a: float, b: float, zero_tol: float = 0.0) -> int:
    """Brouwer degree of a scalar map on ``[a, b]``: ``(sign F(b) - sign F(a)) / 2``."""
    fa, fb = float(F(a)), float(F(b))
    for x, fx in ((a, fa), (b, fb)):
        if abs(fx) <= zero_tol:
            raise ZeroAtEndpoint(f"F({x:g}) = {fx:.3e}", at=x, value=fx)
    return int((np.sign(fb) - np.sign(fa)) // 2)
