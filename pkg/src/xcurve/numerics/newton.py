"""Damped Newton iteration with a central-difference Jacobian."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..errors import NoConvergence, XCurveError

Vector = np.ndarray
Residual = Callable[[Vector], "np.ndarray | float"]


@dataclass
class NewtonResult:
    x: np.ndarray
    residual: float
    iterations: int
    evaluations: int
    history: list[float] = field(default_factory=list)


def fd_jacobian(F: Residual, x: np.ndarray, fx: np.ndarray | None = None, rel_step: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian, step ``rel_step * max(1, |x_j|)`` per column."""
    x = np.asarray(x, dtype=float)
    cols = []
    for j in range(x.size):
        h = rel_step * max(1.0, abs(x[j]))
        xp = x.copy()
        xm = x.copy()
        xp[j] += h
        xm[j] -= h
        fp = np.atleast_1d(np.asarray(F(xp), dtype=float))
        fm = np.atleast_1d(np.asarray(F(xm), dtype=float))
        cols.append((fp - fm) / (2.0 * h))
    return np.column_stack(cols)


def newton_nd(
    F: Residual,
    x0,
    tol: float = 1e-10,
    max_iter: int = 50,
    rel_step: float = 1e-6,
    jacobian: Callable[[Vector], np.ndarray] | None = None,
    min_damping: float = 2.0**-12,
    domain: Callable[[Vector], bool] | None = None,
) -> NewtonResult:
    """Find ``x`` with ``max|F(x)| <= tol``.

    Each Newton step is halved until the residual norm decreases (or the
    trial leaves ``domain``, or ``F`` raises a solver error). When no damped
    step improves the residual, or ``max_iter`` is hit, ``NoConvergence`` is
    raised carrying the best iterate and its residual.
    """
    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    evals = 0

    def evaluate(z: np.ndarray) -> np.ndarray | None:
        nonlocal evals
        if domain is not None and not domain(z):
            return None
        evals += 1
        try:
            val = np.atleast_1d(np.asarray(F(z), dtype=float))
        except (XCurveError, FloatingPointError, ZeroDivisionError, OverflowError):
            return None
        if not np.all(np.isfinite(val)):
            return None
        return val

    fx = evaluate(x)
    if fx is None:
        raise NoConvergence("residual undefined at the initial point", best=x, residual=float("inf"))
    norm = float(np.max(np.abs(fx)))
    history = [norm]
    for it in range(max_iter + 1):
        if norm <= tol:
            return NewtonResult(x=x, residual=norm, iterations=it, evaluations=evals, history=history)
        if it == max_iter:
            break
        if jacobian is not None:
            J = np.atleast_2d(np.asarray(jacobian(x), dtype=float))
        else:
            J = fd_jacobian(F, x, fx, rel_step)
            evals += 2 * x.size
        try:
            dx = np.linalg.solve(J, -fx)
        except np.linalg.LinAlgError:
            dx = np.linalg.lstsq(J, -fx, rcond=None)[0]
        if not np.all(np.isfinite(dx)):
            break
        lam = 1.0
        accepted = False
        while lam >= min_damping:
            trial = x + lam * dx
            ft = evaluate(trial)
            if ft is not None:
                nt = float(np.max(np.abs(ft)))
                if nt < norm:
                    x, fx, norm = trial, ft, nt
                    accepted = True
                    break
            lam *= 0.5
        history.append(norm)
        if not accepted:
            break
    raise NoConvergence(
        f"Newton did not reach tol={tol:g}; best residual {norm:.3e}",
        best=x,
        residual=norm,
        iterations=len(history) - 1,
    )
