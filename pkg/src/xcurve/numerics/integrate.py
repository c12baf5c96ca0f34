"""Adaptive explicit integration with dense output.

Thin layer over :func:`scipy.integrate.solve_ivp` (DOP853). The interval can
be split at ``breakpoints`` where the right-hand side is only finitely smooth,
and the pieces are stitched into one dense solution.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from ..errors import StepUnderflow


@dataclass(frozen=True)
class IntegratorConfig:
    abs_tol: float = 1e-12
    rel_tol: float = 1e-11
    max_step: float = 0.05
    min_step: float = 1e-13
    singular_offset: float = 1e-3

    def __post_init__(self) -> None:
        if not 0 < self.min_step <= self.max_step:
            raise ValueError("need 0 < min_step <= max_step")
        for name in ("abs_tol", "rel_tol"):
            val = getattr(self, name)
            if not 0 < val <= 1e-2:
                raise ValueError(f"{name} must lie in (0, 1e-2]")
        if not 1e-6 <= self.singular_offset <= 1e-1:
            raise ValueError("singular_offset must lie in [1e-6, 1e-1]")

    def replace(self, **changes) -> "IntegratorConfig":
        data = {k: getattr(self, k) for k in self.__dataclass_fields__}
        data.update(changes)
        return IntegratorConfig(**data)


class DenseSolution:
    """Piecewise dense solution; ``sol(t)`` returns the state (or states)."""

    def __init__(self, pieces, t0: float, t1: float, nfev: int) -> None:
        self._pieces = pieces  # list of (lo, hi, OdeSolution)
        self.t0 = float(t0)
        self.t1 = float(t1)
        self.nfev = nfev
        self.ts = np.concatenate([p[2].ts for p in pieces])

    @property
    def y1(self) -> np.ndarray:
        return self(self.t1)

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        scalar = t_arr.ndim == 0
        tt = np.atleast_1d(t_arr)
        lo = min(self.t0, self.t1)
        hi = max(self.t0, self.t1)
        if np.any(tt < lo - 1e-12) or np.any(tt > hi + 1e-12):
            raise ValueError("evaluation point outside the integration interval")
        n = self._pieces[0][2](self._pieces[0][0]).shape[0]
        out = np.empty((n, tt.size))
        for a, b, sol in self._pieces:
            pa, pb = min(a, b), max(a, b)
            mask = (tt >= pa - 1e-12) & (tt <= pb + 1e-12)
            if np.any(mask):
                out[:, mask] = sol(np.clip(tt[mask], pa, pb))
        return out[:, 0] if scalar else out


def integrate_ivp(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    t0: float,
    t1: float,
    state0,
    config: IntegratorConfig | None = None,
    breakpoints: Sequence[float] = (),
) -> DenseSolution:
    """Integrate ``state' = rhs(t, state)`` from ``t0`` to ``t1`` (either direction)."""
    cfg = config or IntegratorConfig()
    y = np.asarray(state0, dtype=float)
    direction = 1.0 if t1 >= t0 else -1.0
    inner = sorted(b for b in breakpoints if min(t0, t1) < b < max(t0, t1))
    if direction < 0:
        inner = inner[::-1]
    nodes = [t0, *inner, t1]
    pieces = []
    nfev = 0
    for a, b in zip(nodes[:-1], nodes[1:]):
        if a == b:
            continue
        res = solve_ivp(
            rhs,
            (a, b),
            y,
            method="DOP853",
            rtol=cfg.rel_tol,
            atol=cfg.abs_tol,
            max_step=cfg.max_step,
            dense_output=True,
        )
        nfev += res.nfev
        if res.status != 0:
            raise StepUnderflow(f"integration stopped at t={res.t[-1]:.6g}: {res.message}", t=float(res.t[-1]))
        if not np.all(np.isfinite(res.y[:, -1])):
            raise StepUnderflow(f"non-finite state reached near t={b:.6g}", t=float(b))
        pieces.append((a, b, res.sol))
        y = res.y[:, -1]
    if not pieces:
        raise ValueError("empty integration interval")
    return DenseSolution(pieces, t0, t1, nfev)
