"""Starting procedures at regular singular endpoints.

Near a singular endpoint the unknowns are written as a known leading term
plus a correction ``s`` solving one of three model problems

* ``SO2_FIRST``:  ``s'' - s'/u = u S``,            ``s = s' = s'' = 0`` at 0
* ``SO2_SECOND``: ``s'' + s'/u - s/u^2 = u S``,    ``s = s' = 0`` at 0
* ``SO3``:        ``s'' - 2 s/u^2 = u S``,         ``s = s' = s'' = 0`` at 0

with ``u`` the distance from the endpoint. Each has an explicit Volterra
solution operator. On ``(0, eps]`` the source is interpolated by a
polynomial in ``x = u/eps`` and the operator is applied exactly, monomial by
monomial, so ``s/u^2``, ``s/u`` and ``s'/u`` never involve a division by a
small number. The nonlinear problem is solved by Picard iteration.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, Sequence

import numpy as np

from ..errors import NoContraction


class KernelKind(Enum):
    SO2_FIRST = "so2_first"
    SO2_SECOND = "so2_second"
    SO3 = "so3"


def _weights(kind: KernelKind, k: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``u^k -> (a_k u^(k+3), b_k u^(k+2))`` for ``(s, s')``."""
    if kind is KernelKind.SO2_FIRST:
        return 1.0 / ((k + 1) * (k + 3)), 1.0 / (k + 1)
    if kind is KernelKind.SO2_SECOND:
        a = 1.0 / ((k + 2) * (k + 4))
        return a, (k + 3) * a
    a = 1.0 / ((k + 1) * (k + 4))
    return a, (k + 3) * a


@dataclass
class Component:
    """One correction ``s`` and its scaled forms at a set of points ``u``."""

    u: np.ndarray
    s: np.ndarray
    ds: np.ndarray
    s_u: np.ndarray  # s/u
    s_u2: np.ndarray  # s/u^2
    ds_u: np.ndarray  # s'/u


@dataclass(frozen=True)
class SingularKernel:
    """``source(u, comps, params)`` returns ``S`` at the points ``u``.

    ``comps`` holds one :class:`Component` per kernel of the (possibly
    coupled) system, in order.
    """

    kind: KernelKind
    source: Callable[[np.ndarray, Sequence[Component], Any], np.ndarray]


class SeriesStart:
    """Converged start: polynomial corrections valid on ``[0, eps]``."""

    def __init__(self, kinds, coeffs, eps: float, iterations: int, rates: list[float]) -> None:
        self.kinds = list(kinds)
        self.coeffs = [np.asarray(c, float) for c in coeffs]
        self.eps = float(eps)
        self.iterations = iterations
        self.rates = rates

    def components(self, u) -> list[Component]:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        return [_evaluate(kind, c, u, self.eps) for kind, c in zip(self.kinds, self.coeffs)]

    def at_eps(self) -> list[tuple[float, float]]:
        """``(s, s')`` of each component at ``u = eps``."""
        return [(float(c.s[0]), float(c.ds[0])) for c in self.components([self.eps])]


def _evaluate(kind: KernelKind, c: np.ndarray, u: np.ndarray, eps: float) -> Component:
    k = np.arange(c.size, dtype=float)
    a, b = _weights(kind, k)
    x = u / eps
    # powers x^(k+1)
    P = x[:, None] ** (k[None, :] + 1.0)
    s_u2 = eps * P @ (a * c)
    ds_u = eps * P @ (b * c)
    s_u = s_u2 * u
    return Component(u=u, s=s_u * u, ds=ds_u * u, s_u=s_u, s_u2=s_u2, ds_u=ds_u)


def _nodes(n: int) -> np.ndarray:
    j = np.arange(n)
    return 0.5 * (1.0 - np.cos(np.pi * (j + 0.5) / n))


def singular_start(
    kernels: SingularKernel | Sequence[SingularKernel],
    params: Any = None,
    eps: float = 1e-3,
    tol: float = 1e-15,
    n_nodes: int = 10,
    max_iter: int = 60,
    min_eps: float = 1e-8,
    stall_tol: float = 1e-12,
) -> SeriesStart:
    """Picard iteration of the Volterra operators; halves ``eps`` until it contracts."""
    if isinstance(kernels, SingularKernel):
        kernels = [kernels]
    kernels = list(kernels)
    x = _nodes(n_nodes)
    V = x[:, None] ** np.arange(n_nodes)[None, :]
    Vinv = np.linalg.inv(V)
    e = float(eps)
    while e >= min_eps:
        out = _picard(kernels, params, e, x, Vinv, tol, max_iter, stall_tol)
        if out is not None:
            return out
        e *= 0.5
    raise NoContraction(f"Picard iteration did not contract for eps down to {min_eps:g}", eps=e)


def _picard(kernels, params, eps, x, Vinv, tol, max_iter, stall_tol) -> SeriesStart | None:
    u = eps * x
    coeffs = [np.zeros(x.size) for _ in kernels]
    changes: list[float] = []
    for it in range(1, max_iter + 1):
        comps = [_evaluate(kn.kind, c, u, eps) for kn, c in zip(kernels, coeffs)]
        try:
            with np.errstate(all="raise"):
                sources = [np.broadcast_to(np.asarray(kn.source(u, comps, params), float), u.shape) for kn in kernels]
        except FloatingPointError:
            return None
        new = [Vinv @ S for S in sources]
        new_comps = [_evaluate(kn.kind, c, u, eps) for kn, c in zip(kernels, new)]
        change = 0.0
        size = 0.0
        for a, b in zip(comps, new_comps):
            change = max(change, float(np.max(np.abs(a.s_u2 - b.s_u2) + np.abs(a.ds_u - b.ds_u))))
            size = max(size, float(np.max(np.abs(b.s_u2) + np.abs(b.ds_u))))
        coeffs = new
        if not np.isfinite(change):
            return None
        changes.append(change)
        if change <= tol * max(1.0, size):
            rates = [changes[i + 1] / changes[i] for i in range(len(changes) - 1) if changes[i] > 0]
            return SeriesStart([kn.kind for kn in kernels], coeffs, eps, it, rates)
        # geometric decrease is required once the first transient is over;
        # a stall at round-off level counts as converged. The handoff values
        # (s, s') move by about change * eps, which is what stall_tol bounds.
        if it >= 3 and change > 0.5 * changes[-2]:
            if change * eps <= stall_tol:
                rates = [changes[i + 1] / changes[i] for i in range(len(changes) - 1) if changes[i] > 0]
                return SeriesStart([kn.kind for kn in kernels], coeffs, eps, it, rates)
            return None
    return None
