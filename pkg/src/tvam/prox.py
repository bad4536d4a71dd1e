"""Group shrinkage, the TV objectives and the optimality residual."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

__all__ = [
    "ObjectiveParams", "group_norms", "group_shrink", "objective_phi",
    "objective_psi", "kkt_residual",
]


@dataclass(frozen=True)
class ObjectiveParams:
    """Data of ``min_x sum_i |D_i x| + mu/2 |Kx - f|^2`` and its penalty split.

    ``K`` is any :class:`~tvam.operators.LinearMap`, ``D`` a ``PeriodicTV`` or
    ``FrameAnalysis`` and ``f`` the observation vector.
    """

    mu: float
    beta: float
    K: Any
    D: Any
    f: np.ndarray

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        f = np.asarray(self.f, dtype=float).reshape(-1)
        object.__setattr__(self, "f", f)
        m, n = self.K.shape
        if f.size != m:
            raise ValueError(f"observation has {f.size} entries, K has {m} rows")
        if self.D.n != n:
            raise ValueError(f"D acts on {self.D.n} unknowns, K on {n}")

    @property
    def n(self):
        return self.K.shape[1]

    def initial_x(self):
        """Starting point: ``f`` itself for square ``K``, else ``K^T f``."""
        m, n = self.K.shape
        return self.f.copy() if m == n else self.K.adjoint(self.f)

    def _check_x(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise ValueError(f"x has shape {x.shape}, expected ({self.n},)")
        return x

    def _check_z(self, z):
        z = np.asarray(z, dtype=float)
        expected = (self.D.group_dim, self.D.n_groups)
        if z.shape != expected:
            raise ValueError(f"z has shape {z.shape}, expected {expected}")
        return z


def group_norms(g):
    g = np.asarray(g)
    if g.shape[0] == 1:
        return np.abs(g[0])
    return np.sqrt(np.sum(g * g, axis=0))


def group_shrink(g, threshold):
    """Closed-form minimiser of ``|z_i| + |z_i - g_i|^2 / (2 threshold)`` per group.

    ``g`` has shape ``(d, n_groups)``.  Groups with norm at or below the
    threshold go to zero (``0 * (0/0) = 0``); for ``d = 1`` this is scalar soft
    thresholding.
    """
    g = np.asarray(g, dtype=float)
    norms = group_norms(g)
    scale = np.zeros_like(norms)
    keep = norms > threshold
    scale[keep] = 1.0 - threshold / norms[keep]
    return g * scale


def objective_phi(x, params: ObjectiveParams):
    x = params._check_x(x)
    resid = params.K.apply(x) - params.f
    return float(group_norms(params.D.apply(x)).sum() + 0.5 * params.mu * resid @ resid)


def objective_psi(x, z, params: ObjectiveParams):
    x = params._check_x(x)
    z = params._check_z(z)
    gap = z - params.D.apply(x)
    resid = params.K.apply(x) - params.f
    return float(
        group_norms(z).sum()
        + 0.5 * params.beta * np.sum(gap * gap)
        + 0.5 * params.mu * resid @ resid
    )


def kkt_residual(x, z, zhat, params: ObjectiveParams, normal):
    """Violation of the optimality conditions of one accelerated step.

    The pair ``(x, z)`` is what the symmetric sweep should produce from the
    extrapolated point ``zhat``: ``W x = D^T z + b`` and
    ``0 in d|z| + beta * r`` with ``r = (z - Dx) + D W^{-1} D^T (z - zhat)``.
    Returns the larger of the relative primal residual and the worst per-group
    dual residual; the dual residual of a zero group is how far ``beta |r_i|``
    exceeds the unit ball.
    """
    x = params._check_x(x)
    z = params._check_z(z)
    zhat = params._check_z(zhat)
    D = params.D
    b = normal.b
    primal = np.linalg.norm(normal.apply_W(x) - D.adjoint(z) - b) / (1 + np.linalg.norm(b))

    r = (z - D.apply(x)) + D.apply(normal.solve(D.adjoint(z - zhat)))
    beta = params.beta
    zn = group_norms(z)
    nz = zn > 0
    dual = np.zeros_like(zn)
    if nz.any():
        dual[nz] = group_norms(z[:, nz] / zn[nz] + beta * r[:, nz])
    if (~nz).any():
        dual[~nz] = np.maximum(beta * group_norms(r[:, ~nz]) - 1.0, 0.0)
    return float(max(primal, dual.max(initial=0.0)))
