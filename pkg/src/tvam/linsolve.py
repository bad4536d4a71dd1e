"""Solvers for the x-subproblem ``(D^T D + (mu/beta) K^T K) x = D^T z + (mu/beta) K^T f``.

Three routes are available:

``spectral``
    ``K`` circulant and ``D`` periodic TV; ``W`` is diagonalised by the 2-D DFT
    and the solve is exact up to transform round-off.
``woodbury``
    ``D^T D = I`` and ``K`` dense with fewer rows than columns; uses
    ``W^{-1} r = r - c K^T (I + c K K^T)^{-1} K r`` with a cached Cholesky
    factor of the ``m x m`` matrix.
``cg``
    Unpreconditioned conjugate gradients on ``W``, the fallback for any pair.
"""

from __future__ import annotations

import numpy as np
import scipy.fft
import scipy.linalg

from .operators import CirculantOp, DenseOp, PeriodicTV, _from_grid, _to_grid
from .prox import ObjectiveParams

__all__ = [
    "AssumptionError", "CGConvergenceError", "NormalSystem", "build_normal",
    "solve_normal", "opnorm_DWinvDT",
]

STRATEGIES = ("spectral", "woodbury", "cg")
_DENSE_CHECK_LIMIT = 1024


class AssumptionError(ValueError):
    """``W`` is singular: the null spaces of ``K`` and ``D`` intersect."""


class CGConvergenceError(RuntimeError):
    def __init__(self, residual, iterations):
        super().__init__(
            f"CG did not converge in {iterations} iterations (relative residual {residual:.3e})"
        )
        self.residual = residual
        self.iterations = iterations


class NormalSystem:
    """``W = D^T D + c K^T K`` with ``c = mu/beta``, bound to one solve route.

    Immutable after construction; ``solve`` and ``apply_W`` are re-entrant.
    """

    def __init__(self, params: ObjectiveParams, strategy, cg_tol=1e-10, cg_maxiter=None):
        self.params = params
        self.strategy = strategy
        self.c = params.mu / params.beta
        self.b = self.c * params.K.adjoint(params.f)
        self.b.setflags(write=False)
        self.n = params.n
        self.cg_tol = cg_tol
        self.cg_maxiter = cg_maxiter or 10 * self.n
        self.eigs_W = None
        self.gram_factor = None

        if strategy == "spectral":
            K, D = params.K, params.D
            self.dims, self.channels = D.dims, D.channels
            self.eigs_W = D.gram_eigs() + self.c * K.gram_eigs()
            lo, hi = self.eigs_W.min(), self.eigs_W.max()
            if lo <= 1e-14 * hi:
                raise AssumptionError(
                    "W is singular (min eigenvalue %.3e): N(K) and N(D) intersect" % lo
                )
            self.eigs_W.setflags(write=False)
            self._inv_reigs = 1.0 / self.eigs_W[:, : self.dims[1] // 2 + 1]
        elif strategy == "woodbury":
            k = params.K.entries
            gram = np.eye(k.shape[0]) + self.c * (k @ k.T)
            self.gram_factor = scipy.linalg.cho_factor(gram)
        elif strategy == "cg":
            if self.n <= _DENSE_CHECK_LIMIT:
                w = self.dense_W()
                ev = np.linalg.eigvalsh(w)
                if ev[0] <= 1e-14 * max(ev[-1], 1e-300):
                    raise AssumptionError(
                        "W is singular (min eigenvalue %.3e): N(K) and N(D) intersect" % ev[0]
                    )
        else:
            raise ValueError(f"unknown strategy {strategy!r}")

    def apply_W(self, x):
        D, K = self.params.D, self.params.K
        return D.adjoint(D.apply(x)) + self.c * K.adjoint(K.apply(x))

    def dense_W(self):
        eye = np.eye(self.n)
        return np.column_stack([self.apply_W(eye[:, j]) for j in range(self.n)])

    def rhs(self, z):
        return self.params.D.adjoint(z) + self.b

    def solve(self, r):
        """Return ``W^{-1} r``."""
        r = np.asarray(r, dtype=float)
        if self.strategy == "spectral":
            h, w = self.dims
            g = _to_grid(r, h, w, self.channels)
            out = scipy.fft.irfft2(scipy.fft.rfft2(g) * self._inv_reigs, s=(h, w))
            return _from_grid(out)
        if self.strategy == "woodbury":
            k = self.params.K.entries
            t = scipy.linalg.cho_solve(self.gram_factor, k @ r)
            return r - self.c * (k.T @ t)
        return self._cg(r)

    def _cg(self, r):
        x = np.zeros_like(r)
        res = r.copy()
        p = res.copy()
        rr = res @ res
        bound = (self.cg_tol * np.linalg.norm(r)) ** 2
        if rr <= bound:
            return x
        for _ in range(self.cg_maxiter):
            wp = self.apply_W(p)
            alpha = rr / (p @ wp)
            x += alpha * p
            res -= alpha * wp
            rr_new = res @ res
            if rr_new <= bound:
                return x
            p = res + (rr_new / rr) * p
            rr = rr_new
        raise CGConvergenceError(np.sqrt(rr) / np.linalg.norm(r), self.cg_maxiter)


def _pick_strategy(params):
    K, D = params.K, params.D
    if isinstance(K, CirculantOp) and isinstance(D, PeriodicTV):
        if K.dims == D.dims and K.channels == D.channels:
            return "spectral"
    if getattr(D, "is_tight", False) and isinstance(K, DenseOp) and K.shape[0] < K.shape[1]:
        return "woodbury"
    return "cg"


def build_normal(params: ObjectiveParams, strategy=None, **cg_options):
    """Build the x-subproblem solver, routing spectral > woodbury > cg unless overridden."""
    if strategy is None:
        strategy = _pick_strategy(params)
    elif strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    return NormalSystem(params, strategy, **cg_options)


def solve_normal(system: NormalSystem, z):
    """Solve ``W x = D^T z + b``."""
    return system.solve(system.rhs(z))


def opnorm_DWinvDT(system: NormalSystem, D=None, iters=200, tol=1e-10, seed=0):
    """Power-iteration estimate of the spectral norm of ``D W^{-1} D^T``."""
    D = D if D is not None else system.params.D
    v = np.random.default_rng(seed).standard_normal((D.group_dim, D.n_groups))
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iters):
        w = D.apply(system.solve(D.adjoint(v)))
        new = float(np.sum(v * w))
        nw = np.linalg.norm(w)
        if nw == 0:
            return 0.0
        v = w / nw
        if abs(new - est) <= tol * abs(new):
            est = new
            break
        est = new
    return est
