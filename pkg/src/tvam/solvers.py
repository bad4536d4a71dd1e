"""Iterative drivers for the penalised TV problem.

``am_solve``
    Plain alternating minimisation: shrink ``z`` at the current ``x``, then
    solve the normal equations for ``x``.
``sam_solve``
    Symmetric sweep ``x_bar -> z -> x`` with FISTA momentum on ``z``.  For
    ``k > 2`` the ``x_bar`` step is an extrapolation of the two previous
    ``x`` iterates, so each iteration costs a single normal-equation solve.
``admm_solve``
    Scaled ADMM on the constrained form ``z_i = D_i x``, used as a baseline
    and as a high-accuracy reference for the unpenalised objective.

All three stop when ``|x_new - x_old| / max(1, |x_old|) < tol`` or after
``max_iter`` iterations.
"""

from __future__ import annotations

import csv
import dataclasses
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .imaging import snr_db
from .linsolve import NormalSystem, build_normal, solve_normal
from .operators import vec
from .prox import ObjectiveParams, group_shrink, objective_phi, objective_psi

__all__ = [
    "SolverConfig", "TraceRecord", "SolverTrace", "SolveResult", "MomentumState",
    "momentum_next", "stop_check", "am_solve", "sam_solve", "admm_solve",
    "beta_for_epsilon", "q_norm_sq", "convergence_bound", "convergence_bound_check",
    "SOLVERS",
]

TRACE_HEADER = ("iter", "psi", "phi", "snr_db", "rel_change", "time_s")


@dataclass(frozen=True)
class SolverConfig:
    """Iteration controls; ``tol = 0`` disables the stopping rule."""

    tol: float = 1e-3
    max_iter: int = 1000
    monotone: bool = False
    record_trace: bool = True
    rho: Optional[float] = None  # ADMM penalty, defaults to beta

    def __post_init__(self):
        if not 0 <= self.tol < 1:
            raise ValueError(f"tol must lie in [0, 1), got {self.tol}")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.rho is not None and not self.rho > 0:
            raise ValueError("rho must be positive")


@dataclass(frozen=True)
class TraceRecord:
    k: int
    psi: float
    phi: float
    snr_db: Optional[float]
    rel_change: float
    time_s: float


@dataclass
class SolverTrace:
    records: list = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(TRACE_HEADER)
            for r in self.records:
                writer.writerow([
                    r.k, repr(r.psi), repr(r.phi),
                    "" if r.snr_db is None else repr(r.snr_db),
                    repr(r.rel_change), f"{r.time_s:.6f}",
                ])


@dataclass
class SolveResult:
    x: np.ndarray
    z: np.ndarray
    trace: SolverTrace
    iterations: int
    converged: bool
    solves: list  # normal-equation solves performed in each iteration
    system: NormalSystem

    @property
    def n_solves(self):
        return sum(self.solves)


@dataclass(frozen=True)
class MomentumState:
    """FISTA weight ``t_k``; ``tau`` is the extrapolation weight ``(t_{k-1}-1)/t_k``."""

    t: float = 1.0
    t_prev: Optional[float] = None
    k: int = 1

    @property
    def tau(self):
        return 0.0 if self.t_prev is None else (self.t_prev - 1.0) / self.t


def momentum_next(state: MomentumState) -> MomentumState:
    t_next = (1.0 + math.sqrt(1.0 + 4.0 * state.t * state.t)) / 2.0
    return MomentumState(t=t_next, t_prev=state.t, k=state.k + 1)


def stop_check(x_new, x_old, tol):
    return relative_change(x_new, x_old) < tol


def relative_change(x_new, x_old):
    return float(np.linalg.norm(x_new - x_old) / max(1.0, np.linalg.norm(x_old)))


class _Recorder:
    def __init__(self, params, config, x_true):
        self.params = params
        self.config = config
        if x_true is not None:
            x_true = np.asarray(x_true, dtype=float)
            x_true = vec(x_true) if x_true.ndim > 1 else x_true
        self.x_true = x_true
        self.trace = SolverTrace()
        self.t0 = time.perf_counter()
        self.best = None

    def __call__(self, k, x, z, rel):
        if not (self.config.record_trace or self.config.monotone):
            return
        psi = objective_psi(x, z, self.params)
        if self.config.monotone and (self.best is None or psi < self.best[0]):
            self.best = (psi, x.copy(), z.copy())
        if self.config.record_trace:
            phi = objective_phi(x, self.params)
            snr = None if self.x_true is None else snr_db(x, self.x_true)
            self.trace.records.append(
                TraceRecord(k, psi, phi, snr, rel, time.perf_counter() - self.t0)
            )

    def final(self, x, z):
        if self.config.monotone and self.best is not None:
            return self.best[1], self.best[2]
        return x, z


def am_solve(params: ObjectiveParams, config: SolverConfig, *, x0=None, x_true=None,
             system: Optional[NormalSystem] = None, callback: Optional[Callable] = None):
    """Alternating minimisation of the penalised objective, started at ``x0``."""
    system = system or build_normal(params)
    D, thresh = params.D, 1.0 / params.beta
    x = params.initial_x() if x0 is None else np.array(x0, dtype=float)
    z = D.apply(x)
    rec = _Recorder(params, config, x_true)
    solves, converged = [], False
    for k in range(1, config.max_iter + 1):
        z = group_shrink(D.apply(x), thresh)
        x_new = solve_normal(system, z)
        solves.append(1)
        rel = relative_change(x_new, x)
        x = x_new
        rec(k, x, z, rel)
        if callback is not None:
            callback(k, x, z)
        if rel < config.tol:
            converged = True
            break
    x, z = rec.final(x, z)
    return SolveResult(x, z, rec.trace, len(solves), converged, solves, system)


def sam_solve(params: ObjectiveParams, config: SolverConfig, *, x0=None, z0=None,
              x_true=None, system: Optional[NormalSystem] = None,
              callback: Optional[Callable] = None, shortcut=True):
    """Symmetric accelerated alternating minimisation.

    ``z0`` defaults to ``D x0``.  With ``shortcut=False`` the ``x_bar`` step is
    always an explicit normal-equation solve at the extrapolated ``z_hat``; the
    iterates agree with the shortcut version up to round-off.  ``callback``
    receives ``(k, x, z, zhat=..., xbar=...)`` where ``zhat`` is the point the
    ``k``-th sweep started from.
    """
    system = system or build_normal(params)
    D, thresh = params.D, 1.0 / params.beta
    x_start = params.initial_x() if x0 is None else np.array(x0, dtype=float)
    z_prev = D.apply(x_start) if z0 is None else np.array(z0, dtype=float)
    zhat = z_prev.copy()
    mom = MomentumState()
    rec = _Recorder(params, config, x_true)
    solves, converged = [], False
    x_last, x_before, tau_prev = x_start, None, 0.0
    x = x_start
    z = z_prev
    for k in range(1, config.max_iter + 1):
        if k <= 2 or not shortcut:
            xbar = solve_normal(system, zhat)
            n = 2
        else:
            xbar = x_last + tau_prev * (x_last - x_before)
            n = 1
        z = group_shrink(D.apply(xbar), thresh)
        x = solve_normal(system, z)
        solves.append(n)
        if callback is not None:
            callback(k, x, z, zhat=zhat, xbar=xbar)

        mom = momentum_next(mom)
        tau = mom.tau
        zhat = z + tau * (z - z_prev)
        rel = relative_change(x, x_last)
        rec(k, x, z, rel)

        x_before, x_last, z_prev, tau_prev = x_last, x, z, tau
        if rel < config.tol:
            converged = True
            break
    x, z = rec.final(x, z)
    return SolveResult(x, z, rec.trace, len(solves), converged, solves, system)


def admm_solve(params: ObjectiveParams, config: SolverConfig, *, x0=None, x_true=None,
               system: Optional[NormalSystem] = None, callback: Optional[Callable] = None):
    """Scaled ADMM for ``min sum |z_i| + mu/2 |Kx - f|^2`` subject to ``z = Dx``.

    The penalty is ``config.rho`` (``params.beta`` when unset); ``system``, if
    given, must have been built with ``beta = rho``.  The trace reports the
    penalised objective with ``params.beta`` for comparability.
    """
    rho = config.rho or params.beta
    if system is None:
        system = build_normal(dataclasses.replace(params, beta=rho))
    D, thresh = params.D, 1.0 / rho
    x = params.initial_x() if x0 is None else np.array(x0, dtype=float)
    dx = D.apply(x)
    lam = np.zeros_like(dx)
    z = dx
    rec = _Recorder(params, config, x_true)
    solves, converged = [], False
    for k in range(1, config.max_iter + 1):
        z = group_shrink(dx + lam, thresh)
        x_new = solve_normal(system, z - lam)
        solves.append(1)
        dx = D.apply(x_new)
        lam += dx - z
        rel = relative_change(x_new, x)
        x = x_new
        rec(k, x, z, rel)
        if callback is not None:
            callback(k, x, z, lam=lam)
        if rel < config.tol:
            converged = True
            break
    x, z = rec.final(x, z)
    return SolveResult(x, z, rec.trace, len(solves), converged, solves, system)


SOLVERS = {"am": am_solve, "sam": sam_solve, "admm": admm_solve}


def beta_for_epsilon(C, eps, z_gap=None):
    """Penalty ``32 C / eps^2`` and, given ``|z0 - z*_beta|``, the iteration bound.

    The bound is ``max(16 sqrt(C) |z0 - z*_beta| / eps^1.5 - 1, 1)``; it is
    ``None`` when ``z_gap`` is not supplied.
    """
    if not (C > 0 and eps > 0):
        raise ValueError("C and eps must be positive")
    beta = 32.0 * C / eps ** 2
    if z_gap is None:
        return beta, None
    return beta, max(16.0 * math.sqrt(C) * z_gap / eps ** 1.5 - 1.0, 1.0)


def q_norm_sq(v, system: NormalSystem):
    """``|v|^2 + <D^T v, W^{-1} D^T v>``, the squared norm for ``I + D W^{-1} D^T``."""
    dtv = system.params.D.adjoint(v)
    return float(np.sum(v * v) + dtv @ system.solve(dtv))


def convergence_bound(ks, z0, zstar, system: NormalSystem):
    """Right-hand side ``2 beta |z0 - z*|_Q^2 / (k + 1)^2`` at each ``k``."""
    ks = np.asarray(ks, dtype=float)
    beta = system.params.beta
    return 2.0 * beta * q_norm_sq(z0 - zstar, system) / (ks + 1.0) ** 2


def convergence_bound_check(trace: SolverTrace, z0, zstar, psi_star, system: NormalSystem):
    """True iff ``psi_k - psi_star`` stays below :func:`convergence_bound` at every record."""
    ks = trace.column("k")
    gap = trace.column("psi") - psi_star
    return bool(np.all(gap <= convergence_bound(ks, z0, zstar, system)))
