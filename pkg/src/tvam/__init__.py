"""Total-variation restoration with alternating minimisation solvers."""

from .operators import (
    CirculantOp, DenseOp, FrameAnalysis, GradField, KernelSpec, PeriodicTV,
    circ_eigs, div_adjoint, gen_dct, gen_gaussian_matrix, gen_tight_frame, grad,
    make_kernel, unvec, vec,
)
from .prox import ObjectiveParams, group_shrink, kkt_residual, objective_phi, objective_psi
from .linsolve import AssumptionError, NormalSystem, build_normal, opnorm_DWinvDT, solve_normal
from .imaging import DegradationSpec, degrade, load_image, mu_auto, save_image, snr_db
from .solvers import (
    MomentumState, SolverConfig, SolverTrace, admm_solve, am_solve, beta_for_epsilon,
    convergence_bound_check, momentum_next, sam_solve, stop_check,
)

__all__ = [
    "CirculantOp", "DenseOp", "FrameAnalysis", "GradField", "KernelSpec", "PeriodicTV",
    "circ_eigs", "div_adjoint", "gen_dct", "gen_gaussian_matrix", "gen_tight_frame", "grad",
    "make_kernel", "unvec", "vec",
    "ObjectiveParams", "group_shrink", "kkt_residual", "objective_phi", "objective_psi",
    "AssumptionError", "NormalSystem", "build_normal", "opnorm_DWinvDT", "solve_normal",
    "DegradationSpec", "degrade", "load_image", "mu_auto", "save_image", "snr_db",
    "MomentumState", "SolverConfig", "SolverTrace", "admm_solve", "am_solve", "beta_for_epsilon",
    "convergence_bound_check", "momentum_next", "sam_solve", "stop_check",
]

__version__ = "0.1.0"
