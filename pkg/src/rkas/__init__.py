"""Randomized Kaczmarz with adaptive stepsizes for inconsistent linear systems."""

__version__ = "0.1.0"

from .linalg import CsrMatrix, DenseMatrix, as_matrix, gram_column, gram_matrix, matvec, row_sq_norms
from .oracle import GroundTruth, analyze, nullspace_residual, rse
from .problems import LinearSystem, ProblemSpec, generate, make_rhs, read_matrix_market
from .sampling import DiscreteSampler
from .solvers import (
    ConvergenceRecord,
    SolverConfig,
    SolverState,
    init_state,
    predict_iters_rk,
    predict_iters_rkas,
    rek_step,
    rk_error_bound,
    rk_step,
    rkas_contraction_factor,
    rkas_step,
    run,
)

__all__ = [
    "ConvergenceRecord",
    "CsrMatrix",
    "DenseMatrix",
    "DiscreteSampler",
    "GroundTruth",
    "LinearSystem",
    "ProblemSpec",
    "SolverConfig",
    "SolverState",
    "analyze",
    "as_matrix",
    "generate",
    "gram_column",
    "gram_matrix",
    "init_state",
    "make_rhs",
    "matvec",
    "nullspace_residual",
    "predict_iters_rk",
    "predict_iters_rkas",
    "read_matrix_market",
    "rek_step",
    "rk_error_bound",
    "rk_step",
    "rkas_contraction_factor",
    "rkas_step",
    "row_sq_norms",
    "rse",
    "run",
]
