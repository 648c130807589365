"""Sparse linear programs for sign-constrained column estimation."""

from .admm import (AdmmResult, AdmmState, SolveReport, admm_solve, main_system_matrix,
                   main_system_rhs, solve_main_system, threshold)
from .column import ColumnSolver, ColumnStats, SolverConfig
from .factor import CovarianceFactor
from .problems import (ColumnInfo, LpProblem, build_column_lp_dense, build_column_lp_tall,
                       build_feasibility_lp, sign_matrix, warm_feasibility_floor)

__all__ = [
    "AdmmResult", "AdmmState", "SolveReport", "admm_solve", "main_system_matrix",
    "main_system_rhs", "solve_main_system", "threshold", "ColumnSolver", "ColumnStats", "SolverConfig", "CovarianceFactor", "ColumnInfo",
    "LpProblem", "build_column_lp_dense", "build_column_lp_tall", "build_feasibility_lp",
    "sign_matrix", "warm_feasibility_floor",
]
