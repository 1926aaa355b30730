"""Sparse quantile regression toolkit.

l0-penalized and l0-constrained quantile regression through an exact
mixed-integer solver (in-house simplex plus branch-and-bound) and a
scalable smoothed first-order algorithm, an l1-penalized comparator,
validation-based tuning, split conformal prediction intervals, and a
Monte Carlo study harness.
"""

from .conformal import (ConformalModel, CoverageReport, PredictionInterval,
                        empirical_quantile, evaluate_coverage, fit_conformal,
                        predict_interval)
from .core import (Dataset, FitResult, SmoothingParams, c_tau, check_loss,
                   check_tau, empirical_risk, lipschitz_h, smoothed_gradient,
                   smoothed_risk, support_of)
from .dataio import DataError, read_csv, write_csv
from .features import (SCHOOLING_EDGES, ColumnRule, FeatureSpec, bspline_basis,
                       bspline_expand, build_features, discretize)
from .firstorder import (ProxConfig, fo_cqr, fo_solve, h_map, l0_box_threshold,
                         multi_start_fo)
from .mio import (MilpModel, build_milp, solve_bnb, solve_cqr_exact,
                  solve_enumeration, write_lp_file)
from .qreg import l1_pqr_fit, lambda_bc, qr_fit
from .simplex import LinearProgram, LpSolution, SolverError, solve_lp
from .simulation import (DgpConfig, MethodConfig, MetricRow, StudyReport,
                         compute_metrics, dgp_sample, run_study, true_theta)
from .tuning import TuningGrid, default_grid, lambda_from_c, tune

__version__ = "0.1.0"

__all__ = [
    "ConformalModel", "CoverageReport", "PredictionInterval",
    "empirical_quantile", "evaluate_coverage", "fit_conformal",
    "predict_interval",
    "Dataset", "FitResult", "SmoothingParams", "c_tau", "check_loss",
    "check_tau", "empirical_risk", "lipschitz_h", "smoothed_gradient",
    "smoothed_risk", "support_of",
    "DataError", "read_csv", "write_csv",
    "SCHOOLING_EDGES", "ColumnRule", "FeatureSpec", "bspline_basis",
    "bspline_expand", "build_features", "discretize",
    "ProxConfig", "fo_cqr", "fo_solve", "h_map", "l0_box_threshold",
    "multi_start_fo",
    "MilpModel", "build_milp", "solve_bnb", "solve_cqr_exact",
    "solve_enumeration", "write_lp_file",
    "l1_pqr_fit", "lambda_bc", "qr_fit",
    "LinearProgram", "LpSolution", "SolverError", "solve_lp",
    "DgpConfig", "MethodConfig", "MetricRow", "StudyReport",
    "compute_metrics", "dgp_sample", "run_study", "true_theta",
    "TuningGrid", "default_grid", "lambda_from_c", "tune",
    "__version__",
]
