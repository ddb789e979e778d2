"""Inexact Newton methods with cubic regularization: INCR, AINCR and multi-stage AINCR."""

from .aincr import AincrParams, a_sequence, check_conditions, run_aincr, w_update, y_update
from .baselines import BaselineConfig, cubic_gd_step, nesterov_ag_run, run_baseline, run_cubic_gd
from .data import (
    Dataset,
    SparseSample,
    misclassification_error,
    parse_libsvm,
    split_train_test,
    write_libsvm,
)
from .errors import (
    ConfigurationError,
    ContractViolation,
    FormatError,
    ParseError,
    SubproblemNonconvergence,
)
from .incr import IncrConfig, alpha_convex, alpha_strong, eta_schedule, incr_step, run_incr
from .multistage import StagePlan, run_multistage, stage_length
from .oracle import (
    HessianStrategy,
    LogisticProblem,
    ObjectiveOracle,
    QuadraticProblem,
    SmoothnessInfo,
    make_quadratic_problem,
    sample_size_bound,
    subsampled_hessian,
)
from .subproblem import CubicModel, CubicSolution, solve_exact, solve_gd, solve_lanczos
from .trace import IterateTrace

__version__ = "0.1.0"
