"""Tests for a common change in means of many short panels.

The CUSUM statistic needs a variance estimate; the ratio statistic does
not. Both are calibrated against simulated limiting laws whose covariance
is estimated from the data with a lag window.
"""

from .changepoint import ChangePointEstimate, ResidualMatrix, compute_residuals, estimate_changepoint
from .covariance import (
    CorrelationStructure,
    KernelSpec,
    LimitCovariance,
    build_lambda,
    cumulative_autocorrelation,
    empirical_autocorrelation,
    estimate_covariance_pipeline,
    fit_covariance,
    kernel_value,
    shifted_cumulative_correlation,
    sigma2_hat,
)
from .datagen import AR1, GARCH11, IID, Gaussian, ScenarioConfig, StudentT, generate_errors, generate_panel
from .errors import (
    DegenerateDataError,
    EstimationError,
    InputError,
    InvalidDataError,
    PanelCPError,
    ParameterError,
    UnsupportedHorizonError,
)
from .harness import ExperimentGrid, RejectionTable, emit_table, run_experiment
from .limit import (
    NullDistribution,
    StatisticKind,
    TestResult,
    build_null,
    cusum_limit_functional,
    decide,
    ratio_limit_functional,
    sample_mvn,
)
from .panel import PanelDataset, PartialMeans, cusum_statistic, partial_sum_process, ratio_statistic
from .report import read_panel_csv, run_test

__version__ = "0.1.0"
