"""RMSE evaluation, experiment drivers, reference comparison, artifacts."""

from .artifacts import (
    cov_ellipse,
    emit_artifacts,
    format_error_records,
    format_rmse_table,
    parse_error_records,
    parse_rmse_table,
    plot_case,
)
from .experiments import (
    ExperimentResult,
    PlotCase,
    SceneGroup,
    group_segments,
    run_experiment,
    run_experiment_1,
    run_experiment_2,
    run_experiment_3,
)
from .metrics import (
    DEFAULT_HORIZONS_S,
    ErrorRecord,
    RmseTable,
    error_records,
    horizon_step,
    merge_tables,
    rmse_by_horizon,
    rmse_from_records,
)
from .reference import DISCLAIMER, REFERENCE_RESULTS, UNITS_NOTE, reference_compare, reference_table

__all__ = [
    "RmseTable",
    "ErrorRecord",
    "rmse_by_horizon",
    "rmse_from_records",
    "error_records",
    "merge_tables",
    "horizon_step",
    "DEFAULT_HORIZONS_S",
    "run_experiment",
    "run_experiment_1",
    "run_experiment_2",
    "run_experiment_3",
    "ExperimentResult",
    "SceneGroup",
    "PlotCase",
    "group_segments",
    "REFERENCE_RESULTS",
    "DISCLAIMER",
    "UNITS_NOTE",
    "reference_compare",
    "reference_table",
    "emit_artifacts",
    "plot_case",
    "cov_ellipse",
    "format_rmse_table",
    "parse_rmse_table",
    "format_error_records",
    "parse_error_records",
]
