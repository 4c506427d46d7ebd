"""Experiment orchestration: config files, sweeps, reports, comparison tables, CLI."""
from .config import ConfigError, ExperimentConfig, load_config, parse_config, parse_seeds
from .experiment import (
    Aggregate,
    ComparisonRow,
    ComparisonTable,
    Report,
    Row,
    aggregate_rows,
    compare,
    format_table,
    lower_median,
    run_experiment,
    train_qlearning,
)
from .io import CSV_HEADER, ReportIOError, emit, load_report, parse_report

__all__ = [
    "ConfigError", "ExperimentConfig", "load_config", "parse_config", "parse_seeds",
    "Aggregate", "ComparisonRow", "ComparisonTable", "Report", "Row", "aggregate_rows",
    "compare", "format_table", "lower_median", "run_experiment", "train_qlearning",
    "CSV_HEADER", "ReportIOError", "emit", "load_report", "parse_report",
]
