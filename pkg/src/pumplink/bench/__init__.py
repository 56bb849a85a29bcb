"""Evaluation harness: concurrent load generation with throughput/latency
metrics, and the seeded infusion-accuracy experiments with error tables
and plot-ready series."""

from pumplink.bench.metrics import (
    MetricsSummary,
    RequestSample,
    compute_metrics,
    mean_pct,
    percent_error,
)
from pumplink.bench.load import LoadProfile, LoadResult, run_load_test
from pumplink.bench.accuracy import (
    CALIBRATED_NOISE,
    DEFAULT_SEEDS,
    SETTINGS,
    AccuracyRow,
    AccuracySeries,
    run_accuracy_experiment,
    run_single,
)
from pumplink.bench.export import (
    export_accuracy,
    export_load,
    write_accuracy_csv,
    write_metrics_csv,
    write_series_csv,
    write_series_json,
)

__all__ = [
    "AccuracyRow",
    "AccuracySeries",
    "CALIBRATED_NOISE",
    "DEFAULT_SEEDS",
    "LoadProfile",
    "LoadResult",
    "MetricsSummary",
    "RequestSample",
    "SETTINGS",
    "compute_metrics",
    "export_accuracy",
    "export_load",
    "mean_pct",
    "percent_error",
    "run_accuracy_experiment",
    "run_load_test",
    "run_single",
    "write_accuracy_csv",
    "write_metrics_csv",
    "write_series_csv",
    "write_series_json",
]
