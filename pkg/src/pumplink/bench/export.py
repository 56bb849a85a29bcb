"""CSV and JSON artifact writers for benchmark results.

All writers are byte-stable: the same inputs always produce the same file
contents, so tests can assert on exact bytes and repeated exports are
idempotent. Every numeric column has an explicit format; nothing depends
on ``repr`` of floats.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Sequence

from pumplink.bench.accuracy import AccuracyRow, AccuracySeries
from pumplink.bench.metrics import MetricsSummary

METRICS_CSV_HEADER = "users,total,avg_ms,max_ms,min_ms,throughput,elapsed_s"
ACCURACY_CSV_HEADER = "setting,experiment,delivered_ml,err_vol_pct,avg_rate_ml_h,err_rate_pct"
SERIES_CSV_HEADER = "t_s,volume_ml,rate_ml_h"


def _write_text(path: str | Path, text: str) -> Path:
    """Write text, wrapping IO failures so the message names the file."""
    target = Path(path)
    try:
        target.write_text(text, encoding="utf-8", newline="\n")
    except OSError as exc:
        raise OSError(f"{target}: {exc}") from exc
    return target


def render_metrics_csv(rows: Iterable[tuple[int, MetricsSummary]]) -> str:
    """One line per load run: user count plus its metric summary."""
    lines = [METRICS_CSV_HEADER]
    for n_users, m in rows:
        lines.append(
            f"{n_users},{m.total_requests},{m.avg_rt_ms:.2f},{m.max_rt_ms:.2f},"
            f"{m.min_rt_ms:.2f},{m.throughput_rps:.2f},{m.elapsed_s:.2f}"
        )
    return "\n".join(lines) + "\n"


def write_metrics_csv(path: str | Path, rows: Iterable[tuple[int, MetricsSummary]]) -> Path:
    return _write_text(path, render_metrics_csv(rows))


def render_accuracy_csv(rows: Sequence[AccuracyRow]) -> str:
    """Accuracy summary table: one line per (setting, experiment) run.

    Delivered volume and average rate are stored already rounded to two
    decimals, and the error columns are computed from those rounded
    values, so a reader can recompute each error column from the other
    columns of its own line and agree to 0.01.
    """
    lines = [ACCURACY_CSV_HEADER]
    for r in rows:
        lines.append(
            f"{r.setting_id},{r.experiment_no},{r.delivered_volume_ml:.2f},"
            f"{r.pct_error_volume},{r.avg_rate_ml_h:.2f},{r.pct_error_rate}"
        )
    return "\n".join(lines) + "\n"


def write_accuracy_csv(path: str | Path, rows: Sequence[AccuracyRow]) -> Path:
    return _write_text(path, render_accuracy_csv(rows))


def render_series_csv(series: AccuracySeries) -> str:
    """Time series of one run: cumulative volume and windowed rate."""
    lines = [SERIES_CSV_HEADER]
    for t_s, volume_ml, rate_ml_h in series.points:
        lines.append(f"{t_s:.3f},{volume_ml:.2f},{rate_ml_h:.4f}")
    return "\n".join(lines) + "\n"


def write_series_csv(path: str | Path, series: AccuracySeries) -> Path:
    return _write_text(path, render_series_csv(series))


def render_series_json(series_list: Sequence[AccuracySeries]) -> str:
    """Flat record list (vega-lite ``data.values`` compatible, 2-space indent)."""
    records = [
        {
            "setting": s.setting_id,
            "experiment": s.experiment_no,
            "t_s": round(t_s, 3),
            "volume_ml": round(volume_ml, 2),
            "rate_ml_h": round(rate_ml_h, 4),
        }
        for s in series_list
        for t_s, volume_ml, rate_ml_h in s.points
    ]
    return json.dumps(records, indent=2, sort_keys=True) + "\n"


def write_series_json(path: str | Path, series_list: Sequence[AccuracySeries]) -> Path:
    return _write_text(path, render_series_json(series_list))


def export_accuracy(
    out_dir: str | Path,
    rows: Sequence[AccuracyRow],
    series: Sequence[AccuracySeries],
) -> list[Path]:
    """Write the summary CSV, one series CSV per run, and the JSON bundle.

    Returns every path written, summary first, so callers can report them.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [write_accuracy_csv(out / "accuracy.csv", rows)]
    for s in series:
        name = f"series_setting{s.setting_id}_run{s.experiment_no}.csv"
        written.append(write_series_csv(out / name, s))
    written.append(write_series_json(out / "series.json", series))
    return written


def export_load(
    out_dir: str | Path, rows: Sequence[tuple[int, MetricsSummary]]
) -> list[Path]:
    """Write the load-test metrics table."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return [write_metrics_csv(out / "metrics.csv", rows)]
