"""Benchmark CLI: concurrent load runs and infusion-accuracy experiments.

Both subcommands write CSV artifacts and then re-check the relevant
result invariants, exiting nonzero if any fails, so a scripted pipeline
can trust a zero exit to mean "artifacts written and sane".
"""

from __future__ import annotations

import argparse
import csv
import sys
from decimal import Decimal
from pathlib import Path

from pumplink.bench.accuracy import (
    CALIBRATED_NOISE,
    DEFAULT_SEEDS,
    SETTINGS,
    run_accuracy_experiment,
)
from pumplink.bench.export import export_accuracy, export_load
from pumplink.bench.load import LoadProfile, run_load_test
from pumplink.bench.metrics import compute_metrics, percent_error

NOISE_FREE_VOLUME_ERR_PCT = Decimal("0.1")
NOISE_FREE_RATE_ERR_PCT = Decimal("0.5")
NOISY_MEAN_VOLUME_ERR_PCT = Decimal("3.0")
NOISY_MAX_RATE_ERR_PCT = Decimal("2.5")
RECOMPUTE_TOLERANCE = Decimal("0.01")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bench", description="Infusion service benchmarks")
    sub = parser.add_subparsers(dest="command", required=True)

    load = sub.add_parser("load", help="closed-loop concurrent load run")
    load.add_argument("--users", type=int, required=True, help="concurrent simulated users")
    load.add_argument("--duration", type=float, required=True, help="run length in seconds")
    load.add_argument("--server", required=True, help="base URL of a running server")
    load.add_argument("--out", required=True, help="directory for metrics.csv")
    load.add_argument("--think", type=float, default=1.0, help="think time between requests")

    acc = sub.add_parser("accuracy", help="seeded infusion accuracy experiments")
    acc.add_argument("--setting", choices=("1", "2", "all"), default="all")
    acc.add_argument("--seeds", help="file with one integer seed per line")
    acc.add_argument("--noise", choices=("off", "default"), default="default")
    acc.add_argument("--out", required=True, help="directory for accuracy.csv and series files")
    return parser


def _read_seeds(path: str) -> tuple[int, ...]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"{path}: {exc}") from exc
    seeds = tuple(int(line) for line in text.split() if line.strip())
    if not seeds:
        raise ValueError(f"{path}: no seeds found")
    return seeds


def _check_recompute_agreement(csv_path: Path) -> list[str]:
    """Re-derive each error column of the written file from its own
    delivered/desired values; flag any cell off by more than 0.01."""
    problems = []
    with open(csv_path, newline="", encoding="utf-8") as f:
        for row in csv.DictReader(f):
            volume, rate = SETTINGS[int(row["setting"])]
            checks = (
                ("err_vol_pct", percent_error(float(row["delivered_ml"]), volume)),
                ("err_rate_pct", percent_error(float(row["avg_rate_ml_h"]), rate)),
            )
            for column, expected in checks:
                stored = Decimal(row[column])
                if abs(stored - expected) > RECOMPUTE_TOLERANCE:
                    problems.append(
                        f"{csv_path}: setting {row['setting']} run {row['experiment']}: "
                        f"{column} stored {stored} but recomputes to {expected}"
                    )
    return problems


def _check_accuracy_bounds(rows, setting_ids, noise_on: bool) -> list[str]:
    problems = []
    if noise_on:
        for sid in setting_ids:
            errs = [r.pct_error_volume for r in rows if r.setting_id == sid]
            mean = sum(errs) / len(errs)
            if mean > NOISY_MEAN_VOLUME_ERR_PCT:
                problems.append(
                    f"setting {sid}: mean volume error {mean} > {NOISY_MEAN_VOLUME_ERR_PCT}%"
                )
        worst = max(r.pct_error_rate for r in rows)
        if worst > NOISY_MAX_RATE_ERR_PCT:
            problems.append(f"max rate error {worst} > {NOISY_MAX_RATE_ERR_PCT}%")
    else:
        for r in rows:
            if r.pct_error_volume >= NOISE_FREE_VOLUME_ERR_PCT:
                problems.append(
                    f"setting {r.setting_id} run {r.experiment_no}: volume error "
                    f"{r.pct_error_volume}% not under {NOISE_FREE_VOLUME_ERR_PCT}%"
                )
            if r.pct_error_rate >= NOISE_FREE_RATE_ERR_PCT:
                problems.append(
                    f"setting {r.setting_id} run {r.experiment_no}: rate error "
                    f"{r.pct_error_rate}% not under {NOISE_FREE_RATE_ERR_PCT}%"
                )
    return problems


def run_accuracy_command(args) -> int:
    setting_ids = (1, 2) if args.setting == "all" else (int(args.setting),)
    noise_on = args.noise == "default"
    if args.seeds:
        seeds = _read_seeds(args.seeds)
    else:
        # Noise-free runs are deterministic, so repeats would be identical.
        seeds = DEFAULT_SEEDS if noise_on else DEFAULT_SEEDS[:1]
    noise = CALIBRATED_NOISE if noise_on else None

    rows, series = run_accuracy_experiment(setting_ids, seeds, noise)
    written = export_accuracy(args.out, rows, series)

    for r in rows:
        print(
            f"setting {r.setting_id} run {r.experiment_no}: "
            f"delivered {r.delivered_volume_ml:.2f} mL (err {r.pct_error_volume}%), "
            f"avg rate {r.avg_rate_ml_h:.2f} mL/h (err {r.pct_error_rate}%)"
        )
    for path in written:
        print(f"wrote {path}")

    problems = _check_accuracy_bounds(rows, setting_ids, noise_on)
    problems += _check_recompute_agreement(written[0])
    for p in problems:
        print(f"INVARIANT VIOLATION: {p}", file=sys.stderr)
    return 1 if problems else 0


def run_load_command(args) -> int:
    profile = LoadProfile(
        n_users=args.users, duration_s=args.duration, think_time_s=args.think
    )
    result = run_load_test(profile, args.server)
    metrics = compute_metrics(result.samples, result.elapsed_s)
    written = export_load(args.out, [(args.users, metrics)])

    print(
        f"users {args.users}: {metrics.total_requests} requests in "
        f"{metrics.elapsed_s:.2f} s, throughput {metrics.throughput_rps:.2f} req/s, "
        f"rt avg {metrics.avg_rt_ms:.2f} / max {metrics.max_rt_ms:.2f} / "
        f"min {metrics.min_rt_ms:.2f} ms"
    )
    for path in written:
        print(f"wrote {path}")

    failures = [s for s in result.samples if s.outcome != "ok"]
    if failures:
        print(
            f"INVARIANT VIOLATION: {len(failures)} of {len(result.samples)} "
            f"requests failed (first: {failures[0].outcome})",
            file=sys.stderr,
        )
        return 1
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "load":
        return run_load_command(args)
    return run_accuracy_command(args)


if __name__ == "__main__":
    sys.exit(main())
