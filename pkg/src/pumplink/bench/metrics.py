"""Measurement arithmetic for the evaluation harness.

``percent_error`` is the error formula behind every accuracy table cell:
exact decimal arithmetic, reported to two decimals with half-up rounding,
so e.g. (4.1 vs 4) is 2.50 and a mean over {2.5, 3.5, 0.5, 4, 3} is
exactly 2.70 with no float residue.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, Sequence

_TWO_DP = Decimal("0.01")


def _dec(value) -> Decimal:
    # floats go through str() so 4.1 means the decimal 4.1
    return value if isinstance(value, Decimal) else Decimal(str(value))


def percent_error(measured, desired) -> Decimal:
    """100*|measured-desired|/desired to two decimals."""
    desired_d = _dec(desired)
    if desired_d <= 0:
        raise ValueError("desired must be positive")
    raw = (_dec(measured) - desired_d).copy_abs() / desired_d * 100
    return raw.quantize(_TWO_DP, rounding=ROUND_HALF_UP)


def mean_pct(values: Iterable) -> Decimal:
    """Mean of percentage values to two decimals."""
    items = [_dec(v) for v in values]
    if not items:
        raise ValueError("mean of no values")
    return (sum(items) / len(items)).quantize(_TWO_DP, rounding=ROUND_HALF_UP)


@dataclass(frozen=True)
class RequestSample:
    sent_at_ms: float
    latency_ms: float
    endpoint: str
    outcome: str  # "ok" or an error label

    def __post_init__(self):
        if self.latency_ms < 0:
            raise ValueError("latency cannot be negative")


@dataclass(frozen=True)
class MetricsSummary:
    total_requests: int
    avg_rt_ms: float
    max_rt_ms: float
    min_rt_ms: float
    throughput_rps: float
    elapsed_s: float

    def __post_init__(self):
        # float-summation slack, relative so large-magnitude sample sets
        # with equal latencies don't trip the check on rounding dust
        slack = 1e-9 * max(1.0, abs(self.max_rt_ms))
        if not (self.min_rt_ms <= self.avg_rt_ms + slack and self.avg_rt_ms <= self.max_rt_ms + slack):
            raise ValueError("response-time summary must satisfy min <= avg <= max")
        if self.elapsed_s <= 0:
            raise ValueError("elapsed must be positive")


def compute_metrics(samples: Sequence[RequestSample], elapsed_s: float) -> MetricsSummary:
    """Summary over a sample set: totals, min/avg/max latency, throughput.

    Throughput is total requests divided by the caller's elapsed time,
    conventionally first-send to last-response.
    """
    if not samples:
        raise ValueError("cannot summarize zero samples")
    if elapsed_s <= 0:
        raise ValueError("elapsed must be positive")
    latencies = [s.latency_ms for s in samples]
    total = len(latencies)
    return MetricsSummary(
        total_requests=total,
        avg_rt_ms=sum(latencies) / total,
        max_rt_ms=max(latencies),
        min_rt_ms=min(latencies),
        throughput_rps=total / elapsed_s,
        elapsed_s=elapsed_s,
    )
