"""Run metrics and their CSV rendering."""
from __future__ import annotations

import csv
import io
import math
import statistics
from dataclasses import dataclass, field

CSV_COLUMNS = (
    "scenario",
    "seed",
    "direction",
    "offered_bytes",
    "delivered_bytes",
    "goodput_bps",
    "p50_latency_us",
    "p99_latency_us",
    "fer",
    "retries",
    "drops",
    "shifts",
)


@dataclass
class TransceiverCounters:
    sent: int = 0  # data-bearing frames put on air, retransmissions included
    acks_sent: int = 0  # pure ACK frames
    acked: int = 0
    nacked: int = 0
    cs_busy: int = 0
    escalated: int = 0
    dropped: int = 0


@dataclass
class DirectionMetrics:
    src: int
    dst: int
    offered_bytes: int
    delivered_bytes: int
    goodput_bps: float
    latencies_ns: list[int]
    fer: float
    retries: int
    drops: int
    shifts: int
    intact: bool

    @property
    def label(self) -> str:
        return f"{self.src}->{self.dst}"

    def latency_percentile(self, q: float) -> float | None:
        """Nearest-rank percentile in ns; ``q`` in (0, 100]."""
        if not self.latencies_ns:
            return None
        ordered = sorted(self.latencies_ns)
        rank = max(1, math.ceil(q / 100 * len(ordered)))
        return ordered[rank - 1]

    @property
    def median_latency_ns(self) -> float | None:
        return statistics.median(self.latencies_ns) if self.latencies_ns else None


@dataclass
class MetricsReport:
    scenario: str
    seed: int
    directions: list[DirectionMetrics] = field(default_factory=list)
    transceivers: dict[str, TransceiverCounters] = field(default_factory=dict)
    shift_log: list[tuple[int, str, str]] = field(default_factory=list)
    dumps: dict[int, int] = field(default_factory=dict)
    end_time_ns: int = 0

    def direction(self, src: int) -> DirectionMetrics | None:
        return next((d for d in self.directions if d.src == src), None)


def _us(ns: float | None) -> str:
    return "" if ns is None else f"{ns / 1000:.3f}"


def emit_metrics(report: MetricsReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for d in report.directions:
        w.writerow(
            [
                report.scenario,
                report.seed,
                d.label,
                d.offered_bytes,
                d.delivered_bytes,
                f"{d.goodput_bps:.1f}",
                _us(d.latency_percentile(50)),
                _us(d.latency_percentile(99)),
                f"{d.fer:.6f}",
                d.retries,
                d.drops,
                d.shifts,
            ]
        )
    return buf.getvalue()
