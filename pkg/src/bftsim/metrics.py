"""Scenario metrics: single-pass aggregation, serialization, and comparison.

A report holds scalar counters plus sampled metrics aggregated with
Welford's single-pass mean/variance.  Standard deviations are sample
(n-1) values.  Serialization is stable: identical reports emit identical
bytes, and emitted reports parse back equal.
"""

from __future__ import annotations

import io
import csv
import json
import math
from dataclasses import dataclass


SCALAR_METRICS = (
    "host_count",
    "vn_count",
    "completed_migrations",
    "failed_workloads",
    "checkpoint_count",
    "rollback_count",
    "migration_count",
    "replacement_count",
    "useful_work_total",
    "lost_work_total",
    "pause_time_total",
    "restore_time_total",
    "active_time_total",
    "corrupted_completions",
    "jobs_completed",
    "sla_degradation_migration_pct",
    "sla_time_per_active_host_pct",
    "overall_sla_violation_pct",
    "avg_sla_violation_pct",
)

SAMPLE_METRICS = (
    "time_before_migration",
    "detection_latency",
    "exec_time_vm_selection",
    "exec_time_host_selection",
    "exec_time_reallocation",
    "exec_time_total",
)

# metrics where only non-negative samples make sense (durations)
_NON_NEGATIVE = set(SAMPLE_METRICS)

PERCENT_METRICS = tuple(m for m in SCALAR_METRICS if m.endswith("_pct"))


@dataclass
class SampleStat:
    count: int = 0
    mean: float = 0.0
    _m2: float = 0.0
    low: float = math.inf
    high: float = -math.inf

    def add(self, x: float) -> None:
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self._m2 += delta * (x - self.mean)
        self.low = min(self.low, x)
        self.high = max(self.high, x)

    @property
    def stddev(self) -> float:
        if self.count < 2:
            return 0.0
        return math.sqrt(self._m2 / (self.count - 1))

    def as_dict(self) -> dict:
        return {
            "count": self.count,
            "mean": self.mean if self.count else 0.0,
            "stddev": self.stddev,
            "low": self.low if self.count else 0.0,
            "high": self.high if self.count else 0.0,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SampleStat":
        stat = cls(count=int(d["count"]), mean=float(d["mean"]),
                   low=float(d["low"]), high=float(d["high"]))
        # reconstruct the sum of squared deviations from the stored stddev
        if stat.count >= 2:
            stat._m2 = float(d["stddev"]) ** 2 * (stat.count - 1)
        if stat.count == 0:
            stat.low, stat.high = math.inf, -math.inf
        return stat

    def key(self) -> tuple:
        return (self.count, self.mean, self.stddev,
                self.low if self.count else 0.0,
                self.high if self.count else 0.0)


class MetricsReport:
    """All Table-style metrics of one scenario run."""

    def __init__(self, scenario_id: str = "", seed: int = 0,
                 scheduler: str = "", checkpoint_policy: str = ""):
        self.scenario_id = scenario_id
        self.seed = seed
        self.scheduler = scheduler
        self.checkpoint_policy = checkpoint_policy
        self.scalars: dict[str, float] = {m: 0 for m in SCALAR_METRICS}
        self.samples: dict[str, SampleStat] = {m: SampleStat() for m in SAMPLE_METRICS}

    def set_scalar(self, metric_id: str, value) -> None:
        if metric_id not in self.scalars:
            raise ValueError(f"unknown metric id: {metric_id}")
        if metric_id in PERCENT_METRICS and not 0.0 <= value <= 100.0:
            raise ValueError(f"{metric_id} must be a percentage in [0, 100]")
        self.scalars[metric_id] = value

    def record(self, metric_id: str, sample: float) -> None:
        if metric_id not in self.samples:
            raise ValueError(f"unknown metric id: {metric_id}")
        if metric_id in _NON_NEGATIVE and sample < 0:
            raise ValueError(f"{metric_id}: negative duration sample {sample}")
        self.samples[metric_id].add(sample)

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        out = {"_scenario": {"id": self.scenario_id, "seed": self.seed,
                             "scheduler": self.scheduler,
                             "checkpoint_policy": self.checkpoint_policy}}
        for m in SCALAR_METRICS:
            v = self.scalars[m]
            out[m] = {"count": 1, "mean": v, "stddev": 0.0, "low": v, "high": v}
        for m in SAMPLE_METRICS:
            out[m] = self.samples[m].as_dict()
        return out

    def emit(self, fmt: str) -> str:
        if fmt == "json":
            return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"
        if fmt == "csv":
            header, row = ["scenario_id", "seed", "scheduler", "checkpoint_policy"], \
                          [self.scenario_id, self.seed, self.scheduler, self.checkpoint_policy]
            for m in SCALAR_METRICS:
                header.append(m)
                row.append(repr(self.scalars[m]))
            for m in SAMPLE_METRICS:
                d = self.samples[m].as_dict()
                for stat_name in ("count", "mean", "stddev", "low", "high"):
                    header.append(f"{m}.{stat_name}")
                    row.append(repr(d[stat_name]))
            out = io.StringIO()
            writer = csv.writer(out, lineterminator="\n")
            writer.writerow(header)
            writer.writerow(row)
            return out.getvalue()
        raise ValueError(f"unknown format: {fmt}")

    @classmethod
    def parse(cls, text: str, fmt: str) -> "MetricsReport":
        if fmt == "json":
            data = json.loads(text)
            meta = data["_scenario"]
            report = cls(meta["id"], int(meta["seed"]), meta["scheduler"],
                         meta["checkpoint_policy"])
            for m in SCALAR_METRICS:
                report.scalars[m] = data[m]["mean"]
            for m in SAMPLE_METRICS:
                report.samples[m] = SampleStat.from_dict(data[m])
            return report
        if fmt == "csv":
            rows = list(csv.reader(io.StringIO(text)))
            header, row = rows[0], rows[1]
            values = dict(zip(header, row))
            report = cls(values["scenario_id"], int(values["seed"]),
                         values["scheduler"], values["checkpoint_policy"])
            for m in SCALAR_METRICS:
                v = float(values[m])
                report.scalars[m] = int(v) if v.is_integer() and "." not in values[m] else v
            for m in SAMPLE_METRICS:
                report.samples[m] = SampleStat.from_dict(
                    {stat: values[f"{m}.{stat}"] for stat in ("count", "mean", "stddev", "low", "high")})
            return report
        raise ValueError(f"unknown format: {fmt}")

    def _key(self) -> tuple:
        return (self.scenario_id, self.seed, self.scheduler, self.checkpoint_policy,
                tuple(float(self.scalars[m]) for m in SCALAR_METRICS),
                tuple(self.samples[m].key() for m in SAMPLE_METRICS))

    def __eq__(self, other) -> bool:
        if not isinstance(other, MetricsReport):
            return NotImplemented
        return self._key() == other._key()


def occurable_range(mean: float, stddev: float) -> tuple[float, float]:
    """The one-sigma band around a reported mean: (mean - s, mean + s)."""
    if stddev < 0:
        raise ValueError("stddev must be >= 0")
    return (mean - stddev, mean + stddev)


# comparison-table layout: (row id, kind, polarity); polarity says which
# direction is favorable ("lower", "higher", or None for descriptive rows)
TABLE_ROWS = (
    ("host_count", "scalar", None),
    ("vn_count", "scalar", None),
    ("energy_kwh", "absent", None),
    ("completed_migrations", "scalar", "higher"),
    ("sla_degradation_migration_pct", "scalar", "lower"),
    ("sla_time_per_active_host_pct", "scalar", "lower"),
    ("overall_sla_violation_pct", "scalar", "lower"),
    ("avg_sla_violation_pct", "scalar", "lower"),
    ("time_before_migration", "sample", "lower"),
    ("exec_time_vm_selection", "sample", "lower"),
    ("exec_time_host_selection", "sample", "lower"),
    ("exec_time_reallocation", "sample", "lower"),
    ("exec_time_total", "sample", "lower"),
    ("failed_workloads", "scalar", "lower"),
    ("checkpoint_count", "scalar", "lower"),
    ("rollback_count", "scalar", "lower"),
    ("migration_count", "scalar", None),
    ("lost_work_total", "scalar", "lower"),
    ("detection_latency", "sample", "lower"),
)


def summarize(report_a: MetricsReport, report_b: MetricsReport) -> list[dict]:
    """Side-by-side comparison rows of two runs over the same scenario."""
    if report_a.scenario_id != report_b.scenario_id:
        raise ValueError(
            f"mismatched scenario ids: {report_a.scenario_id!r} vs {report_b.scenario_id!r}")
    rows = []
    for metric_id, kind, polarity in TABLE_ROWS:
        if kind == "absent":
            rows.append({"metric": metric_id, "a": None, "b": None,
                         "delta": None, "favors": "not modeled"})
            continue
        if kind == "scalar":
            a, b = report_a.scalars[metric_id], report_b.scalars[metric_id]
            extra = {}
        else:
            sa, sb = report_a.samples[metric_id], report_b.samples[metric_id]
            a, b = sa.mean, sb.mean
            extra = {"a_stddev": sa.stddev, "b_stddev": sb.stddev}
        delta = b - a
        if delta == 0 or polarity is None:
            favors = "-"
        elif (delta < 0) == (polarity == "lower"):
            favors = "b"
        else:
            favors = "a"
        rows.append({"metric": metric_id, "a": a, "b": b, "delta": delta,
                     "favors": favors, **extra})
    return rows


def summary_csv(rows: list[dict]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["metric", "a", "b", "delta", "favors"])
    for r in rows:
        writer.writerow([r["metric"],
                         "" if r["a"] is None else r["a"],
                         "" if r["b"] is None else r["b"],
                         "" if r["delta"] is None else r["delta"],
                         r["favors"]])
    return out.getvalue()
