"""Execution-telemetry aggregation per structural version and cross-version deltas.

All displayed percentages round half-to-even at one decimal; relative deltas
of 1000% or more collapse to whole percent in formatted reports, matching the
aggregate comparison table layout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import ROUND_HALF_EVEN, Decimal
from enum import Enum

from .bpmn import BpmnDocument
from .model import ExecutionStatus, JobRun, Pipeline, PipelineRun

SCHEMA_METRICS = "pipetwin.metrics/1"

INFRASTRUCTURE_REASONS = frozenset(
    {
        "runner_system_failure",
        "stuck_or_timeout_failure",
        "api_failure",
        "scheduler_failure",
        "data_integrity_failure",
        "runner_unsupported",
    }
)


class FailureCategory(str, Enum):
    INFRASTRUCTURE = "infrastructure"
    SCRIPT = "script"
    OTHER = "other"


class NotAFailureError(Exception):
    pass


class EmptyMetricsError(Exception):
    pass


@dataclass(frozen=True)
class VersionMetrics:
    yaml_hash: str
    runs: int
    success_rate_pct: float | None
    avg_duration_s: float | None
    median_duration_s: float | None
    stage_avg_s: dict[str, float]
    avg_queue_s: float | None
    failure_categories: dict[str, int]


@dataclass(frozen=True)
class DeltaValue:
    before: float | None
    after: float | None
    delta: float | None  # None marks an undefined / not-meaningful delta
    unit: str  # "pp" | "%" | ""

    def display(self) -> str:
        return format_delta(self.delta, self.unit)


@dataclass(frozen=True)
class MetricsDelta:
    runs_before: int
    runs_after: int
    success_rate: DeltaValue
    avg_duration: DeltaValue
    median_duration: DeltaValue
    stage_avg: dict[str, DeltaValue]
    avg_queue: DeltaValue


@dataclass(frozen=True)
class OverlayEntry:
    status: ExecutionStatus
    duration_s: float | None
    failure_reason: str | None


@dataclass(frozen=True)
class ExecutionOverlay:
    entries: dict[str, OverlayEntry] = field(default_factory=dict)


class MissingElementError(Exception):
    def __init__(self, job_name: str):
        self.job_name = job_name
        super().__init__(f"job run {job_name!r} has no element in the BPMN document")


def round1(value) -> float:
    """Half-to-even rounding at one decimal, exact over Decimal arithmetic."""
    return float(Decimal(str(value)).quantize(Decimal("0.1"), rounding=ROUND_HALF_EVEN))


def format_delta(delta: float | None, unit: str) -> str:
    if delta is None:
        return "-"
    if unit == "pp":
        return f"{delta:+.1f} pp"
    if unit == "%":
        if abs(delta) >= 1000:
            whole = int(Decimal(str(delta)).quantize(Decimal("1"), rounding=ROUND_HALF_EVEN))
            return f"{whole:+d}%"
        return f"{delta:+.1f}%"
    return f"{delta:+.1f}"


def categorize(job_run: JobRun) -> FailureCategory:
    """Map the CI engine's failure_reason onto the three-way category split."""
    if job_run.status != ExecutionStatus.FAILED:
        raise NotAFailureError(f"job run {job_run.job_name!r} has status {job_run.status.value}")
    if job_run.failure_reason == "script_failure":
        return FailureCategory.SCRIPT
    if job_run.failure_reason in INFRASTRUCTURE_REASONS:
        return FailureCategory.INFRASTRUCTURE
    return FailureCategory.OTHER


def _mean(values: list) -> float | None:
    if not values:
        return None
    total = sum((Decimal(str(v)) for v in values), Decimal(0))
    return float((total / len(values)).quantize(Decimal("0.1"), rounding=ROUND_HALF_EVEN))


def _median(values: list) -> float | None:
    if not values:
        return None
    ordered = sorted(Decimal(str(v)) for v in values)
    n = len(ordered)
    if n % 2 == 1:
        mid = ordered[n // 2]
    else:
        mid = (ordered[n // 2 - 1] + ordered[n // 2]) / 2
    return float(mid.quantize(Decimal("0.1"), rounding=ROUND_HALF_EVEN))


def aggregate(
    runs: list[PipelineRun],
    pipeline: Pipeline | None = None,
    yaml_hash: str | None = None,
) -> VersionMetrics:
    """Per-version aggregates over one structural version's runs.

    Zero runs yield a metrics object with runs=0 and undefined statistics
    (None), never fabricated zeros. Averages and medians cover finished runs
    (duration present); stage averages group job durations by the job's
    stage in the structural model when one is supplied.
    """
    if runs:
        hashes = {r.pipeline_yaml_hash for r in runs}
        if len(hashes) > 1:
            raise ValueError(f"runs span several structural versions: {sorted(hashes)}")
        yaml_hash = runs[0].pipeline_yaml_hash
    if not runs:
        return VersionMetrics(
            yaml_hash=yaml_hash or "",
            runs=0,
            success_rate_pct=None,
            avg_duration_s=None,
            median_duration_s=None,
            stage_avg_s={},
            avg_queue_s=None,
            failure_categories={c.value: 0 for c in FailureCategory},
        )

    successes = sum(1 for r in runs if r.status == ExecutionStatus.SUCCESS)
    rate = float(
        (Decimal(100) * successes / Decimal(len(runs))).quantize(
            Decimal("0.1"), rounding=ROUND_HALF_EVEN
        )
    )
    durations = [r.duration_s for r in runs if r.duration_s is not None]

    stage_of = {j.name: j.stage for j in pipeline.jobs} if pipeline else {}
    per_stage: dict[str, list[float]] = {}
    queue_times = []
    categories = {c.value: 0 for c in FailureCategory}
    for run in runs:
        for jr in run.job_runs:
            if jr.queued_s is not None:
                queue_times.append(jr.queued_s)
            if jr.status == ExecutionStatus.FAILED:
                categories[categorize(jr).value] += 1
            stage = stage_of.get(jr.job_name)
            if stage is not None and jr.duration_s is not None:
                per_stage.setdefault(stage, []).append(jr.duration_s)

    return VersionMetrics(
        yaml_hash=yaml_hash,
        runs=len(runs),
        success_rate_pct=rate,
        avg_duration_s=_mean(durations),
        median_duration_s=_median(durations),
        stage_avg_s={s: _mean(v) for s, v in sorted(per_stage.items())},
        avg_queue_s=_mean(queue_times),
        failure_categories=categories,
    )


def _relative_delta(before: float | None, after: float | None) -> DeltaValue:
    if before is None or after is None:
        return DeltaValue(before, after, None, "%")
    if before == 0:
        # division-by-zero base: delta undefined rather than infinite
        return DeltaValue(before, after, None, "%")
    value = (Decimal(str(after)) / Decimal(str(before)) - 1) * 100
    return DeltaValue(
        before,
        after,
        float(value.quantize(Decimal("0.1"), rounding=ROUND_HALF_EVEN)),
        "%",
    )


def delta(m1: VersionMetrics, m2: VersionMetrics) -> MetricsDelta:
    """Cross-version behavioral deltas: rates in percentage points, durations
    as relative percentages; run counts carry no delta."""
    if m1.success_rate_pct is None or m2.success_rate_pct is None:
        rate = DeltaValue(m1.success_rate_pct, m2.success_rate_pct, None, "pp")
    else:
        value = Decimal(str(m2.success_rate_pct)) - Decimal(str(m1.success_rate_pct))
        rate = DeltaValue(
            m1.success_rate_pct,
            m2.success_rate_pct,
            float(value.quantize(Decimal("0.1"), rounding=ROUND_HALF_EVEN)),
            "pp",
        )
    stage_avg = {}
    for stage in sorted(set(m1.stage_avg_s) & set(m2.stage_avg_s)):
        stage_avg[stage] = _relative_delta(m1.stage_avg_s[stage], m2.stage_avg_s[stage])
    return MetricsDelta(
        runs_before=m1.runs,
        runs_after=m2.runs,
        success_rate=rate,
        avg_duration=_relative_delta(m1.avg_duration_s, m2.avg_duration_s),
        median_duration=_relative_delta(m1.median_duration_s, m2.median_duration_s),
        stage_avg=stage_avg,
        avg_queue=_relative_delta(m1.avg_queue_s, m2.avg_queue_s),
    )


def overlay(run: PipelineRun, doc: BpmnDocument) -> ExecutionOverlay:
    """Project one run onto the structural diagram.

    Every executed job annotates its activity; jobs defined in the model but
    absent from the run (filtered by conditions) render as skipped, so the
    diagram keeps showing all defined jobs.
    """
    entries: dict[str, OverlayEntry] = {}
    for jr in run.job_runs:
        if jr.job_name not in doc.element_index:
            raise MissingElementError(jr.job_name)
        entries[doc.element_index[jr.job_name]] = OverlayEntry(
            status=jr.status,
            duration_s=jr.duration_s,
            failure_reason=jr.failure_reason,
        )
    executed = {jr.job_name for jr in run.job_runs}
    for job_name, element_id in doc.element_index.items():
        if job_name not in executed:
            entries[element_id] = OverlayEntry(ExecutionStatus.SKIPPED, None, None)
    return ExecutionOverlay(entries=entries)


def metrics_to_dict(m: VersionMetrics) -> dict:
    return {
        "schema": SCHEMA_METRICS,
        "kind": "version",
        "yaml_hash": m.yaml_hash,
        "runs": m.runs,
        "success_rate_pct": m.success_rate_pct,
        "avg_duration_s": m.avg_duration_s,
        "median_duration_s": m.median_duration_s,
        "stage_avg_s": dict(m.stage_avg_s),
        "avg_queue_s": m.avg_queue_s,
        "failure_categories": dict(m.failure_categories),
    }


def delta_to_dict(d: MetricsDelta) -> dict:
    """Delta report mirroring the comparison table: one row per metric."""

    def row(metric: str, dv: DeltaValue) -> dict:
        return {
            "metric": metric,
            "before": dv.before,
            "after": dv.after,
            "delta": dv.delta,
            "unit": dv.unit,
            "display": dv.display(),
        }

    rows = [
        {
            "metric": "runs",
            "before": d.runs_before,
            "after": d.runs_after,
            "delta": None,
            "unit": "",
            "display": "-",
        },
        row("success_rate_pct", d.success_rate),
        row("avg_duration_s", d.avg_duration),
        row("median_duration_s", d.median_duration),
    ]
    for stage, dv in d.stage_avg.items():
        rows.append(row(f"stage_avg_s.{stage}", dv))
    rows.append(row("avg_queue_s", d.avg_queue))
    return {"schema": SCHEMA_METRICS, "kind": "delta", "rows": rows}


def overlay_to_dict(o: ExecutionOverlay) -> dict:
    return {
        element_id: {
            "status": entry.status.value,
            "duration_s": entry.duration_s,
            "failure_reason": entry.failure_reason,
        }
        for element_id, entry in sorted(o.entries.items())
    }
