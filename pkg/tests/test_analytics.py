"""Aggregation, cross-version deltas, failure categorization, execution overlay."""

import random

import pytest
from hypothesis import given, strategies as st

from pipetwin.analytics import (
    FailureCategory,
    MissingElementError,
    NotAFailureError,
    VersionMetrics,
    aggregate,
    categorize,
    delta,
    delta_to_dict,
    format_delta,
    metrics_to_dict,
    overlay,
    overlay_to_dict,
    round1,
)
from pipetwin.bpmn import generate
from pipetwin.model import ExecutionStatus, JobRun, PipelineRun


HASH1 = "a" * 64
HASH2 = "b" * 64


def make_run(run_id, status=ExecutionStatus.SUCCESS, duration=100.0, yaml_hash=HASH1,
             job_runs=()):
    return PipelineRun(
        run_id=str(run_id),
        pipeline_yaml_hash=yaml_hash,
        status=status,
        started_at="2025-08-01T10:00:00+00:00",
        finished_at="2025-08-01T11:00:00+00:00",
        duration_s=duration,
        job_runs=tuple(job_runs),
    )


def metrics_with(rate=None, avg=None, median=None, stage_avg=None, queue=None, runs=0,
                 yaml_hash=HASH1):
    return VersionMetrics(
        yaml_hash=yaml_hash,
        runs=runs,
        success_rate_pct=rate,
        avg_duration_s=avg,
        median_duration_s=median,
        stage_avg_s=stage_avg or {},
        avg_queue_s=queue,
        failure_categories={c.value: 0 for c in FailureCategory},
    )


class TestAggregate:
    def test_sixteen_runs_five_successes(self):
        # 5/16 = 31.25%, half-to-even at one decimal gives 31.2
        runs = [
            make_run(i, ExecutionStatus.SUCCESS if i < 5 else ExecutionStatus.FAILED)
            for i in range(16)
        ]
        assert aggregate(runs).success_rate_pct == 31.2

    def test_hundred_runs_sixty_one_successes(self):
        runs = [
            make_run(i, ExecutionStatus.SUCCESS if i < 61 else ExecutionStatus.FAILED)
            for i in range(100)
        ]
        assert aggregate(runs).success_rate_pct == 61.0

    def test_single_successful_run(self):
        metrics = aggregate([make_run(1, duration=100.0)])
        assert metrics.success_rate_pct == 100.0
        assert metrics.avg_duration_s == 100.0
        assert metrics.median_duration_s == 100.0

    def test_avg_and_median(self):
        durations = [10, 20, 30, 100]
        runs = [make_run(i, duration=d) for i, d in enumerate(durations)]
        metrics = aggregate(runs)
        assert metrics.avg_duration_s == 40.0
        assert metrics.median_duration_s == 25.0

    def test_zero_runs_undefined_not_zero(self):
        metrics = aggregate([], yaml_hash=HASH1)
        assert metrics.runs == 0
        assert metrics.success_rate_pct is None
        assert metrics.avg_duration_s is None
        assert metrics.median_duration_s is None
        assert metrics.avg_queue_s is None

    def test_mixed_hashes_rejected(self):
        with pytest.raises(ValueError):
            aggregate([make_run(1, yaml_hash=HASH1), make_run(2, yaml_hash=HASH2)])

    def test_stage_averages_use_structural_model(self, reference_pipeline):
        job_runs = (
            JobRun(job_name="compile", status=ExecutionStatus.SUCCESS, duration_s=100.0),
            JobRun(job_name="static-analysis", status=ExecutionStatus.SUCCESS, duration_s=200.0),
            JobRun(job_name="unit-test", status=ExecutionStatus.SUCCESS, duration_s=60.0),
        )
        runs = [make_run(1, yaml_hash=reference_pipeline.yaml_hash, job_runs=job_runs)]
        metrics = aggregate(runs, pipeline=reference_pipeline)
        assert metrics.stage_avg_s == {"build": 150.0, "test": 60.0}

    def test_queue_time_is_job_level_mean(self):
        job_runs = (
            JobRun(job_name="a", status=ExecutionStatus.SUCCESS, queued_s=2.0),
            JobRun(job_name="b", status=ExecutionStatus.SUCCESS, queued_s=4.0),
        )
        metrics = aggregate([make_run(1, job_runs=job_runs)])
        assert metrics.avg_queue_s == 3.0

    def test_aggregation_oracle_small_runs(self):
        rng = random.Random(6)
        for _ in range(30):
            n = rng.randint(1, 20)
            statuses = [
                rng.choice([ExecutionStatus.SUCCESS, ExecutionStatus.FAILED]) for _ in range(n)
            ]
            durations = [float(rng.randint(1, 500)) for _ in range(n)]
            runs = [make_run(i, s, d) for i, (s, d) in enumerate(zip(statuses, durations))]
            metrics = aggregate(runs)
            successes = sum(1 for s in statuses if s == ExecutionStatus.SUCCESS)
            assert metrics.success_rate_pct == round1(100 * successes / n)
            assert metrics.avg_duration_s == round1(sum(durations) / n)
            ordered = sorted(durations)
            if n % 2 == 1:
                expected_median = ordered[n // 2]
            else:
                expected_median = (ordered[n // 2 - 1] + ordered[n // 2]) / 2
            assert metrics.median_duration_s == round1(expected_median)
            assert 0.0 <= metrics.success_rate_pct <= 100.0

    @given(st.lists(st.booleans(), min_size=1, max_size=40))
    def test_rate_bounds(self, outcomes):
        runs = [
            make_run(i, ExecutionStatus.SUCCESS if ok else ExecutionStatus.FAILED)
            for i, ok in enumerate(outcomes)
        ]
        rate = aggregate(runs).success_rate_pct
        assert 0.0 <= rate <= 100.0


class TestDelta:
    def test_rate_delta_in_percentage_points(self):
        d = delta(metrics_with(rate=31.2, runs=16), metrics_with(rate=61.0, runs=100))
        assert d.success_rate.delta == 29.8
        assert d.success_rate.display() == "+29.8 pp"

    def test_table_closure_duration_rows(self):
        m1 = metrics_with(rate=31.2, avg=2550, median=2795, stage_avg={"build": 614}, queue=3.1,
                          runs=16)
        m2 = metrics_with(rate=61.0, avg=2709, median=2766, stage_avg={"build": 453}, queue=50.2,
                          runs=100)
        d = delta(m1, m2)
        assert d.avg_duration.delta == 6.2
        assert d.avg_duration.display() == "+6.2%"
        assert d.median_duration.delta == -1.0
        assert d.median_duration.display() == "-1.0%"
        assert d.stage_avg["build"].delta == -26.2
        assert d.stage_avg["build"].display() == "-26.2%"
        assert d.avg_queue.display() == "+1519%"

    def test_identical_metrics_zero_deltas(self):
        m = metrics_with(rate=50.0, avg=10, median=10, queue=1.0, runs=3)
        d = delta(m, m)
        assert d.success_rate.delta == 0.0
        assert d.avg_duration.delta == 0.0
        assert d.median_duration.delta == 0.0
        assert d.avg_queue.delta == 0.0

    def test_zero_base_marks_delta_undefined(self):
        d = delta(metrics_with(avg=0.0, runs=1), metrics_with(avg=10.0, runs=1))
        assert d.avg_duration.delta is None
        assert d.avg_duration.display() == "-"

    def test_run_count_delta_absent(self):
        d = delta(metrics_with(runs=16), metrics_with(runs=100))
        payload = delta_to_dict(d)
        runs_row = next(r for r in payload["rows"] if r["metric"] == "runs")
        assert runs_row["delta"] is None and runs_row["display"] == "-"
        assert runs_row["before"] == 16 and runs_row["after"] == 100

    def test_delta_recomputation(self):
        rng = random.Random(12)
        for _ in range(40):
            before = round1(rng.uniform(0.1, 5000))
            after = round1(rng.uniform(0.1, 5000))
            d = delta(metrics_with(avg=before, runs=1), metrics_with(avg=after, runs=1))
            from decimal import Decimal, ROUND_HALF_EVEN

            expected = float(
                ((Decimal(str(after)) / Decimal(str(before)) - 1) * 100).quantize(
                    Decimal("0.1"), rounding=ROUND_HALF_EVEN
                )
            )
            assert d.avg_duration.delta == expected

    def test_undefined_inputs_propagate(self):
        d = delta(metrics_with(), metrics_with(rate=10.0, avg=5.0, runs=1))
        assert d.success_rate.delta is None
        assert d.avg_duration.delta is None


class TestFormatDelta:
    def test_formats(self):
        assert format_delta(29.8, "pp") == "+29.8 pp"
        assert format_delta(-26.2, "%") == "-26.2%"
        assert format_delta(1519.4, "%") == "+1519%"
        assert format_delta(-1519.4, "%") == "-1519%"
        assert format_delta(None, "%") == "-"


class TestCategorize:
    def test_script_failure(self):
        jr = JobRun(job_name="a", status=ExecutionStatus.FAILED, failure_reason="script_failure")
        assert categorize(jr) == FailureCategory.SCRIPT

    def test_success_is_not_a_failure(self):
        with pytest.raises(NotAFailureError):
            categorize(JobRun(job_name="a", status=ExecutionStatus.SUCCESS))

    def test_full_reason_table(self):
        infrastructure = [
            "runner_system_failure",
            "stuck_or_timeout_failure",
            "api_failure",
            "scheduler_failure",
            "data_integrity_failure",
            "runner_unsupported",
        ]
        for reason in infrastructure:
            jr = JobRun(job_name="a", status=ExecutionStatus.FAILED, failure_reason=reason)
            assert categorize(jr) == FailureCategory.INFRASTRUCTURE
        mystery = JobRun(job_name="a", status=ExecutionStatus.FAILED, failure_reason="mystery")
        assert categorize(mystery) == FailureCategory.OTHER
        absent = JobRun(job_name="a", status=ExecutionStatus.FAILED)
        assert categorize(absent) == FailureCategory.OTHER

    def test_category_partition_over_failed_sets(self):
        rng = random.Random(4)
        reasons = ["script_failure", "runner_system_failure", "weird", None, "api_failure"]
        for _ in range(20):
            failed = [
                JobRun(job_name=f"j{i}", status=ExecutionStatus.FAILED,
                       failure_reason=rng.choice(reasons))
                for i in range(rng.randint(1, 30))
            ]
            counts = {c: 0 for c in FailureCategory}
            for jr in failed:
                counts[categorize(jr)] += 1
            assert sum(counts.values()) == len(failed)

    def test_v2_like_fixture_19_script_2_infrastructure(self):
        job_runs = tuple(
            JobRun(job_name=f"j{i}", status=ExecutionStatus.FAILED,
                   failure_reason="script_failure")
            for i in range(19)
        ) + tuple(
            JobRun(job_name=f"k{i}", status=ExecutionStatus.FAILED,
                   failure_reason="runner_system_failure")
            for i in range(2)
        )
        runs = [make_run(1, ExecutionStatus.FAILED, job_runs=job_runs)]
        metrics = aggregate(runs)
        assert metrics.failure_categories == {"script": 19, "infrastructure": 2, "other": 0}


class TestOverlay:
    def test_all_success(self, reference_pipeline):
        doc = generate(reference_pipeline)
        job_runs = tuple(
            JobRun(job_name=j.name, status=ExecutionStatus.SUCCESS, duration_s=10.0)
            for j in reference_pipeline.jobs
        )
        run = make_run(1, yaml_hash=reference_pipeline.yaml_hash, job_runs=job_runs)
        result = overlay(run, doc)
        assert len(result.entries) == len(reference_pipeline.jobs)
        assert all(e.status == ExecutionStatus.SUCCESS for e in result.entries.values())
        assert all(e.duration_s == 10.0 for e in result.entries.values())

    def test_single_failure_annotated(self, reference_pipeline):
        doc = generate(reference_pipeline)
        job_runs = (
            JobRun(job_name="unit-test", status=ExecutionStatus.FAILED, duration_s=42.0,
                   failure_reason="script_failure"),
        )
        run = make_run(1, ExecutionStatus.FAILED, yaml_hash=reference_pipeline.yaml_hash,
                       job_runs=job_runs)
        result = overlay(run, doc)
        entry = result.entries["task_unit_test"]
        assert entry.status == ExecutionStatus.FAILED
        assert entry.duration_s == 42.0
        assert entry.failure_reason == "script_failure"

    def test_filtered_job_rendered_skipped(self, reference_pipeline):
        doc = generate(reference_pipeline)
        executed = tuple(
            JobRun(job_name=j.name, status=ExecutionStatus.SUCCESS, duration_s=5.0)
            for j in reference_pipeline.jobs
            if j.name != "static-analysis"
        )
        run = make_run(1, yaml_hash=reference_pipeline.yaml_hash, job_runs=executed)
        result = overlay(run, doc)
        assert result.entries["task_static_analysis"].status == ExecutionStatus.SKIPPED
        assert result.entries["task_static_analysis"].duration_s is None

    def test_unknown_job_raises(self, reference_pipeline):
        doc = generate(reference_pipeline)
        run = make_run(
            1,
            yaml_hash=reference_pipeline.yaml_hash,
            job_runs=(JobRun(job_name="ghost", status=ExecutionStatus.SUCCESS),),
        )
        with pytest.raises(MissingElementError):
            overlay(run, doc)


class TestSerialization:
    def test_metrics_schema(self):
        payload = metrics_to_dict(metrics_with(rate=50.0, runs=2))
        assert payload["schema"] == "pipetwin.metrics/1"
        assert payload["runs"] == 2

    def test_delta_rows_mirror_table_layout(self):
        m1 = metrics_with(rate=31.2, avg=2550, median=2795, stage_avg={"build": 614},
                          queue=3.1, runs=16)
        m2 = metrics_with(rate=61.0, avg=2709, median=2766, stage_avg={"build": 453},
                          queue=50.2, runs=100)
        payload = delta_to_dict(delta(m1, m2))
        metrics_order = [row["metric"] for row in payload["rows"]]
        assert metrics_order == [
            "runs",
            "success_rate_pct",
            "avg_duration_s",
            "median_duration_s",
            "stage_avg_s.build",
            "avg_queue_s",
        ]
        displays = {row["metric"]: row["display"] for row in payload["rows"]}
        assert displays["success_rate_pct"] == "+29.8 pp"
        assert displays["stage_avg_s.build"] == "-26.2%"
        assert displays["avg_queue_s"] == "+1519%"

    def test_overlay_dict_round_trip(self, reference_pipeline):
        doc = generate(reference_pipeline)
        run = make_run(
            1,
            yaml_hash=reference_pipeline.yaml_hash,
            job_runs=(JobRun(job_name="compile", status=ExecutionStatus.SUCCESS,
                             duration_s=3.0),),
        )
        payload = overlay_to_dict(overlay(run, doc))
        assert payload["task_compile"]["status"] == "success"
        assert payload["task_deploy"]["status"] == "skipped"
