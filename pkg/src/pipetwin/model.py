"""Pipeline metamodel: the definition facet, the execution facet, and validation.

Every value is a frozen dataclass; instances are safe to share across threads.
The canonical serialized form is a JSON document with schema id
``pipetwin.model/1`` (see pipeline_to_dict / pipeline_from_dict).
"""

from __future__ import annotations

import hashlib
import heapq
import json
from dataclasses import dataclass
from enum import Enum

SCHEMA_MODEL = "pipetwin.model/1"
SCHEMA_RUN = "pipetwin.run/1"

SCOPE_PIPELINE = "pipeline"
SCOPE_JOB = "job"


class WhenPolicy(str, Enum):
    ON_SUCCESS = "on_success"
    MANUAL = "manual"
    ALWAYS = "always"
    ON_FAILURE = "on_failure"
    DELAYED = "delayed"


class TriggerType(str, Enum):
    PUSH = "push"
    MERGE_REQUEST = "merge_request"
    SCHEDULE = "schedule"
    API = "api"
    WEB = "web"
    TAG_PUSH = "tag_push"


class ExecutionStatus(str, Enum):
    SUCCESS = "success"
    FAILED = "failed"
    CANCELED = "canceled"
    SKIPPED = "skipped"
    RUNNING = "running"
    PENDING = "pending"
    MANUAL = "manual"


class ConditionKind(str, Enum):
    IF = "if"
    CHANGES = "changes"
    EXISTS = "exists"


@dataclass(frozen=True)
class Variable:
    key: str
    value: str
    scope: str = SCOPE_PIPELINE


@dataclass(frozen=True)
class Condition:
    kind: ConditionKind
    # raw predicate payload: a string for `if`, a path-pattern tuple for
    # `changes` / `exists`
    expression: str | tuple[str, ...]


@dataclass(frozen=True)
class Trigger:
    trigger_type: TriggerType


@dataclass(frozen=True)
class Job:
    name: str
    stage: str
    script: tuple[str, ...] = ()
    image: str | None = None
    when: WhenPolicy = WhenPolicy.ON_SUCCESS
    allow_failure: bool = False
    needs: tuple[str, ...] = ()
    conditions: tuple[Condition, ...] = ()
    variables: tuple[Variable, ...] = ()
    tags: tuple[str, ...] = ()
    retry: int | None = None


@dataclass(frozen=True)
class Template:
    """A reusable '.'-prefixed fragment; never rendered as a BPMN activity."""

    name: str
    body: JobFragment


@dataclass(frozen=True)
class JobFragment:
    """The Job attribute set with every field optional (template bodies)."""

    stage: str | None = None
    script: tuple[str, ...] | None = None
    image: str | None = None
    when: WhenPolicy | None = None
    allow_failure: bool | None = None
    needs: tuple[str, ...] | None = None
    conditions: tuple[Condition, ...] | None = None
    variables: tuple[Variable, ...] | None = None
    tags: tuple[str, ...] | None = None
    retry: int | None = None


@dataclass(frozen=True)
class Stage:
    name: str
    index: int


@dataclass(frozen=True)
class Pipeline:
    ref: str
    commit_sha: str
    file_path: str
    yaml_hash: str
    stage_order: tuple[str, ...]
    jobs: tuple[Job, ...]
    templates: tuple[Template, ...] = ()
    variables: tuple[Variable, ...] = ()
    triggers: tuple[Trigger, ...] = ()

    @property
    def stages(self) -> tuple[Stage, ...]:
        return tuple(Stage(name, i) for i, name in enumerate(self.stage_order))

    def stage_index(self, name: str) -> int:
        return self.stage_order.index(name)

    def job(self, name: str) -> Job | None:
        for j in self.jobs:
            if j.name == name:
                return j
        return None


@dataclass(frozen=True)
class JobRun:
    job_name: str
    status: ExecutionStatus
    started_at: str | None = None
    finished_at: str | None = None
    duration_s: float | None = None
    queued_s: float | None = None
    failure_reason: str | None = None

    def __post_init__(self):
        if self.duration_s is not None and self.duration_s < 0:
            raise ValueError(f"job run {self.job_name}: negative duration")
        if self.queued_s is not None and self.queued_s < 0:
            raise ValueError(f"job run {self.job_name}: negative queue time")
        if self.failure_reason is not None and self.status != ExecutionStatus.FAILED:
            raise ValueError(
                f"job run {self.job_name}: failure_reason on status {self.status.value}"
            )


@dataclass(frozen=True)
class PipelineRun:
    run_id: str
    pipeline_yaml_hash: str
    status: ExecutionStatus
    started_at: str | None = None
    finished_at: str | None = None
    duration_s: float | None = None
    source: TriggerType | None = None
    job_runs: tuple[JobRun, ...] = ()

    def __post_init__(self):
        if self.duration_s is not None and self.duration_s < 0:
            raise ValueError(f"run {self.run_id}: negative duration")
        if (
            self.started_at is not None
            and self.finished_at is not None
            and self.finished_at < self.started_at
        ):
            raise ValueError(f"run {self.run_id}: finished before started")


@dataclass(frozen=True)
class Violation:
    rule: str
    entity: str
    message: str


class NeedsResolutionError(Exception):
    def __init__(self, job: str, target: str):
        self.job = job
        self.target = target
        super().__init__(f"job {job!r} needs unknown job {target!r}")


class GraphCycleError(Exception):
    def __init__(self, members: list[str]):
        self.members = members
        super().__init__(f"dependency cycle among {', '.join(members)}")


def compute_yaml_hash(raw_bytes: bytes) -> str:
    """SHA-256 of the raw configuration bytes, lowercase hex (content identity)."""
    return hashlib.sha256(raw_bytes).hexdigest()


def validate(pipeline: Pipeline) -> list[Violation]:
    """Check every structural invariant; an empty report means valid.

    Violations are data, not failures: the report is deterministic, ordered
    by rule id then entity name.
    """
    out: list[Violation] = []

    seen_stages = set()
    for name in pipeline.stage_order:
        if name in seen_stages:
            out.append(Violation("stage-duplicate", name, f"stage {name!r} declared twice"))
        seen_stages.add(name)

    job_names = [j.name for j in pipeline.jobs]
    name_counts: dict[str, int] = {}
    for n in job_names:
        name_counts[n] = name_counts.get(n, 0) + 1
    for n, c in sorted(name_counts.items()):
        if c > 1:
            out.append(Violation("job-duplicate", n, f"job {n!r} defined {c} times"))

    stage_pos = {name: i for i, name in enumerate(pipeline.stage_order)}
    for job in pipeline.jobs:
        if not job.name or job.name.startswith("."):
            out.append(Violation("job-name", job.name, f"job name {job.name!r} is invalid"))
        if job.stage not in stage_pos:
            out.append(
                Violation("job-stage-unknown", job.name, f"stage {job.stage!r} not in stage_order")
            )
        seen_needs = set()
        for target in job.needs:
            if target == job.name:
                out.append(Violation("needs-self", job.name, "job needs itself"))
            if target in seen_needs:
                out.append(
                    Violation("needs-duplicate", job.name, f"need {target!r} listed twice")
                )
            seen_needs.add(target)
            if name_counts.get(target, 0) != 1:
                out.append(
                    Violation(
                        "needs-unresolved",
                        job.name,
                        f"need {target!r} does not resolve to exactly one job",
                    )
                )
            else:
                target_job = pipeline.job(target)
                if (
                    job.stage in stage_pos
                    and target_job.stage in stage_pos
                    and stage_pos[target_job.stage] > stage_pos[job.stage]
                ):
                    out.append(
                        Violation(
                            "needs-later-stage",
                            job.name,
                            f"need {target!r} lives in a later stage",
                        )
                    )

    for cycle in _needs_cycles(pipeline):
        out.append(
            Violation("needs-cycle", ", ".join(cycle), f"needs cycle among {', '.join(cycle)}")
        )

    for tmpl in pipeline.templates:
        if not tmpl.name.startswith("."):
            out.append(
                Violation("template-name", tmpl.name, f"template {tmpl.name!r} lacks '.' prefix")
            )

    _check_unique_variables(pipeline.variables, pipeline.file_path or "pipeline", out)
    for job in pipeline.jobs:
        _check_unique_variables(job.variables, job.name, out)

    seen_triggers = set()
    for trig in pipeline.triggers:
        if trig.trigger_type in seen_triggers:
            out.append(
                Violation(
                    "trigger-duplicate",
                    trig.trigger_type.value,
                    f"trigger {trig.trigger_type.value!r} listed twice",
                )
            )
        seen_triggers.add(trig.trigger_type)

    out.sort(key=lambda v: (v.rule, v.entity))
    return out


def _check_unique_variables(variables: tuple[Variable, ...], owner: str, out: list[Violation]):
    seen = set()
    for var in variables:
        if var.key in seen:
            out.append(
                Violation("variable-duplicate", owner, f"variable {var.key!r} defined twice")
            )
        seen.add(var.key)


def _needs_cycles(pipeline: Pipeline) -> list[list[str]]:
    """Strongly connected components of size > 1 in the needs graph, sorted."""
    names = {j.name for j in pipeline.jobs}
    adj: dict[str, list[str]] = {n: [] for n in names}
    for job in pipeline.jobs:
        for target in job.needs:
            if target in names and target != job.name:
                adj[target].append(job.name)

    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    counter = [0]
    sccs: list[list[str]] = []

    def strongconnect(root: str):
        # iterative Tarjan to survive deep graphs
        work = [(root, iter(adj[root]))]
        index[root] = low[root] = counter[0]
        counter[0] += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, it = work[-1]
            advanced = False
            for succ in it:
                if succ not in index:
                    index[succ] = low[succ] = counter[0]
                    counter[0] += 1
                    stack.append(succ)
                    on_stack.add(succ)
                    work.append((succ, iter(adj[succ])))
                    advanced = True
                    break
                if succ in on_stack:
                    low[node] = min(low[node], index[succ])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                comp = []
                while True:
                    member = stack.pop()
                    on_stack.discard(member)
                    comp.append(member)
                    if member == node:
                        break
                if len(comp) > 1:
                    sccs.append(sorted(comp))

    for name in sorted(names):
        if name not in index:
            strongconnect(name)
    sccs.sort()
    return sccs


def needs_graph(pipeline: Pipeline) -> dict[str, list[str]]:
    """Directed graph over job names: edge u -> v iff v declares u in needs."""
    names = {j.name for j in pipeline.jobs}
    adj: dict[str, list[str]] = {j.name: [] for j in pipeline.jobs}
    for job in pipeline.jobs:
        for target in job.needs:
            if target not in names:
                raise NeedsResolutionError(job.name, target)
            adj[target].append(job.name)
    for key in adj:
        adj[key].sort()
    return adj


def topological_order(adj: dict[str, list[str]]) -> list[str]:
    """Kahn's algorithm with a name-ordered frontier (deterministic output)."""
    indegree = {n: 0 for n in adj}
    for succs in adj.values():
        for s in succs:
            indegree[s] += 1
    frontier = [n for n, d in sorted(indegree.items()) if d == 0]
    heapq.heapify(frontier)
    order = []
    while frontier:
        node = heapq.heappop(frontier)
        order.append(node)
        for succ in adj[node]:
            indegree[succ] -= 1
            if indegree[succ] == 0:
                heapq.heappush(frontier, succ)
    if len(order) != len(adj):
        leftover = sorted(n for n in adj if n not in set(order))
        raise GraphCycleError(leftover)
    return order


# --- canonical JSON form (schema pipetwin.model/1) ---


def canonical_json(value) -> str:
    """Stable textual form: sorted keys, compact separators."""
    return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def _condition_to_dict(c: Condition) -> dict:
    expr = list(c.expression) if isinstance(c.expression, tuple) else c.expression
    return {"kind": c.kind.value, "expression": expr}


def _condition_from_dict(d: dict) -> Condition:
    expr = d["expression"]
    if isinstance(expr, list):
        expr = tuple(expr)
    return Condition(kind=ConditionKind(d["kind"]), expression=expr)


def _variable_to_dict(v: Variable) -> dict:
    return {"key": v.key, "value": v.value, "scope": v.scope}


def _variable_from_dict(d: dict) -> Variable:
    return Variable(key=d["key"], value=d["value"], scope=d["scope"])


def job_to_dict(job: Job) -> dict:
    return {
        "name": job.name,
        "stage": job.stage,
        "script": list(job.script),
        "image": job.image,
        "when": job.when.value,
        "allow_failure": job.allow_failure,
        "needs": list(job.needs),
        "conditions": [_condition_to_dict(c) for c in job.conditions],
        "variables": [_variable_to_dict(v) for v in job.variables],
        "tags": list(job.tags),
        "retry": job.retry,
    }


def job_from_dict(d: dict) -> Job:
    return Job(
        name=d["name"],
        stage=d["stage"],
        script=tuple(d["script"]),
        image=d["image"],
        when=WhenPolicy(d["when"]),
        allow_failure=d["allow_failure"],
        needs=tuple(d["needs"]),
        conditions=tuple(_condition_from_dict(c) for c in d["conditions"]),
        variables=tuple(_variable_from_dict(v) for v in d["variables"]),
        tags=tuple(d["tags"]),
        retry=d["retry"],
    )


def fragment_to_dict(frag: JobFragment) -> dict:
    out: dict = {}
    if frag.stage is not None:
        out["stage"] = frag.stage
    if frag.script is not None:
        out["script"] = list(frag.script)
    if frag.image is not None:
        out["image"] = frag.image
    if frag.when is not None:
        out["when"] = frag.when.value
    if frag.allow_failure is not None:
        out["allow_failure"] = frag.allow_failure
    if frag.needs is not None:
        out["needs"] = list(frag.needs)
    if frag.conditions is not None:
        out["conditions"] = [_condition_to_dict(c) for c in frag.conditions]
    if frag.variables is not None:
        out["variables"] = [_variable_to_dict(v) for v in frag.variables]
    if frag.tags is not None:
        out["tags"] = list(frag.tags)
    if frag.retry is not None:
        out["retry"] = frag.retry
    return out


def fragment_from_dict(d: dict) -> JobFragment:
    return JobFragment(
        stage=d.get("stage"),
        script=tuple(d["script"]) if "script" in d else None,
        image=d.get("image"),
        when=WhenPolicy(d["when"]) if "when" in d else None,
        allow_failure=d.get("allow_failure"),
        needs=tuple(d["needs"]) if "needs" in d else None,
        conditions=tuple(_condition_from_dict(c) for c in d["conditions"])
        if "conditions" in d
        else None,
        variables=tuple(_variable_from_dict(v) for v in d["variables"])
        if "variables" in d
        else None,
        tags=tuple(d["tags"]) if "tags" in d else None,
        retry=d.get("retry"),
    )


def pipeline_to_dict(p: Pipeline) -> dict:
    return {
        "schema": SCHEMA_MODEL,
        "ref": p.ref,
        "commit_sha": p.commit_sha,
        "file_path": p.file_path,
        "yaml_hash": p.yaml_hash,
        "stage_order": list(p.stage_order),
        "jobs": [job_to_dict(j) for j in p.jobs],
        "templates": [{"name": t.name, "body": fragment_to_dict(t.body)} for t in p.templates],
        "variables": [_variable_to_dict(v) for v in p.variables],
        "triggers": [{"trigger_type": t.trigger_type.value} for t in p.triggers],
    }


def pipeline_from_dict(d: dict) -> Pipeline:
    if d.get("schema") != SCHEMA_MODEL:
        raise ValueError(f"expected schema {SCHEMA_MODEL!r}, got {d.get('schema')!r}")
    return Pipeline(
        ref=d["ref"],
        commit_sha=d["commit_sha"],
        file_path=d["file_path"],
        yaml_hash=d["yaml_hash"],
        stage_order=tuple(d["stage_order"]),
        jobs=tuple(job_from_dict(j) for j in d["jobs"]),
        templates=tuple(
            Template(name=t["name"], body=fragment_from_dict(t["body"])) for t in d["templates"]
        ),
        variables=tuple(_variable_from_dict(v) for v in d["variables"]),
        triggers=tuple(Trigger(TriggerType(t["trigger_type"])) for t in d["triggers"]),
    )


def run_to_dict(run: PipelineRun) -> dict:
    return {
        "schema": SCHEMA_RUN,
        "run_id": run.run_id,
        "pipeline_yaml_hash": run.pipeline_yaml_hash,
        "status": run.status.value,
        "started_at": run.started_at,
        "finished_at": run.finished_at,
        "duration_s": run.duration_s,
        "source": run.source.value if run.source else None,
        "job_runs": [
            {
                "job_name": jr.job_name,
                "status": jr.status.value,
                "started_at": jr.started_at,
                "finished_at": jr.finished_at,
                "duration_s": jr.duration_s,
                "queued_s": jr.queued_s,
                "failure_reason": jr.failure_reason,
            }
            for jr in run.job_runs
        ],
    }


def run_from_dict(d: dict) -> PipelineRun:
    if d.get("schema") != SCHEMA_RUN:
        raise ValueError(f"expected schema {SCHEMA_RUN!r}, got {d.get('schema')!r}")
    return PipelineRun(
        run_id=d["run_id"],
        pipeline_yaml_hash=d["pipeline_yaml_hash"],
        status=ExecutionStatus(d["status"]),
        started_at=d["started_at"],
        finished_at=d["finished_at"],
        duration_s=d["duration_s"],
        source=TriggerType(d["source"]) if d["source"] else None,
        job_runs=tuple(
            JobRun(
                job_name=jr["job_name"],
                status=ExecutionStatus(jr["status"]),
                started_at=jr["started_at"],
                finished_at=jr["finished_at"],
                duration_s=jr["duration_s"],
                queued_s=jr["queued_s"],
                failure_reason=jr["failure_reason"],
            )
            for jr in d["job_runs"]
        ),
    )
