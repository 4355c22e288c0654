"""Structural comparison of two pipeline versions and its BPMN projection.

Three phases: the metamodel instances are the extraction product, set
differences plus field-level comparison produce the StructuralDiff, and
project() maps change kinds onto BPMN element ids for visual overlays.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .bpmn import BpmnDocument
from .model import JobFragment, Pipeline, fragment_to_dict, job_to_dict

SCHEMA_DIFF = "pipetwin.diff/1"

JOB_FIELDS = (
    "stage",
    "image",
    "needs",
    "conditions",
    "when",
    "script",
    "variables",
    "allow_failure",
    "tags",
    "retry",
)

ADDED = "added"
REMOVED = "removed"
MODIFIED = "modified"


class MissingElementError(Exception):
    def __init__(self, name: str, version: str):
        self.name = name
        self.version = version
        super().__init__(f"job {name!r} missing from {version} element index")


@dataclass(frozen=True)
class FieldChange:
    field: str
    before: object
    after: object


@dataclass(frozen=True)
class JobDelta:
    name: str
    field_changes: tuple[FieldChange, ...]


@dataclass(frozen=True)
class CountDeltas:
    stages_before: int
    stages_after: int
    stages_delta: int
    jobs_before: int
    jobs_after: int
    jobs_delta: int


@dataclass(frozen=True)
class VariableChange:
    key: str
    before: str | None
    after: str | None


@dataclass(frozen=True)
class StructuralDiff:
    added_jobs: tuple[str, ...]
    removed_jobs: tuple[str, ...]
    modified_jobs: tuple[JobDelta, ...]
    added_templates: tuple[str, ...]
    removed_templates: tuple[str, ...]
    modified_templates: tuple[JobDelta, ...]
    added_stages: tuple[str, ...]
    removed_stages: tuple[str, ...]
    variable_changes: tuple[VariableChange, ...]
    trigger_changes_added: tuple[str, ...]
    trigger_changes_removed: tuple[str, ...]
    summary: CountDeltas

    def is_empty(self) -> bool:
        return not (
            self.added_jobs
            or self.removed_jobs
            or self.modified_jobs
            or self.added_templates
            or self.removed_templates
            or self.modified_templates
            or self.added_stages
            or self.removed_stages
            or self.variable_changes
            or self.trigger_changes_added
            or self.trigger_changes_removed
        )


@dataclass(frozen=True)
class DiffOverlay:
    """Map of BPMN element id to change kind for one version's diagram."""

    entries: dict[str, str] = field(default_factory=dict)


def _field_equal(name: str, a: dict, b: dict) -> bool:
    if name in ("needs", "tags"):
        return set(a[name]) == set(b[name])
    if name == "variables":
        return {v["key"]: v["value"] for v in a[name]} == {
            v["key"]: v["value"] for v in b[name]
        }
    return a[name] == b[name]


def _job_delta(name: str, before: dict, after: dict) -> JobDelta | None:
    changes = []
    for fname in JOB_FIELDS:
        if not _field_equal(fname, before, after):
            changes.append(FieldChange(fname, before[fname], after[fname]))
    if not changes:
        return None
    return JobDelta(name=name, field_changes=tuple(changes))


def _fragment_view(frag: JobFragment) -> dict:
    """Fragment rendered over the full job field vocabulary (None = unset)."""
    raw = fragment_to_dict(frag)
    return {fname: raw.get(fname) for fname in JOB_FIELDS}


def _fragment_equal(name: str, a: dict, b: dict) -> bool:
    if a[name] is None or b[name] is None:
        return a[name] == b[name]
    return _field_equal(name, a, b)


def _template_delta(name: str, before: JobFragment, after: JobFragment) -> JobDelta | None:
    va, vb = _fragment_view(before), _fragment_view(after)
    changes = []
    for fname in JOB_FIELDS:
        if not _fragment_equal(fname, va, vb):
            changes.append(FieldChange(fname, va[fname], vb[fname]))
    if not changes:
        return None
    return JobDelta(name=name, field_changes=tuple(changes))


def diff(v1: Pipeline, v2: Pipeline) -> StructuralDiff:
    """Set differences for entities, field-level comparison for shared ones.

    Output is deterministic: every list is name-sorted. needs and tags
    compare as sets, script and conditions as ordered sequences; a renamed
    job shows up as one removal plus one addition.
    """
    jobs1 = {j.name: job_to_dict(j) for j in v1.jobs}
    jobs2 = {j.name: job_to_dict(j) for j in v2.jobs}
    added = sorted(set(jobs2) - set(jobs1))
    removed = sorted(set(jobs1) - set(jobs2))
    modified = []
    for name in sorted(set(jobs1) & set(jobs2)):
        delta = _job_delta(name, jobs1[name], jobs2[name])
        if delta:
            modified.append(delta)

    tmpl1 = {t.name: t.body for t in v1.templates}
    tmpl2 = {t.name: t.body for t in v2.templates}
    tmpl_added = sorted(set(tmpl2) - set(tmpl1))
    tmpl_removed = sorted(set(tmpl1) - set(tmpl2))
    tmpl_modified = []
    for name in sorted(set(tmpl1) & set(tmpl2)):
        delta = _template_delta(name, tmpl1[name], tmpl2[name])
        if delta:
            tmpl_modified.append(delta)

    stages1, stages2 = set(v1.stage_order), set(v2.stage_order)

    vars1 = {v.key: v.value for v in v1.variables}
    vars2 = {v.key: v.value for v in v2.variables}
    var_changes = []
    for key in sorted(set(vars1) | set(vars2)):
        before, after = vars1.get(key), vars2.get(key)
        if before != after:
            var_changes.append(VariableChange(key=key, before=before, after=after))

    trig1 = {t.trigger_type.value for t in v1.triggers}
    trig2 = {t.trigger_type.value for t in v2.triggers}

    return StructuralDiff(
        added_jobs=tuple(added),
        removed_jobs=tuple(removed),
        modified_jobs=tuple(modified),
        added_templates=tuple(tmpl_added),
        removed_templates=tuple(tmpl_removed),
        modified_templates=tuple(tmpl_modified),
        added_stages=tuple(sorted(stages2 - stages1)),
        removed_stages=tuple(sorted(stages1 - stages2)),
        variable_changes=tuple(var_changes),
        trigger_changes_added=tuple(sorted(trig2 - trig1)),
        trigger_changes_removed=tuple(sorted(trig1 - trig2)),
        summary=CountDeltas(
            stages_before=len(v1.stage_order),
            stages_after=len(v2.stage_order),
            stages_delta=len(v2.stage_order) - len(v1.stage_order),
            jobs_before=len(v1.jobs),
            jobs_after=len(v2.jobs),
            jobs_delta=len(v2.jobs) - len(v1.jobs),
        ),
    )


def project(
    structural: StructuralDiff, b1: BpmnDocument, b2: BpmnDocument
) -> tuple[DiffOverlay, DiffOverlay]:
    """Change kinds keyed by BPMN element id, one overlay per version.

    Removed jobs annotate the old diagram, added jobs the new one, modified
    jobs both; lanes are annotated for stage changes when the stage was
    actually rendered (a stage with no jobs has no lane).
    """
    o1: dict[str, str] = {}
    o2: dict[str, str] = {}
    for name in structural.removed_jobs:
        o1[_element(b1, name, "v1")] = REMOVED
    for name in structural.added_jobs:
        o2[_element(b2, name, "v2")] = ADDED
    for delta in structural.modified_jobs:
        o1[_element(b1, delta.name, "v1")] = MODIFIED
        o2[_element(b2, delta.name, "v2")] = MODIFIED
    for stage in structural.removed_stages:
        if stage in b1.lane_index:
            o1[b1.lane_index[stage]] = REMOVED
    for stage in structural.added_stages:
        if stage in b2.lane_index:
            o2[b2.lane_index[stage]] = ADDED
    return DiffOverlay(o1), DiffOverlay(o2)


def _element(doc: BpmnDocument, name: str, version: str) -> str:
    if name not in doc.element_index:
        raise MissingElementError(name, version)
    return doc.element_index[name]


def diff_to_dict(d: StructuralDiff) -> dict:
    def deltas(items):
        return [
            {
                "name": jd.name,
                "field_changes": [
                    {"field": fc.field, "before": fc.before, "after": fc.after}
                    for fc in jd.field_changes
                ],
            }
            for jd in items
        ]

    return {
        "schema": SCHEMA_DIFF,
        "added_jobs": list(d.added_jobs),
        "removed_jobs": list(d.removed_jobs),
        "modified_jobs": deltas(d.modified_jobs),
        "added_templates": list(d.added_templates),
        "removed_templates": list(d.removed_templates),
        "modified_templates": deltas(d.modified_templates),
        "added_stages": list(d.added_stages),
        "removed_stages": list(d.removed_stages),
        "variable_changes": [
            {"key": vc.key, "before": vc.before, "after": vc.after}
            for vc in d.variable_changes
        ],
        "trigger_changes": {
            "added": list(d.trigger_changes_added),
            "removed": list(d.trigger_changes_removed),
        },
        "summary": {
            "stages_before": d.summary.stages_before,
            "stages_after": d.summary.stages_after,
            "stages_delta": d.summary.stages_delta,
            "jobs_before": d.summary.jobs_before,
            "jobs_after": d.summary.jobs_after,
            "jobs_delta": d.summary.jobs_delta,
        },
    }


def format_diff_text(d: StructuralDiff) -> str:
    """Human-readable terminal summary: counts first, one line per change."""
    s = d.summary
    lines = [
        f"stages {s.stages_before} -> {s.stages_after} ({s.stages_delta:+d})",
        f"jobs {s.jobs_before} -> {s.jobs_after} ({s.jobs_delta:+d})",
        f"{len(d.added_jobs)} added, {len(d.removed_jobs)} removed, "
        f"{len(d.modified_jobs)} modified",
    ]
    for name in d.added_jobs:
        lines.append(f"+ job {name}")
    for name in d.removed_jobs:
        lines.append(f"- job {name}")
    for delta in d.modified_jobs:
        fields = ", ".join(fc.field for fc in delta.field_changes)
        lines.append(f"~ job {delta.name} ({len(delta.field_changes)} fields: {fields})")
    for name in d.added_templates:
        lines.append(f"+ template {name}")
    for name in d.removed_templates:
        lines.append(f"- template {name}")
    for delta in d.modified_templates:
        fields = ", ".join(fc.field for fc in delta.field_changes)
        lines.append(f"~ template {delta.name} ({len(delta.field_changes)} fields: {fields})")
    for name in d.added_stages:
        lines.append(f"+ stage {name}")
    for name in d.removed_stages:
        lines.append(f"- stage {name}")
    for vc in d.variable_changes:
        if vc.before is None:
            lines.append(f"+ variable {vc.key}")
        elif vc.after is None:
            lines.append(f"- variable {vc.key}")
        else:
            lines.append(f"~ variable {vc.key}")
    for name in d.trigger_changes_added:
        lines.append(f"+ trigger {name}")
    for name in d.trigger_changes_removed:
        lines.append(f"- trigger {name}")
    return "\n".join(lines)
