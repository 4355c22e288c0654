"""Turns one raw `.gitlab-ci.yml` document into a validated Pipeline.

Pure functions over immutable inputs: section splitting, extends resolution,
default application, trigger extraction from workflow rules.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import yaml

from .model import (
    Condition,
    ConditionKind,
    Job,
    JobFragment,
    Pipeline,
    SCOPE_JOB,
    SCOPE_PIPELINE,
    Template,
    Trigger,
    TriggerType,
    Variable,
    WhenPolicy,
    compute_yaml_hash,
    validate,
)

RESERVED_KEYS = ("default", "variables", "workflow", "stages", "image", "services", "include")

DEFAULT_STAGE = "test"
MAX_EXTENDS_DEPTH = 16

_SOURCE_RULE = re.compile(r"^\s*\$CI_PIPELINE_SOURCE\s*==\s*[\"']([A-Za-z_]+)[\"']\s*$")
_TAG_RULE = re.compile(r"^\s*\$CI_COMMIT_TAG\s*$")

_SOURCE_TO_TRIGGER = {
    "push": TriggerType.PUSH,
    "merge_request_event": TriggerType.MERGE_REQUEST,
    "schedule": TriggerType.SCHEDULE,
    "api": TriggerType.API,
    "web": TriggerType.WEB,
    "trigger": TriggerType.API,
}


class ParseError(Exception):
    """Base class for configuration parsing failures."""


class YamlSyntaxError(ParseError):
    pass


class NotAMappingError(ParseError):
    pass


class UnknownTemplateError(ParseError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"extends references unknown template {name!r}")


class ExtendsCycleError(ParseError):
    def __init__(self, chain: list[str]):
        self.chain = chain
        super().__init__(f"extends cycle: {' -> '.join(chain)}")


class MaxDepthExceededError(ParseError):
    pass


class UnknownWhenPolicyError(ParseError):
    def __init__(self, job: str, value):
        self.job = job
        self.value = value
        super().__init__(f"job {job!r} has unknown when policy {value!r}")


class ValidationFailedError(ParseError):
    """Wraps a non-empty validation report."""

    def __init__(self, violations):
        self.violations = violations
        lines = "; ".join(f"{v.rule}({v.entity})" for v in violations)
        super().__init__(f"pipeline violates invariants: {lines}")


@dataclass(frozen=True)
class Provenance:
    ref: str = ""
    commit_sha: str = ""
    file_path: str = ".gitlab-ci.yml"


@dataclass(frozen=True)
class RawConfig:
    raw_bytes: bytes
    provenance: Provenance = Provenance()


@dataclass(frozen=True)
class SectionSplit:
    """Top-level keys partitioned into reserved directives, templates, jobs."""

    reserved: dict
    templates: dict
    job_nodes: dict


@dataclass
class ParseResult:
    pipeline: Pipeline
    warnings: list[str] = field(default_factory=list)


def split_sections(doc: dict) -> SectionSplit:
    """Partition top-level keys; the three sets are disjoint and cover all keys."""
    reserved, templates, job_nodes = {}, {}, {}
    for key, node in doc.items():
        key = str(key)
        if key in RESERVED_KEYS:
            reserved[key] = node
        elif key.startswith("."):
            templates[key] = node
        else:
            job_nodes[key] = node
    return SectionSplit(reserved=reserved, templates=templates, job_nodes=job_nodes)


def resolve_extends(job_node: dict, templates: dict, *, _name: str = "") -> dict:
    """Depth-first merge of the extends chain, base-most first, job keys last.

    Scalar and list keys replace; mapping keys (variables) merge key-wise with
    the extending side winning. The result carries no `extends` key.
    """
    return _resolve(job_node, templates, [_name] if _name else [])


def _resolve(node: dict, templates: dict, chain: list[str]) -> dict:
    if len(chain) > MAX_EXTENDS_DEPTH:
        raise MaxDepthExceededError(f"extends chain longer than {MAX_EXTENDS_DEPTH}")
    if not isinstance(node, dict):
        return {}
    raw = node.get("extends")
    if raw is None:
        return {k: v for k, v in node.items() if k != "extends"}
    bases = [raw] if isinstance(raw, str) else list(raw)
    merged: dict = {}
    for base_name in bases:
        if base_name in chain:
            raise ExtendsCycleError(chain + [base_name])
        if base_name not in templates:
            raise UnknownTemplateError(base_name)
        base = _resolve(templates[base_name] or {}, templates, chain + [base_name])
        merged = _merge_nodes(merged, base)
    own = {k: v for k, v in node.items() if k != "extends"}
    return _merge_nodes(merged, own)


def _merge_nodes(base: dict, overlay: dict) -> dict:
    out = dict(base)
    for key, value in overlay.items():
        if key in out and isinstance(out[key], dict) and isinstance(value, dict):
            inner = dict(out[key])
            inner.update(value)
            out[key] = inner
        else:
            out[key] = value
    return out


def extract_triggers(workflow_node, warnings: list[str] | None = None) -> list[Trigger]:
    """Typed triggers from workflow rules; unknown rule shapes warn, never fail."""
    if warnings is None:
        warnings = []
    if not isinstance(workflow_node, dict):
        return []
    rules = workflow_node.get("rules")
    if not isinstance(rules, list):
        return []
    seen: list[TriggerType] = []
    for rule in rules:
        if not isinstance(rule, dict) or "if" not in rule:
            warnings.append(f"workflow rule without trigger pattern ignored: {rule!r}")
            continue
        expr = str(rule["if"])
        match = _SOURCE_RULE.match(expr)
        if match:
            source = match.group(1)
            trigger = _SOURCE_TO_TRIGGER.get(source)
            if trigger is None:
                warnings.append(f"workflow rule names unknown pipeline source {source!r}")
                continue
        elif _TAG_RULE.match(expr):
            trigger = TriggerType.TAG_PUSH
        else:
            warnings.append(f"workflow rule does not match trigger pattern: {expr!r}")
            continue
        if trigger not in seen:
            seen.append(trigger)
    return [Trigger(t) for t in seen]


def parse(config: RawConfig) -> Pipeline:
    """Parse and validate; raises on any syntax or invariant failure."""
    return parse_result(config).pipeline


def parse_result(config: RawConfig) -> ParseResult:
    """Like parse, additionally reporting non-fatal warnings."""
    warnings: list[str] = []
    try:
        doc = yaml.safe_load(config.raw_bytes.decode("utf-8"))
    except (yaml.YAMLError, UnicodeDecodeError) as exc:
        raise YamlSyntaxError(str(exc)) from exc
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise NotAMappingError(f"top level is {type(doc).__name__}, expected a mapping")

    split = split_sections(doc)
    reserved = split.reserved

    if "include" in reserved:
        warnings.append("include: present; external definitions are not fetched")

    default_node = reserved.get("default") or {}
    if not isinstance(default_node, dict):
        default_node = {}

    declared_stages = reserved.get("stages") or []
    if not isinstance(declared_stages, list):
        declared_stages = [declared_stages]
    stage_order = [str(s) for s in declared_stages]

    triggers = extract_triggers(reserved.get("workflow"), warnings)
    pipeline_vars = _parse_variables(reserved.get("variables"), SCOPE_PIPELINE)

    jobs = []
    for name, node in split.job_nodes.items():
        merged = _resolve(node if isinstance(node, dict) else {}, split.templates, [name])
        job = _build_job(str(name), merged, default_node, warnings)
        if job.stage not in stage_order:
            stage_order.append(job.stage)
        jobs.append(job)

    templates = tuple(
        Template(name=str(name), body=_build_fragment(str(name), node, warnings))
        for name, node in split.templates.items()
    )

    pipeline = Pipeline(
        ref=config.provenance.ref,
        commit_sha=config.provenance.commit_sha,
        file_path=config.provenance.file_path,
        yaml_hash=compute_yaml_hash(config.raw_bytes),
        stage_order=tuple(stage_order),
        jobs=tuple(jobs),
        templates=templates,
        variables=pipeline_vars,
        triggers=tuple(triggers),
    )
    violations = validate(pipeline)
    if violations:
        raise ValidationFailedError(violations)
    return ParseResult(pipeline=pipeline, warnings=warnings)


def _parse_variables(node, scope: str) -> tuple[Variable, ...]:
    if not isinstance(node, dict):
        return ()
    out = []
    for key, value in node.items():
        # GitLab long form: {value: ..., description: ...}
        if isinstance(value, dict):
            value = value.get("value", "")
        out.append(Variable(key=str(key), value=_to_str(value), scope=scope))
    return tuple(out)


def _to_str(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def _normalize_script(value) -> tuple[str, ...]:
    if value is None:
        return ()
    if isinstance(value, str):
        return (value,)
    if isinstance(value, list):
        return tuple(_to_str(item) for item in value)
    return (_to_str(value),)


def _parse_when(raw, owner: str) -> WhenPolicy:
    try:
        return WhenPolicy(str(raw))
    except ValueError:
        raise UnknownWhenPolicyError(owner, raw) from None


def _parse_needs(value, warnings: list[str], owner: str) -> tuple[str, ...]:
    if value is None:
        return ()
    if not isinstance(value, list):
        value = [value]
    out = []
    for entry in value:
        if isinstance(entry, dict):
            # long form: {job: name, optional: true, ...}
            if "job" in entry:
                out.append(str(entry["job"]))
            else:
                warnings.append(f"job {owner!r}: unrecognized needs entry {entry!r}")
        else:
            out.append(str(entry))
    return tuple(out)


def _parse_retry(value, warnings: list[str], owner: str) -> int | None:
    if value is None:
        return None
    if isinstance(value, bool):
        return None
    if isinstance(value, int):
        return max(value, 0)
    if isinstance(value, dict) and isinstance(value.get("max"), int):
        return max(value["max"], 0)
    warnings.append(f"job {owner!r}: unrecognized retry form {value!r}")
    return None


def _parse_conditions(node: dict, warnings: list[str], owner: str) -> tuple[Condition, ...]:
    out: list[Condition] = []
    rules = node.get("rules")
    if isinstance(rules, list):
        for rule in rules:
            if not isinstance(rule, dict):
                continue
            if "if" in rule:
                out.append(Condition(ConditionKind.IF, _to_str(rule["if"])))
            if "changes" in rule:
                out.append(Condition(ConditionKind.CHANGES, _pattern_tuple(rule["changes"])))
            if "exists" in rule:
                out.append(Condition(ConditionKind.EXISTS, _pattern_tuple(rule["exists"])))
    # legacy only/except: stored as synthesized `if` conditions, never triggers
    for legacy in ("only", "except"):
        if legacy in node:
            expression = f"legacy-{legacy}: {_flatten_legacy(node[legacy])}"
            out.append(Condition(ConditionKind.IF, expression))
    return tuple(out)


def _pattern_tuple(value) -> tuple[str, ...]:
    if isinstance(value, list):
        return tuple(_to_str(v) for v in value)
    return (_to_str(value),)


def _flatten_legacy(value) -> str:
    if isinstance(value, list):
        return ", ".join(_to_str(v) for v in value)
    if isinstance(value, dict):
        return ", ".join(f"{k}={_flatten_legacy(v)}" for k, v in value.items())
    return _to_str(value)


def _build_job(name: str, node: dict, default_node: dict, warnings: list[str]) -> Job:
    stage = _to_str(node.get("stage")) if node.get("stage") is not None else DEFAULT_STAGE
    when = _parse_when(node["when"], name) if "when" in node else WhenPolicy.ON_SUCCESS

    image = node.get("image")
    if image is None:
        image = default_node.get("image")
    tags = node.get("tags")
    if tags is None:
        tags = default_node.get("tags")
    retry_raw = node.get("retry")
    if retry_raw is None:
        retry_raw = default_node.get("retry")

    return Job(
        name=name,
        stage=stage,
        script=_normalize_script(node.get("script")),
        image=_image_name(image),
        when=when,
        allow_failure=bool(node.get("allow_failure", False)),
        needs=_parse_needs(node.get("needs"), warnings, name),
        conditions=_parse_conditions(node, warnings, name),
        variables=_parse_variables(node.get("variables"), SCOPE_JOB),
        tags=_pattern_tuple(tags) if tags is not None else (),
        retry=_parse_retry(retry_raw, warnings, name),
    )


def _image_name(value) -> str | None:
    if value is None:
        return None
    if isinstance(value, dict):
        return _to_str(value.get("name"))
    return _to_str(value)


def _build_fragment(name: str, node, warnings: list[str]) -> JobFragment:
    """Pre-merge template body; only recognized job attributes are kept."""
    if not isinstance(node, dict):
        return JobFragment()
    conditions = _parse_conditions(node, warnings, name)
    return JobFragment(
        stage=_to_str(node["stage"]) if "stage" in node else None,
        script=_normalize_script(node["script"]) if "script" in node else None,
        image=_image_name(node["image"]) if "image" in node else None,
        when=_parse_when(node["when"], name) if "when" in node else None,
        allow_failure=bool(node["allow_failure"]) if "allow_failure" in node else None,
        needs=_parse_needs(node["needs"], warnings, name) if "needs" in node else None,
        conditions=conditions if conditions else None,
        variables=_parse_variables(node["variables"], SCOPE_JOB) if "variables" in node else None,
        tags=_pattern_tuple(node["tags"]) if "tags" in node else None,
        retry=_parse_retry(node["retry"], warnings, name) if "retry" in node else None,
    )
