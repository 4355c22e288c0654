"""Shared test machinery: BPMN conformance checking and pipeline generators.

The conformance checker is the schema-validity oracle for generated
documents: well-formedness, ID/IDREF integrity, diagram-interchange
coverage, per-kind degree rules, start-to-end connectivity, and gateway
balance via token-flow simulation. It only reads the XML text, never the
generator's internal structures.
"""

from __future__ import annotations

import random
import xml.etree.ElementTree as ET

from pipetwin.model import (
    Condition,
    ConditionKind,
    Job,
    Pipeline,
    Trigger,
    TriggerType,
    Variable,
    WhenPolicy,
)

NS = {
    "bpmn": "http://www.omg.org/spec/BPMN/20100524/MODEL",
    "bpmndi": "http://www.omg.org/spec/BPMN/20100524/DI",
    "dc": "http://www.omg.org/spec/DD/20100524/DC",
    "di": "http://www.omg.org/spec/DD/20100524/DI",
}

FLOW_NODE_TAGS = (
    "task",
    "userTask",
    "startEvent",
    "endEvent",
    "parallelGateway",
    "exclusiveGateway",
)


class BpmnConformanceError(AssertionError):
    pass


def _tag(element) -> str:
    return element.tag.split("}")[-1]


def check_bpmn_document(xml_text: str) -> dict:
    """Raise BpmnConformanceError on any structural violation; return an
    inventory of element counts for further assertions."""
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as exc:
        raise BpmnConformanceError(f"not well-formed XML: {exc}")

    if _tag(root) != "definitions":
        raise BpmnConformanceError(f"root element is {_tag(root)}, expected definitions")
    process = root.find("bpmn:process", NS)
    if process is None:
        raise BpmnConformanceError("missing bpmn:process")
    plane = root.find("bpmndi:BPMNDiagram/bpmndi:BPMNPlane", NS)
    if plane is None:
        raise BpmnConformanceError("missing BPMNDI diagram/plane section")

    ids: set[str] = set()
    for element in root.iter():
        element_id = element.get("id")
        if element_id is not None:
            if element_id in ids:
                raise BpmnConformanceError(f"duplicate id {element_id!r}")
            ids.add(element_id)

    nodes: dict[str, str] = {}
    for child in process:
        tag = _tag(child)
        if tag in FLOW_NODE_TAGS:
            nodes[child.get("id")] = tag

    flows: dict[str, tuple[str, str]] = {}
    for flow in process.findall("bpmn:sequenceFlow", NS):
        fid, src, dst = flow.get("id"), flow.get("sourceRef"), flow.get("targetRef")
        if src not in nodes:
            raise BpmnConformanceError(f"{fid}: sourceRef {src!r} is not a flow node")
        if dst not in nodes:
            raise BpmnConformanceError(f"{fid}: targetRef {dst!r} is not a flow node")
        flows[fid] = (src, dst)

    incoming: dict[str, list[str]] = {nid: [] for nid in nodes}
    outgoing: dict[str, list[str]] = {nid: [] for nid in nodes}
    for fid, (src, dst) in flows.items():
        outgoing[src].append(fid)
        incoming[dst].append(fid)

    # incoming/outgoing child elements must mirror the sequence flows
    for child in process:
        tag = _tag(child)
        if tag not in FLOW_NODE_TAGS:
            continue
        nid = child.get("id")
        declared_in = [e.text for e in child.findall("bpmn:incoming", NS)]
        declared_out = [e.text for e in child.findall("bpmn:outgoing", NS)]
        if sorted(declared_in) != sorted(incoming[nid]):
            raise BpmnConformanceError(f"{nid}: incoming refs disagree with sequence flows")
        if sorted(declared_out) != sorted(outgoing[nid]):
            raise BpmnConformanceError(f"{nid}: outgoing refs disagree with sequence flows")

    lanes = process.findall("bpmn:laneSet/bpmn:lane", NS)
    for lane in lanes:
        for ref in lane.findall("bpmn:flowNodeRef", NS):
            if ref.text not in nodes:
                raise BpmnConformanceError(f"lane {lane.get('id')}: unknown ref {ref.text!r}")

    _check_degrees(nodes, incoming, outgoing)
    positions = _check_di(plane, nodes, flows, lanes)
    _check_connectivity(nodes, flows)
    _check_token_flow(nodes, flows)

    return {
        "positions": positions,
        "tasks": sum(1 for t in nodes.values() if t == "task"),
        "user_tasks": sum(1 for t in nodes.values() if t == "userTask"),
        "start_events": sum(1 for t in nodes.values() if t == "startEvent"),
        "end_events": sum(1 for t in nodes.values() if t == "endEvent"),
        "parallel_gateways": sum(1 for t in nodes.values() if t == "parallelGateway"),
        "exclusive_gateways": sum(1 for t in nodes.values() if t == "exclusiveGateway"),
        "lanes": len(lanes),
        "flows": len(flows),
        "nodes": nodes,
        "flow_pairs": flows,
    }


def _check_degrees(nodes, incoming, outgoing):
    for nid, kind in nodes.items():
        n_in, n_out = len(incoming[nid]), len(outgoing[nid])
        if kind == "startEvent":
            if n_in != 0 or n_out != 1:
                raise BpmnConformanceError(f"{nid}: start event degree {n_in}/{n_out}")
        elif kind == "endEvent":
            if n_in != 1 or n_out != 0:
                raise BpmnConformanceError(f"{nid}: end event degree {n_in}/{n_out}")
        elif kind in ("task", "userTask"):
            if n_in < 1 or n_out < 1:
                raise BpmnConformanceError(f"{nid}: activity degree {n_in}/{n_out}")
        elif kind == "parallelGateway":
            fork = n_in == 1 and n_out >= 2
            join = n_in >= 2 and n_out == 1
            if not (fork or join):
                raise BpmnConformanceError(f"{nid}: parallel gateway degree {n_in}/{n_out}")
        elif kind == "exclusiveGateway":
            if not (n_in >= 2 and n_out == 1):
                raise BpmnConformanceError(f"{nid}: exclusive gateway degree {n_in}/{n_out}")


def _check_di(plane, nodes, flows, lanes):
    shapes = {}
    edges = {}
    for shape in plane.findall("bpmndi:BPMNShape", NS):
        bounds = shape.find("dc:Bounds", NS)
        if bounds is None:
            raise BpmnConformanceError(f"shape {shape.get('id')}: missing bounds")
        box = tuple(float(bounds.get(attr)) for attr in ("x", "y", "width", "height"))
        shapes[shape.get("bpmnElement")] = box
    for edge in plane.findall("bpmndi:BPMNEdge", NS):
        waypoints = edge.findall("di:waypoint", NS)
        if len(waypoints) < 2:
            raise BpmnConformanceError(f"edge {edge.get('id')}: fewer than 2 waypoints")
        for wp in waypoints:
            float(wp.get("x"))
            float(wp.get("y"))
        edges[edge.get("bpmnElement")] = waypoints
    for nid in nodes:
        if nid not in shapes:
            raise BpmnConformanceError(f"flow node {nid} has no BPMNShape")
    for lane in lanes:
        if lane.get("id") not in shapes:
            raise BpmnConformanceError(f"lane {lane.get('id')} has no BPMNShape")
    for fid in flows:
        if fid not in edges:
            raise BpmnConformanceError(f"sequence flow {fid} has no BPMNEdge")
    return shapes


def _check_connectivity(nodes, flows):
    """Every flow node lies on some start-to-end path."""
    succ: dict[str, list[str]] = {n: [] for n in nodes}
    pred: dict[str, list[str]] = {n: [] for n in nodes}
    for src, dst in flows.values():
        succ[src].append(dst)
        pred[dst].append(src)
    starts = [n for n, k in nodes.items() if k == "startEvent"]
    ends = [n for n, k in nodes.items() if k == "endEvent"]
    if not starts or not ends:
        raise BpmnConformanceError("document lacks a start or end event")

    def reach(seeds, adjacency):
        seen = set(seeds)
        stack = list(seeds)
        while stack:
            for nxt in adjacency[stack.pop()]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return seen

    forward = reach(starts, succ)
    backward = reach(ends, pred)
    for nid in nodes:
        if nid not in forward or nid not in backward:
            raise BpmnConformanceError(f"{nid} is not on any start-to-end path")


def _check_token_flow(nodes, flows):
    """Parallel-gateway balance: from each start event, the token game must
    drain completely (no stuck joins, no leftover tokens)."""
    outgoing: dict[str, list[str]] = {n: [] for n in nodes}
    incoming: dict[str, list[str]] = {n: [] for n in nodes}
    for fid, (src, dst) in flows.items():
        outgoing[src].append(fid)
        incoming[dst].append(fid)
    flow_target = {fid: dst for fid, (_, dst) in flows.items()}

    for start in (n for n, k in nodes.items() if k == "startEvent"):
        tokens: dict[str, int] = {fid: 0 for fid in flows}
        for fid in outgoing[start]:
            tokens[fid] += 1
        progress = True
        while progress:
            progress = False
            for nid, kind in nodes.items():
                if kind in ("startEvent", "endEvent"):
                    continue
                ins = incoming[nid]
                if kind == "parallelGateway" and len(ins) > 1:
                    if ins and all(tokens[f] > 0 for f in ins):
                        for f in ins:
                            tokens[f] -= 1
                        for f in outgoing[nid]:
                            tokens[f] += 1
                        progress = True
                else:
                    for f in ins:
                        while tokens[f] > 0:
                            tokens[f] -= 1
                            for out in outgoing[nid]:
                                tokens[out] += 1
                            progress = True
        stuck = {
            fid: count
            for fid, count in tokens.items()
            if count > 0 and nodes[flow_target[fid]] != "endEvent"
        }
        # tokens on end-event flows are consumed by the end events
        if stuck:
            raise BpmnConformanceError(f"unbalanced gateways from {start}: tokens stuck {stuck}")


# --- pipeline generators for fuzz corpora ---

_WHENS = list(WhenPolicy)
_TRIGGERS = list(TriggerType)


def random_pipeline(rng: random.Random, max_stages: int = 4, max_jobs: int = 8,
                    name_prefix: str = "j") -> Pipeline:
    """Random valid pipeline: needs only point at same-or-earlier stages and
    earlier-created jobs, which keeps the graph acyclic by construction."""
    n_stages = rng.randint(1, max_stages)
    stages = [f"s{i}" for i in range(n_stages)]
    n_jobs = rng.randint(1, max_jobs)
    jobs: list[Job] = []
    for i in range(n_jobs):
        stage_idx = rng.randrange(n_stages)
        candidates = [
            j.name for j in jobs if stages.index(j.stage) <= stage_idx
        ]
        needs = tuple(
            sorted(rng.sample(candidates, k=min(len(candidates), rng.randint(0, 2))))
        ) if candidates and rng.random() < 0.5 else ()
        jobs.append(
            Job(
                name=f"{name_prefix}{i}",
                stage=stages[stage_idx],
                script=tuple(f"step {k}" for k in range(rng.randint(0, 3))),
                image=rng.choice([None, "alpine:3", "debian:12"]),
                when=rng.choice(_WHENS),
                allow_failure=rng.random() < 0.2,
                needs=needs,
                conditions=(Condition(ConditionKind.IF, "$VAR == \"1\""),)
                if rng.random() < 0.3
                else (),
                variables=(Variable("K", "v", "job"),) if rng.random() < 0.3 else (),
                tags=("docker",) if rng.random() < 0.3 else (),
                retry=rng.choice([None, 1, 2]),
            )
        )
    triggers = tuple(
        Trigger(t) for t in rng.sample(_TRIGGERS, k=rng.randint(0, 3))
    )
    return Pipeline(
        ref="main",
        commit_sha="f" * 40,
        file_path=".gitlab-ci.yml",
        yaml_hash="0" * 64,
        stage_order=tuple(stages),
        jobs=tuple(jobs),
        triggers=triggers,
    )


def mutate_pipeline(rng: random.Random, pipeline: Pipeline) -> Pipeline:
    """Random structural edit: add, drop, or modify jobs."""
    jobs = list(pipeline.jobs)
    op = rng.random()
    if op < 0.3 and jobs:
        jobs.pop(rng.randrange(len(jobs)))
    elif op < 0.6:
        stage = rng.choice(pipeline.stage_order)
        jobs.append(Job(name=f"new{rng.randint(0, 999)}", stage=stage, script=("echo hi",)))
    elif jobs:
        i = rng.randrange(len(jobs))
        job = jobs[i]
        field = rng.choice(["script", "image", "when", "tags", "retry", "allow_failure"])
        if field == "script":
            jobs[i] = Job(**{**_job_kwargs(job), "script": job.script + ("extra",)})
        elif field == "image":
            jobs[i] = Job(**{**_job_kwargs(job), "image": "other:1"})
        elif field == "when":
            new_when = WhenPolicy.ALWAYS if job.when != WhenPolicy.ALWAYS else WhenPolicy.MANUAL
            jobs[i] = Job(**{**_job_kwargs(job), "when": new_when})
        elif field == "tags":
            jobs[i] = Job(**{**_job_kwargs(job), "tags": job.tags + ("extra-tag",)})
        elif field == "retry":
            jobs[i] = Job(**{**_job_kwargs(job), "retry": (job.retry or 0) + 1})
        else:
            jobs[i] = Job(**{**_job_kwargs(job), "allow_failure": not job.allow_failure})
    # needs may now dangle after a removal; drop unresolved entries
    names = {j.name for j in jobs}
    jobs = [
        Job(**{**_job_kwargs(j), "needs": tuple(n for n in j.needs if n in names)})
        for j in jobs
    ]
    return Pipeline(
        ref=pipeline.ref,
        commit_sha=pipeline.commit_sha,
        file_path=pipeline.file_path,
        yaml_hash="1" * 64,
        stage_order=pipeline.stage_order,
        jobs=tuple(jobs),
        templates=pipeline.templates,
        variables=pipeline.variables,
        triggers=pipeline.triggers,
    )


def _job_kwargs(job: Job) -> dict:
    return {
        "name": job.name,
        "stage": job.stage,
        "script": job.script,
        "image": job.image,
        "when": job.when,
        "allow_failure": job.allow_failure,
        "needs": job.needs,
        "conditions": job.conditions,
        "variables": job.variables,
        "tags": job.tags,
        "retry": job.retry,
    }
