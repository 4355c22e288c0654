"""Deterministic transformation of a Pipeline into BPMN 2.0 XML with layout.

The output embeds both the process model and its diagram interchange section
(OMG formal/2013-12-09 namespace set) and is byte-identical across repeated
invocations: element ids derive from entity names, flow numbering from a
canonical traversal (stage order, then within-stage topological order with
name tie-breaks), never from input declaration order.
"""

from __future__ import annotations

import logging
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass

from .model import (
    Job,
    Pipeline,
    Trigger,
    TriggerType,
    WhenPolicy,
    validate,
)

logger = logging.getLogger(__name__)

SCHEMA_BPMN = "pipetwin.bpmn/1"

# layout constants (pixels); the column scheme is fixed, the numbers are ours
COLUMN_WIDTH = 220
ROW_HEIGHT = 90
NODE_WIDTH = 100
NODE_HEIGHT = 80
MARGIN = 60
MIN_LANE_HEIGHT = 120
GATEWAY_SIZE = 50
EVENT_SIZE = 36
LANE_PAD = 20

NS_BPMN = "http://www.omg.org/spec/BPMN/20100524/MODEL"
NS_BPMNDI = "http://www.omg.org/spec/BPMN/20100524/DI"
NS_DC = "http://www.omg.org/spec/DD/20100524/DC"
NS_DI = "http://www.omg.org/spec/DD/20100524/DI"
TARGET_NS = "http://pipetwin.dev/bpmn"

# signal for push/schedule/tag, message for merge-request, untyped otherwise
TRIGGER_EVENT_DEFINITION = {
    TriggerType.PUSH: "signal",
    TriggerType.SCHEDULE: "signal",
    TriggerType.TAG_PUSH: "signal",
    TriggerType.MERGE_REQUEST: "message",
    TriggerType.API: None,
    TriggerType.WEB: None,
}


class GenerationError(Exception):
    pass


class InvalidPipelineError(GenerationError):
    def __init__(self, violations):
        self.violations = violations
        super().__init__(f"pipeline fails validation with {len(violations)} violation(s)")


class SanitizationCollisionError(GenerationError):
    def __init__(self, first: str, second: str, sanitized: str):
        self.names = (first, second)
        self.sanitized = sanitized
        super().__init__(
            f"names {first!r} and {second!r} both sanitize to {sanitized!r}"
        )


@dataclass(frozen=True)
class BpmnDocument:
    xml: str
    element_index: dict[str, str]
    gateway_ids: list[str]
    lane_index: dict[str, str]

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA_BPMN,
            "xml": self.xml,
            "element_index": dict(self.element_index),
            "gateway_ids": list(self.gateway_ids),
            "lane_index": dict(self.lane_index),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BpmnDocument":
        if d.get("schema") != SCHEMA_BPMN:
            raise ValueError(f"expected schema {SCHEMA_BPMN!r}, got {d.get('schema')!r}")
        return cls(
            xml=d["xml"],
            element_index=dict(d["element_index"]),
            gateway_ids=list(d["gateway_ids"]),
            lane_index=dict(d["lane_index"]),
        )


@dataclass(frozen=True)
class LayoutPlan:
    column_x: dict[str, float]
    node_positions: dict[str, tuple[float, float, float, float]]
    edge_waypoints: dict[str, list[tuple[float, float]]]


@dataclass(frozen=True)
class GatewayPlan:
    stage_fork: dict[str, bool]
    stage_join: dict[str, bool]
    job_join: dict[str, bool]
    job_split: dict[str, bool]


@dataclass(frozen=True)
class StartEventSpec:
    element_id: str
    name: str
    definition: str | None  # "signal" | "message" | None


@dataclass(frozen=True)
class StartEventPlan:
    events: tuple[StartEventSpec, ...]
    merge_gateway: bool


@dataclass
class _Node:
    element_id: str
    kind: str  # task | userTask | parallelGateway | exclusiveGateway | startEvent | endEvent
    name: str = ""
    lane: str | None = None
    documentation: str = ""
    event_definition: str | None = None


@dataclass
class _Flow:
    flow_id: str
    source: str
    target: str


def sanitize_id(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_]", "_", name)


def map_activity(job: Job) -> str:
    """Manual jobs become user tasks; every other policy yields a generic task."""
    return "userTask" if job.when == WhenPolicy.MANUAL else "task"


def activity_documentation(job: Job) -> str:
    parts = []
    if job.script:
        parts.append("\n".join(job.script))
    if job.conditions:
        lines = []
        for cond in job.conditions:
            expr = cond.expression
            if isinstance(expr, tuple):
                expr = ", ".join(expr)
            lines.append(f"- {cond.kind.value}: {expr}")
        parts.append("rules:\n" + "\n".join(lines))
    if job.allow_failure:
        parts.append("allow_failure: true")
    if job.retry is not None:
        parts.append(f"retry: {job.retry}")
    return "\n\n".join(parts)


def _same_stage_links(pipeline: Pipeline) -> tuple[dict[str, list[str]], dict[str, list[str]]]:
    """Per job: same-stage predecessors and successors, name-sorted."""
    stage_of = {j.name: j.stage for j in pipeline.jobs}
    preds: dict[str, list[str]] = {j.name: [] for j in pipeline.jobs}
    succs: dict[str, list[str]] = {j.name: [] for j in pipeline.jobs}
    for job in pipeline.jobs:
        for target in job.needs:
            if stage_of.get(target) == job.stage:
                preds[job.name].append(target)
                succs[target].append(job.name)
    for mapping in (preds, succs):
        for key in mapping:
            mapping[key].sort()
    return preds, succs


def plan_gateways(pipeline: Pipeline) -> GatewayPlan:
    """Decide fork/join placement per stage and per job.

    A stage forks when it has two or more entry jobs (no same-stage
    predecessor) and joins when it has two or more exit jobs; a job gets a
    dedicated join when two or more same-stage edges converge on it, and a
    split when it fans out to two or more same-stage successors. Single
    same-stage dependencies stay direct flows; predecessors in earlier
    stages ride the stage-sequence link and add no gateways.
    """
    preds, succs = _same_stage_links(pipeline)
    stage_fork: dict[str, bool] = {}
    stage_join: dict[str, bool] = {}
    for stage in pipeline.stage_order:
        members = [j.name for j in pipeline.jobs if j.stage == stage]
        if not members:
            continue
        entries = [m for m in members if not preds[m]]
        exits = [m for m in members if not succs[m]]
        stage_fork[stage] = len(entries) >= 2
        stage_join[stage] = len(exits) >= 2
    job_join = {name: len(p) >= 2 for name, p in preds.items()}
    job_split = {name: len(s) >= 2 for name, s in succs.items()}
    return GatewayPlan(stage_fork, stage_join, job_join, job_split)


def plan_start_events(triggers: tuple[Trigger, ...] | list[Trigger]) -> StartEventPlan:
    """One typed event per trigger, merged by an exclusive gateway when ≥ 2."""
    triggers = list(triggers)
    if not triggers:
        return StartEventPlan((StartEventSpec("start_untyped", "", None),), False)
    events = []
    for trig in triggers:
        definition = TRIGGER_EVENT_DEFINITION[trig.trigger_type]
        if definition is None:
            logger.warning(
                "trigger %s has no BPMN event definition mapping; emitting untyped start",
                trig.trigger_type.value,
            )
        events.append(
            StartEventSpec(
                f"start_{sanitize_id(trig.trigger_type.value)}",
                trig.trigger_type.value,
                definition,
            )
        )
    return StartEventPlan(tuple(events), len(events) >= 2)


def _stage_rows(pipeline: Pipeline, stage: str) -> list[str]:
    """Within-stage topological order over same-stage needs, name tie-break."""
    members = sorted(j.name for j in pipeline.jobs if j.stage == stage)
    member_set = set(members)
    needs_of = {j.name: j.needs for j in pipeline.jobs}
    indegree = {m: 0 for m in members}
    succs: dict[str, list[str]] = {m: [] for m in members}
    for m in members:
        for target in needs_of[m]:
            if target in member_set:
                indegree[m] += 1
                succs[target].append(m)
    frontier = sorted(m for m in members if indegree[m] == 0)
    order = []
    while frontier:
        node = frontier.pop(0)
        order.append(node)
        ready = []
        for nxt in succs[node]:
            indegree[nxt] -= 1
            if indegree[nxt] == 0:
                ready.append(nxt)
        frontier = sorted(frontier + ready)
    return order


class _Builder:
    def __init__(self, pipeline: Pipeline):
        self.pipeline = pipeline
        self.nodes: list[_Node] = []
        self.by_id: dict[str, _Node] = {}
        self.flows: list[_Flow] = []
        self.out_degree: dict[str, int] = {}

    def add_node(self, node: _Node) -> _Node:
        self.nodes.append(node)
        self.by_id[node.element_id] = node
        self.out_degree.setdefault(node.element_id, 0)
        return node

    def add_flow(self, source: str, target: str) -> _Flow:
        flow = _Flow(f"flow_{len(self.flows) + 1:04d}", source, target)
        self.flows.append(flow)
        self.out_degree[source] = self.out_degree.get(source, 0) + 1
        return flow


def _unique_ids(names: list[str], prefix: str) -> dict[str, str]:
    mapping: dict[str, str] = {}
    reverse: dict[str, str] = {}
    for name in names:
        sanitized = f"{prefix}{sanitize_id(name)}"
        if sanitized in reverse:
            raise SanitizationCollisionError(reverse[sanitized], name, sanitized)
        reverse[sanitized] = name
        mapping[name] = sanitized
    return mapping


def generate(pipeline: Pipeline) -> BpmnDocument:
    """Full transformation: activities, lanes, gateways, events, wiring, layout."""
    violations = validate(pipeline)
    if violations:
        raise InvalidPipelineError(violations)

    stages = [s for s in pipeline.stage_order if any(j.stage == s for j in pipeline.jobs)]
    rows = {s: _stage_rows(pipeline, s) for s in stages}
    gw_plan = plan_gateways(pipeline)
    start_plan = plan_start_events(pipeline.triggers)
    preds, succs = _same_stage_links(pipeline)
    jobs = {j.name: j for j in pipeline.jobs}

    task_ids = _unique_ids([n for s in stages for n in rows[s]], "task_")
    lane_ids = _unique_ids(stages, "lane_")

    b = _Builder(pipeline)

    for spec in start_plan.events:
        b.add_node(_Node(spec.element_id, "startEvent", spec.name, None, "", spec.definition))
    xor_id = None
    if start_plan.merge_gateway:
        xor_id = "gw_xor_triggers"
        b.add_node(_Node(xor_id, "exclusiveGateway", "trigger", None))

    for stage in stages:
        lane = stage
        if gw_plan.stage_fork[stage]:
            b.add_node(_Node(f"gw_fork_{sanitize_id(stage)}", "parallelGateway", "", lane))
        for name in rows[stage]:
            job = jobs[name]
            b.add_node(
                _Node(task_ids[name], map_activity(job), name, lane, activity_documentation(job))
            )
        for name in rows[stage]:
            if gw_plan.job_join[name]:
                b.add_node(_Node(f"gw_needjoin_{sanitize_id(name)}", "parallelGateway", "", lane))
        for name in rows[stage]:
            if gw_plan.job_split[name]:
                b.add_node(_Node(f"gw_split_{sanitize_id(name)}", "parallelGateway", "", lane))
        if gw_plan.stage_join[stage]:
            b.add_node(_Node(f"gw_join_{sanitize_id(stage)}", "parallelGateway", "", lane))

    def stage_entry(stage: str) -> str:
        if gw_plan.stage_fork[stage]:
            return f"gw_fork_{sanitize_id(stage)}"
        entry = [m for m in rows[stage] if not preds[m]]
        return task_ids[entry[0]]

    def stage_exit(stage: str) -> str:
        if gw_plan.stage_join[stage]:
            return f"gw_join_{sanitize_id(stage)}"
        exits = [m for m in rows[stage] if not succs[m]]
        return task_ids[exits[0]]

    # wiring: trigger events, then each stage's internals, then stage links
    if xor_id:
        for spec in start_plan.events:
            b.add_flow(spec.element_id, xor_id)
    source_of_process = xor_id or start_plan.events[0].element_id
    if stages:
        b.add_flow(source_of_process, stage_entry(stages[0]))

    for idx, stage in enumerate(stages):
        if gw_plan.stage_fork[stage]:
            for name in rows[stage]:
                if not preds[name]:
                    b.add_flow(f"gw_fork_{sanitize_id(stage)}", task_ids[name])
        for name in rows[stage]:
            if gw_plan.job_split[name]:
                b.add_flow(task_ids[name], f"gw_split_{sanitize_id(name)}")
        for name in rows[stage]:
            for pred in preds[name]:
                source = (
                    f"gw_split_{sanitize_id(pred)}"
                    if gw_plan.job_split[pred]
                    else task_ids[pred]
                )
                target = (
                    f"gw_needjoin_{sanitize_id(name)}"
                    if gw_plan.job_join[name]
                    else task_ids[name]
                )
                b.add_flow(source, target)
        for name in rows[stage]:
            if gw_plan.job_join[name]:
                b.add_flow(f"gw_needjoin_{sanitize_id(name)}", task_ids[name])
        if gw_plan.stage_join[stage]:
            for name in rows[stage]:
                if not succs[name]:
                    b.add_flow(task_ids[name], f"gw_join_{sanitize_id(stage)}")
        if idx + 1 < len(stages):
            b.add_flow(stage_exit(stage), stage_entry(stages[idx + 1]))

    # one end event per node left dangling after wiring
    terminals = [n.element_id for n in b.nodes if b.out_degree.get(n.element_id, 0) == 0]
    for i, terminal in enumerate(terminals, start=1):
        end_id = f"end_{i:04d}"
        b.add_node(_Node(end_id, "endEvent", "", None))
        b.add_flow(terminal, end_id)

    plan = layout(b, stages, rows, start_plan)
    xml = serialize(b, stages, lane_ids, plan)

    gateway_ids = [n.element_id for n in b.nodes if n.kind.endswith("Gateway")]
    return BpmnDocument(
        xml=xml,
        element_index={name: task_ids[name] for s in stages for name in rows[s]},
        gateway_ids=gateway_ids,
        lane_index={s: lane_ids[s] for s in stages},
    )


def layout(b: _Builder, stages: list[str], rows: dict[str, list[str]], start_plan) -> LayoutPlan:
    """Column per stage, vertical job stacking, bus-line edge routing."""
    column_x: dict[str, float] = {}
    positions: dict[str, tuple[float, float, float, float]] = {}
    lane_top = float(MARGIN)
    node_col: dict[str, int] = {}

    def col_x(col: int) -> float:
        return float(MARGIN + col * COLUMN_WIDTH)

    for i, stage in enumerate(stages):
        column_x[stage] = col_x(i + 1)

    # leading column: start events stacked, exclusive merge beside them
    n_events = len(start_plan.events)
    for idx, spec in enumerate(start_plan.events):
        y = lane_top + LANE_PAD + idx * ROW_HEIGHT + (NODE_HEIGHT - EVENT_SIZE) / 2
        positions[spec.element_id] = (col_x(0) + 30, y, EVENT_SIZE, EVENT_SIZE)
        node_col[spec.element_id] = 0
    if start_plan.merge_gateway:
        stack = (n_events - 1) * ROW_HEIGHT + EVENT_SIZE
        y = lane_top + LANE_PAD + (NODE_HEIGHT - EVENT_SIZE) / 2 + stack / 2 - GATEWAY_SIZE / 2
        positions["gw_xor_triggers"] = (col_x(0) + 130, y, GATEWAY_SIZE, GATEWAY_SIZE)
        node_col["gw_xor_triggers"] = 0

    lane_bounds: dict[str, tuple[float, float, float, float]] = {}
    for i, stage in enumerate(stages):
        lx = column_x[stage]
        stack_h = len(rows[stage]) * ROW_HEIGHT
        lane_h = max(MIN_LANE_HEIGHT, stack_h + 2 * LANE_PAD)
        lane_bounds[stage] = (lx, lane_top, float(COLUMN_WIDTH), float(lane_h))
        for row, name in enumerate(rows[stage]):
            y = lane_top + LANE_PAD + row * ROW_HEIGHT
            positions[f"task_{sanitize_id(name)}"] = (
                lx + (COLUMN_WIDTH - NODE_WIDTH) / 2,
                y,
                float(NODE_WIDTH),
                float(NODE_HEIGHT),
            )
            node_col[f"task_{sanitize_id(name)}"] = i + 1
        center_y = lane_top + LANE_PAD + stack_h / 2 - GATEWAY_SIZE / 2
        for node in b.nodes:
            if node.lane != stage or not node.kind.endswith("Gateway"):
                continue
            nid = node.element_id
            if nid.startswith("gw_fork_"):
                positions[nid] = (lx + 5, center_y, float(GATEWAY_SIZE), float(GATEWAY_SIZE))
            elif nid.startswith("gw_join_"):
                positions[nid] = (
                    lx + COLUMN_WIDTH - GATEWAY_SIZE - 5,
                    center_y,
                    float(GATEWAY_SIZE),
                    float(GATEWAY_SIZE),
                )
            elif nid.startswith("gw_needjoin_"):
                job_id = "task_" + nid[len("gw_needjoin_"):]
                jy = positions[job_id][1]
                positions[nid] = (
                    lx + 5,
                    jy + (NODE_HEIGHT - GATEWAY_SIZE) / 2,
                    float(GATEWAY_SIZE),
                    float(GATEWAY_SIZE),
                )
            elif nid.startswith("gw_split_"):
                job_id = "task_" + nid[len("gw_split_"):]
                jy = positions[job_id][1]
                positions[nid] = (
                    lx + COLUMN_WIDTH - GATEWAY_SIZE - 5,
                    jy + (NODE_HEIGHT - GATEWAY_SIZE) / 2,
                    float(GATEWAY_SIZE),
                    float(GATEWAY_SIZE),
                )
            node_col[nid] = i + 1
        _resolve_overlaps(positions, [n.element_id for n in b.nodes if n.lane == stage])

    # trailing column for end events, aligned to their source rows
    end_col = len(stages) + 1
    for flow in b.flows:
        if flow.target.startswith("end_"):
            sx, sy, sw, sh = positions[flow.source]
            positions[flow.target] = (
                col_x(end_col) + 30,
                sy + sh / 2 - EVENT_SIZE / 2,
                float(EVENT_SIZE),
                float(EVENT_SIZE),
            )
            node_col[flow.target] = end_col

    waypoints: dict[str, list[tuple[float, float]]] = {}
    for flow in b.flows:
        waypoints[flow.flow_id] = _route(flow, positions, node_col)
    return LayoutPlan(column_x=column_x, node_positions=positions, edge_waypoints=waypoints)


def _resolve_overlaps(positions: dict, ids: list[str]):
    """Nudge later-created boxes down until no two boxes in the lane overlap."""
    placed: list[str] = []
    for nid in ids:
        if nid not in positions:
            continue
        guard = 0
        while any(_overlap(positions[nid], positions[other]) for other in placed) and guard < 200:
            x, y, w, h = positions[nid]
            positions[nid] = (x, y + 10.0, w, h)
            guard += 1
        placed.append(nid)


def _overlap(a, b) -> bool:
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    return ax < bx + bw and bx < ax + aw and ay < by + bh and by < ay + ah


def _route(flow: _Flow, positions: dict, node_col: dict) -> list[tuple[float, float]]:
    sx, sy, sw, sh = positions[flow.source]
    dx, dy, dw, dh = positions[flow.target]
    src = (sx + sw, sy + sh / 2)
    dst = (dx, dy + dh / 2)
    scol, dcol = node_col.get(flow.source, 0), node_col.get(flow.target, 0)
    points: list[tuple[float, float]]
    if dcol > scol:
        # inter-column edge: ride the bus lines flanking each column
        bus_out = MARGIN + (scol + 1) * COLUMN_WIDTH - 2.0
        bus_in = MARGIN + dcol * COLUMN_WIDTH + 2.0
        points = [src, (bus_out, src[1]), (bus_in, dst[1]), dst]
    else:
        mid = (src[0] + dst[0]) / 2
        points = [src, (mid, src[1]), (mid, dst[1]), dst]
    deduped = [points[0]]
    for pt in points[1:]:
        if pt != deduped[-1]:
            deduped.append(pt)
    return deduped


def serialize(b: _Builder, stages: list[str], lane_ids: dict[str, str], plan: LayoutPlan) -> str:
    """Emit definitions/process/laneSet/flow nodes/flows plus the DI section."""
    definitions = ET.Element(
        "bpmn:definitions",
        {
            "xmlns:bpmn": NS_BPMN,
            "xmlns:bpmndi": NS_BPMNDI,
            "xmlns:dc": NS_DC,
            "xmlns:di": NS_DI,
            "id": "definitions_ci_pipeline",
            "targetNamespace": TARGET_NS,
        },
    )
    process = ET.SubElement(
        definitions, "bpmn:process", {"id": "process_ci_pipeline", "isExecutable": "false"}
    )

    if stages:
        lane_set = ET.SubElement(process, "bpmn:laneSet", {"id": "laneset_stages"})
        for stage in stages:
            lane = ET.SubElement(
                lane_set, "bpmn:lane", {"id": lane_ids[stage], "name": stage}
            )
            for node in b.nodes:
                if node.lane == stage:
                    ref = ET.SubElement(lane, "bpmn:flowNodeRef")
                    ref.text = node.element_id

    incoming: dict[str, list[str]] = {}
    outgoing: dict[str, list[str]] = {}
    for flow in b.flows:
        outgoing.setdefault(flow.source, []).append(flow.flow_id)
        incoming.setdefault(flow.target, []).append(flow.flow_id)

    for node in b.nodes:
        attrs = {"id": node.element_id}
        if node.name:
            attrs["name"] = node.name
        el = ET.SubElement(process, f"bpmn:{node.kind}", attrs)
        if node.documentation:
            doc = ET.SubElement(el, "bpmn:documentation")
            doc.text = node.documentation
        for fid in incoming.get(node.element_id, []):
            sub = ET.SubElement(el, "bpmn:incoming")
            sub.text = fid
        for fid in outgoing.get(node.element_id, []):
            sub = ET.SubElement(el, "bpmn:outgoing")
            sub.text = fid
        if node.kind == "startEvent" and node.event_definition:
            ET.SubElement(
                el,
                f"bpmn:{node.event_definition}EventDefinition",
                {"id": f"evdef_{node.element_id}"},
            )

    for flow in b.flows:
        ET.SubElement(
            process,
            "bpmn:sequenceFlow",
            {"id": flow.flow_id, "sourceRef": flow.source, "targetRef": flow.target},
        )

    diagram = ET.SubElement(definitions, "bpmndi:BPMNDiagram", {"id": "diagram_ci_pipeline"})
    plane = ET.SubElement(
        diagram, "bpmndi:BPMNPlane", {"id": "plane_ci_pipeline", "bpmnElement": "process_ci_pipeline"}
    )

    for stage in stages:
        lx = plan.column_x[stage]
        shape = ET.SubElement(
            plane,
            "bpmndi:BPMNShape",
            {
                "id": f"shape_{lane_ids[stage]}",
                "bpmnElement": lane_ids[stage],
                "isHorizontal": "false",
            },
        )
        _bounds(shape, _lane_box(b, stage, lx))
    for node in b.nodes:
        shape = ET.SubElement(
            plane,
            "bpmndi:BPMNShape",
            {"id": f"shape_{node.element_id}", "bpmnElement": node.element_id},
        )
        _bounds(shape, plan.node_positions[node.element_id])
    for flow in b.flows:
        edge = ET.SubElement(
            plane,
            "bpmndi:BPMNEdge",
            {"id": f"edge_{flow.flow_id}", "bpmnElement": flow.flow_id},
        )
        for px, py in plan.edge_waypoints[flow.flow_id]:
            ET.SubElement(edge, "di:waypoint", {"x": _num(px), "y": _num(py)})

    ET.indent(definitions, space="  ")
    body = ET.tostring(definitions, encoding="unicode")
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + body + "\n"


def _lane_box(b: _Builder, stage: str, lx: float) -> tuple[float, float, float, float]:
    rows = sum(1 for n in b.nodes if n.lane == stage and n.kind in ("task", "userTask"))
    height = max(MIN_LANE_HEIGHT, rows * ROW_HEIGHT + 2 * LANE_PAD)
    return (lx, float(MARGIN), float(COLUMN_WIDTH), float(height))


def _bounds(shape: ET.Element, box: tuple[float, float, float, float]):
    x, y, w, h = box
    ET.SubElement(
        shape, "dc:Bounds", {"x": _num(x), "y": _num(y), "width": _num(w), "height": _num(h)}
    )


def _num(value: float) -> str:
    if float(value).is_integer():
        return str(int(value))
    return str(value)
