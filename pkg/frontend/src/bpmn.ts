// BPMN 2.0 document -> renderable diagram model. The generated documents
// carry a full diagram-interchange section, so rendering is a direct read
// of shapes and edges; no layout work happens in the browser.

export interface DiagramNode {
  id: string;
  kind: string; // task | userTask | startEvent | endEvent | parallelGateway | exclusiveGateway
  name: string;
  eventDefinition: 'signal' | 'message' | null;
  documentation: string;
  x: number;
  y: number;
  width: number;
  height: number;
}

export interface DiagramLane {
  id: string;
  name: string;
  x: number;
  y: number;
  width: number;
  height: number;
}

export interface DiagramEdge {
  id: string;
  points: { x: number; y: number }[];
}

export interface DiagramModel {
  nodes: DiagramNode[];
  lanes: DiagramLane[];
  edges: DiagramEdge[];
  width: number;
  height: number;
}

const FLOW_NODE_KINDS = new Set([
  'task',
  'userTask',
  'startEvent',
  'endEvent',
  'parallelGateway',
  'exclusiveGateway'
]);

function byLocalName(root: Element, name: string): Element[] {
  return Array.from(root.getElementsByTagName('*')).filter((el) => el.localName === name);
}

export function parseBpmn(xml: string): DiagramModel {
  const doc = new DOMParser().parseFromString(xml, 'text/xml');
  const root = doc.documentElement;

  const kinds = new Map<string, string>();
  const names = new Map<string, string>();
  const eventDefs = new Map<string, 'signal' | 'message'>();
  const docs = new Map<string, string>();
  const laneNames = new Map<string, string>();

  for (const el of Array.from(root.getElementsByTagName('*'))) {
    const id = el.getAttribute('id') ?? '';
    if (FLOW_NODE_KINDS.has(el.localName) && id) {
      kinds.set(id, el.localName);
      names.set(id, el.getAttribute('name') ?? '');
      for (const child of Array.from(el.children)) {
        if (child.localName === 'signalEventDefinition') eventDefs.set(id, 'signal');
        if (child.localName === 'messageEventDefinition') eventDefs.set(id, 'message');
        if (child.localName === 'documentation') docs.set(id, child.textContent ?? '');
      }
    }
    if (el.localName === 'lane' && id) {
      laneNames.set(id, el.getAttribute('name') ?? '');
    }
  }

  const nodes: DiagramNode[] = [];
  const lanes: DiagramLane[] = [];
  for (const shape of byLocalName(root, 'BPMNShape')) {
    const ref = shape.getAttribute('bpmnElement') ?? '';
    const bounds = byLocalName(shape, 'Bounds')[0];
    if (!bounds) continue;
    const box = {
      x: Number(bounds.getAttribute('x')),
      y: Number(bounds.getAttribute('y')),
      width: Number(bounds.getAttribute('width')),
      height: Number(bounds.getAttribute('height'))
    };
    if (laneNames.has(ref)) {
      lanes.push({ id: ref, name: laneNames.get(ref) ?? '', ...box });
    } else if (kinds.has(ref)) {
      nodes.push({
        id: ref,
        kind: kinds.get(ref) ?? 'task',
        name: names.get(ref) ?? '',
        eventDefinition: eventDefs.get(ref) ?? null,
        documentation: docs.get(ref) ?? '',
        ...box
      });
    }
  }

  const edges: DiagramEdge[] = [];
  for (const edge of byLocalName(root, 'BPMNEdge')) {
    const points = byLocalName(edge, 'waypoint').map((wp) => ({
      x: Number(wp.getAttribute('x')),
      y: Number(wp.getAttribute('y'))
    }));
    edges.push({ id: edge.getAttribute('bpmnElement') ?? '', points });
  }

  let width = 0;
  let height = 0;
  for (const box of [...nodes, ...lanes]) {
    width = Math.max(width, box.x + box.width);
    height = Math.max(height, box.y + box.height);
  }
  for (const edge of edges) {
    for (const p of edge.points) {
      width = Math.max(width, p.x);
      height = Math.max(height, p.y);
    }
  }
  return { nodes, lanes, edges, width: width + 40, height: height + 40 };
}
