// Diagram model -> SVG text. Overlays only add classes and badges; the
// geometry is exactly what the document's diagram-interchange section says.

import type { DiagramModel, DiagramNode } from './bpmn';
import type { ChangeKind, ExecutionOverlay } from './types';

export interface RenderOptions {
  execution?: ExecutionOverlay;
  changes?: Record<string, ChangeKind>;
}

const STYLE = `
  .lane { fill: #fafafa; stroke: #c4c4c4; }
  .lane-label { font: 12px sans-serif; fill: #666; }
  .node { fill: #ffffff; stroke: #4a4a4a; stroke-width: 1.5; }
  .node-label { font: 12px sans-serif; fill: #222; text-anchor: middle; }
  .badge { font: 10px sans-serif; fill: #444; text-anchor: middle; }
  .edge { fill: none; stroke: #7a7a7a; stroke-width: 1.5; }
  .gateway-mark { font: 16px sans-serif; text-anchor: middle; fill: #4a4a4a; }
  .event { fill: #ffffff; stroke: #4a4a4a; stroke-width: 1.5; }
  .event-end { stroke-width: 3.5; }
  .event-glyph { font: 10px sans-serif; text-anchor: middle; fill: #4a4a4a; }
  .user-glyph { font: 11px sans-serif; fill: #4a4a4a; }
  .status-success { fill: #d3f9d8; stroke: #2f9e44; }
  .status-failed { fill: #ffe3e3; stroke: #e03131; }
  .status-skipped { fill: #f1f3f5; stroke: #adb5bd; stroke-dasharray: 4 3; }
  .status-running, .status-pending { fill: #d0ebff; stroke: #1971c2; }
  .status-manual { fill: #e5dbff; stroke: #7048e8; }
  .status-canceled { fill: #ffe8cc; stroke: #e8590c; }
  .change-added { fill: #d3f9d8; stroke: #2f9e44; stroke-width: 3; }
  .change-removed { fill: #ffe3e3; stroke: #e03131; stroke-width: 3; }
  .change-modified { fill: #fff3bf; stroke: #f08c00; stroke-width: 3; }
`;

function esc(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}

export function formatDuration(seconds: number | null): string {
  if (seconds === null) return '';
  if (seconds < 60) return `${seconds}s`;
  const minutes = Math.floor(seconds / 60);
  const rest = Math.round(seconds % 60);
  return `${minutes}m ${rest}s`;
}

function overlayClass(node: DiagramNode, options: RenderOptions): string {
  const change = options.changes?.[node.id];
  if (change) return ` change-${change}`;
  const entry = options.execution?.[node.id];
  if (entry) return ` status-${entry.status}`;
  return '';
}

function renderActivity(node: DiagramNode, options: RenderOptions): string {
  const cls = overlayClass(node, options);
  const cx = node.x + node.width / 2;
  const parts = [
    `<rect class="node${cls}" data-id="${esc(node.id)}" x="${node.x}" y="${node.y}" ` +
      `width="${node.width}" height="${node.height}" rx="8"/>`
  ];
  if (node.kind === 'userTask') {
    parts.push(
      `<text class="user-glyph" x="${node.x + 6}" y="${node.y + 14}">&#9823;</text>`
    );
  }
  parts.push(
    `<text class="node-label" x="${cx}" y="${node.y + node.height / 2 + 4}">` +
      `${esc(node.name)}</text>`
  );
  const entry = options.execution?.[node.id];
  if (entry) {
    const badge =
      entry.status === 'skipped' ? 'skipped' : formatDuration(entry.duration_s);
    if (badge) {
      parts.push(
        `<text class="badge" x="${cx}" y="${node.y + node.height - 6}">${esc(badge)}</text>`
      );
    }
    if (entry.failure_reason) {
      parts.push(
        `<title data-for="${esc(node.id)}">${esc(entry.failure_reason)}</title>`
      );
    }
  }
  return parts.join('\n');
}

function renderGateway(node: DiagramNode, options: RenderOptions): string {
  const cls = overlayClass(node, options);
  const cx = node.x + node.width / 2;
  const cy = node.y + node.height / 2;
  const points = [
    `${cx},${node.y}`,
    `${node.x + node.width},${cy}`,
    `${cx},${node.y + node.height}`,
    `${node.x},${cy}`
  ].join(' ');
  const mark = node.kind === 'parallelGateway' ? '+' : '&#215;';
  return (
    `<polygon class="node${cls}" data-id="${esc(node.id)}" points="${points}"/>\n` +
    `<text class="gateway-mark" x="${cx}" y="${cy + 6}">${mark}</text>`
  );
}

function renderEvent(node: DiagramNode, options: RenderOptions): string {
  const cls = node.kind === 'endEvent' ? ' event-end' : '';
  const overlay = overlayClass(node, options);
  const cx = node.x + node.width / 2;
  const cy = node.y + node.height / 2;
  const r = node.width / 2;
  const parts = [
    `<circle class="event${cls}${overlay}" data-id="${esc(node.id)}" ` +
      `cx="${cx}" cy="${cy}" r="${r}"/>`
  ];
  if (node.eventDefinition === 'signal') {
    parts.push(`<text class="event-glyph" x="${cx}" y="${cy + 4}">&#9650;</text>`);
  } else if (node.eventDefinition === 'message') {
    parts.push(`<text class="event-glyph" x="${cx}" y="${cy + 4}">&#9993;</text>`);
  }
  if (node.name) {
    parts.push(`<text class="badge" x="${cx}" y="${cy + r + 12}">${esc(node.name)}</text>`);
  }
  return parts.join('\n');
}

export function renderSvg(model: DiagramModel, options: RenderOptions = {}): string {
  const chunks: string[] = [
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${model.width} ${model.height}" ` +
      `width="${model.width}" height="${model.height}">`,
    `<style>${STYLE}</style>`,
    '<defs><marker id="arrow" viewBox="0 0 10 10" refX="9" refY="5" markerWidth="7" ' +
      'markerHeight="7" orient="auto-start-reverse">' +
      '<path d="M 0 0 L 10 5 L 0 10 z" fill="#7a7a7a"/></marker></defs>'
  ];
  for (const lane of model.lanes) {
    const laneChange = options.changes?.[lane.id];
    const cls = laneChange ? ` change-${laneChange}` : '';
    chunks.push(
      `<rect class="lane${cls}" data-id="${esc(lane.id)}" x="${lane.x}" y="${lane.y}" ` +
        `width="${lane.width}" height="${lane.height}"/>`,
      `<text class="lane-label" x="${lane.x + 8}" y="${lane.y - 6}">${esc(lane.name)}</text>`
    );
  }
  for (const edge of model.edges) {
    const points = edge.points.map((p) => `${p.x},${p.y}`).join(' ');
    chunks.push(
      `<polyline class="edge" data-id="${esc(edge.id)}" points="${points}" ` +
        'marker-end="url(#arrow)"/>'
    );
  }
  for (const node of model.nodes) {
    if (node.kind === 'task' || node.kind === 'userTask') {
      chunks.push(renderActivity(node, options));
    } else if (node.kind.endsWith('Gateway')) {
      chunks.push(renderGateway(node, options));
    } else {
      chunks.push(renderEvent(node, options));
    }
  }
  chunks.push('</svg>');
  return chunks.join('\n');
}
