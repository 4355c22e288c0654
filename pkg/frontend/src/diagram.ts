// Diagram view: the rendered process, an optional execution overlay, and the
// per-activity detail panel fed by the model endpoint.

import { parseBpmn } from './bpmn';
import { renderSvg, formatDuration } from './svg';
import type { ExecutionOverlay, JobJson } from './types';

export interface DiagramView {
  svg: string;
  legendHtml: string;
}

function esc(text: string): string {
  return text.replace(/&/g, '&amp;').replace(/</g, '&lt;').replace(/>/g, '&gt;');
}

export function renderDiagramView(xml: string, overlay?: ExecutionOverlay): DiagramView {
  const model = parseBpmn(xml);
  const svg = renderSvg(model, { execution: overlay });
  const legendHtml = overlay
    ? '<div class="legend">' +
      '<span class="chip status-success">success</span>' +
      '<span class="chip status-failed">failed</span>' +
      '<span class="chip status-skipped">skipped</span>' +
      '</div>'
    : '';
  return { svg, legendHtml };
}

export function renderDetailPanel(job: JobJson, overlayEntry?: {
  status: string;
  duration_s: number | null;
  failure_reason: string | null;
}): string {
  const rows: string[] = [
    `<h3>${esc(job.name)}</h3>`,
    `<dl>`,
    `<dt>stage</dt><dd>${esc(job.stage)}</dd>`,
    `<dt>when</dt><dd>${esc(job.when)}</dd>`
  ];
  if (job.image) rows.push(`<dt>image</dt><dd>${esc(job.image)}</dd>`);
  if (job.needs.length) {
    rows.push(`<dt>needs</dt><dd>${esc(job.needs.join(', '))}</dd>`);
  }
  if (job.conditions.length) {
    const conditions = job.conditions
      .map((c) => {
        const expr = Array.isArray(c.expression) ? c.expression.join(', ') : c.expression;
        return `${c.kind}: ${expr}`;
      })
      .join('<br>');
    rows.push(`<dt>conditions</dt><dd>${esc(conditions).replace(/&lt;br&gt;/g, '<br>')}</dd>`);
  }
  if (overlayEntry) {
    rows.push(`<dt>status</dt><dd>${esc(overlayEntry.status)}</dd>`);
    if (overlayEntry.duration_s !== null) {
      rows.push(`<dt>duration</dt><dd>${formatDuration(overlayEntry.duration_s)}</dd>`);
    }
    if (overlayEntry.failure_reason) {
      rows.push(`<dt>failure</dt><dd>${esc(overlayEntry.failure_reason)}</dd>`);
    }
  }
  rows.push('</dl>');
  if (job.script.length) {
    rows.push(`<pre class="script">${esc(job.script.join('\n'))}</pre>`);
  }
  return `<div class="detail-panel">${rows.join('\n')}</div>`;
}
