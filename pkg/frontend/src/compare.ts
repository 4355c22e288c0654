// Side-by-side structural comparison: two diagrams with color-coded change
// overlays (added green, removed red, modified amber) plus the change list.

import { parseBpmn } from './bpmn';
import { renderSvg } from './svg';
import type { DiffResponse, JobDelta } from './types';

export interface CompareView {
  leftSvg: string;
  rightSvg: string;
  bannerHtml: string;
  changeListHtml: string;
}

function esc(text: string): string {
  return text.replace(/&/g, '&amp;').replace(/</g, '&lt;').replace(/>/g, '&gt;');
}

function snippet(value: unknown): string {
  const text = JSON.stringify(value);
  return text.length > 120 ? text.slice(0, 117) + '...' : text;
}

function deltaRows(deltas: JobDelta[], kindLabel: string): string[] {
  return deltas.map((delta) => {
    const fields = delta.field_changes
      .map(
        (fc) =>
          `<tr><td>${esc(fc.field)}</td>` +
          `<td class="before">${esc(snippet(fc.before))}</td>` +
          `<td class="after">${esc(snippet(fc.after))}</td></tr>`
      )
      .join('');
    return (
      `<details class="change modified"><summary>~ ${kindLabel} ${esc(delta.name)} ` +
      `(${delta.field_changes.length} fields)</summary>` +
      `<table><tr><th>field</th><th>before</th><th>after</th></tr>${fields}</table></details>`
    );
  });
}

export function renderCompareView(
  leftXml: string,
  rightXml: string,
  response: DiffResponse
): CompareView {
  const overlays = response.overlays ?? { v1: {}, v2: {} };
  const leftSvg = renderSvg(parseBpmn(leftXml), { changes: overlays.v1 });
  const rightSvg = renderSvg(parseBpmn(rightXml), { changes: overlays.v2 });

  const diff = response.diff;
  const summary = diff.summary;
  const changed =
    diff.added_jobs.length +
    diff.removed_jobs.length +
    diff.modified_jobs.length +
    diff.added_templates.length +
    diff.removed_templates.length +
    diff.modified_templates.length +
    diff.added_stages.length +
    diff.removed_stages.length;

  const bannerHtml =
    changed === 0
      ? '<div class="banner neutral">no structural changes</div>'
      : `<div class="banner">jobs ${summary.jobs_before} &#8594; ${summary.jobs_after} ` +
        `(${summary.jobs_delta >= 0 ? '+' : ''}${summary.jobs_delta}) &#183; ` +
        `<span class="added">${diff.added_jobs.length} added</span> &#183; ` +
        `<span class="removed">${diff.removed_jobs.length} removed</span> &#183; ` +
        `<span class="modified">${diff.modified_jobs.length} modified</span></div>`;

  const items: string[] = [];
  for (const name of diff.added_jobs) {
    items.push(`<div class="change added">+ job ${esc(name)}</div>`);
  }
  for (const name of diff.removed_jobs) {
    items.push(`<div class="change removed">- job ${esc(name)}</div>`);
  }
  items.push(...deltaRows(diff.modified_jobs, 'job'));
  for (const name of diff.added_templates) {
    items.push(`<div class="change added">+ template ${esc(name)}</div>`);
  }
  for (const name of diff.removed_templates) {
    items.push(`<div class="change removed">- template ${esc(name)}</div>`);
  }
  items.push(...deltaRows(diff.modified_templates, 'template'));
  for (const name of diff.added_stages) {
    items.push(`<div class="change added">+ stage ${esc(name)}</div>`);
  }
  for (const name of diff.removed_stages) {
    items.push(`<div class="change removed">- stage ${esc(name)}</div>`);
  }
  return {
    leftSvg,
    rightSvg,
    bannerHtml,
    changeListHtml: `<div class="change-list">${items.join('\n')}</div>`
  };
}
