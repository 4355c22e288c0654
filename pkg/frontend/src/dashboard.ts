// Aggregate dashboard: metric cards, stage bars, failure breakdown, and the
// delta column when a comparison target is active. Values come verbatim from
// the metrics endpoints; the view does no arithmetic beyond bar scaling.

import { formatDuration } from './svg';
import type { DeltaJson, MetricsJson } from './types';

function esc(text: string): string {
  return text.replace(/&/g, '&amp;').replace(/</g, '&lt;').replace(/>/g, '&gt;');
}

function card(label: string, value: string): string {
  return (
    `<div class="card"><div class="card-value">${esc(value)}</div>` +
    `<div class="card-label">${esc(label)}</div></div>`
  );
}

const DELTA_LABELS: Record<string, string> = {
  runs: 'Pipeline runs',
  success_rate_pct: 'Success rate (%)',
  avg_duration_s: 'Avg. duration (s)',
  median_duration_s: 'Median duration (s)',
  avg_queue_s: 'Avg. queue time (s)'
};

function deltaLabel(metric: string): string {
  if (metric.startsWith('stage_avg_s.')) {
    return `${metric.slice('stage_avg_s.'.length)} stage avg. (s)`;
  }
  return DELTA_LABELS[metric] ?? metric;
}

export function renderDashboard(metrics: MetricsJson, delta?: DeltaJson): string {
  if (metrics.runs === 0) {
    return (
      '<div class="empty-state">No execution data for this version yet. ' +
      'Trigger a sync once the pipeline has run.</div>'
    );
  }

  const cards = [
    card('runs', String(metrics.runs)),
    card('success rate', `${metrics.success_rate_pct}%`),
    card('avg duration', formatDuration(metrics.avg_duration_s)),
    card('median duration', formatDuration(metrics.median_duration_s))
  ];
  if (metrics.avg_queue_s !== null) {
    cards.push(card('avg queue', `${metrics.avg_queue_s}s`));
  }

  const stageEntries = Object.entries(metrics.stage_avg_s);
  const maxStage = Math.max(1, ...stageEntries.map(([, v]) => v));
  const bars = stageEntries
    .map(([stage, value]) => {
      const width = Math.round((value / maxStage) * 100);
      return (
        `<div class="bar-row"><span class="bar-label">${esc(stage)}</span>` +
        `<span class="bar" style="width:${width}%"></span>` +
        `<span class="bar-value">${formatDuration(value)}</span></div>`
      );
    })
    .join('\n');

  const failures = Object.entries(metrics.failure_categories)
    .map(([category, count]) => `<li>${esc(category)}: ${count}</li>`)
    .join('');

  const sections = [
    `<div class="cards">${cards.join('')}</div>`,
    `<section class="stage-bars"><h3>stage averages</h3>${bars || '<p>no stage data</p>'}</section>`,
    `<section class="failures"><h3>failure categories</h3><ul>${failures}</ul></section>`
  ];

  if (delta) {
    const rows = delta.rows
      .map(
        (row) =>
          `<tr><td>${esc(deltaLabel(row.metric))}</td>` +
          `<td>${row.before ?? '-'}</td><td>${row.after ?? '-'}</td>` +
          `<td class="delta">${esc(row.display)}</td></tr>`
      )
      .join('');
    sections.push(
      '<section class="delta-table"><h3>version comparison</h3>' +
        '<table><tr><th>Metric</th><th>V1</th><th>V2</th><th>&#916;</th></tr>' +
        rows +
        '</table></section>'
    );
  }
  return `<div class="dashboard">${sections.join('\n')}</div>`;
}
