import { readFileSync } from 'node:fs';
import { join } from 'node:path';

import { describe, expect, it } from 'vitest';

import { renderDetailPanel, renderDiagramView } from '../src/diagram';
import type { ExecutionOverlay, JobJson } from '../src/types';

const referenceXml = readFileSync(join(process.cwd(), 'tests/fixtures/reference.bpmn.xml'), 'utf-8');
const overlay: ExecutionOverlay = JSON.parse(
  readFileSync(join(process.cwd(), 'tests/fixtures/overlay_run102.json'), 'utf-8')
);

describe('diagram view', () => {
  it('renders the structural diagram to a stable snapshot', () => {
    const view = renderDiagramView(referenceXml);
    expect(view.svg).toMatchSnapshot();
  });

  it('renders the execution overlay to a stable snapshot', () => {
    const view = renderDiagramView(referenceXml, overlay);
    expect(view.svg).toMatchSnapshot();
  });

  it('tints activities by status and badges failures and skips', () => {
    const { svg } = renderDiagramView(referenceXml, overlay);
    expect(svg).toContain('data-id="task_compile"');
    expect(svg).toMatch(/class="node status-success" data-id="task_compile"/);
    expect(svg).toMatch(/class="node status-failed" data-id="task_unit_test"/);
    // jobs filtered out of the run render as skipped, never hidden
    expect(svg).toMatch(/class="node status-skipped" data-id="task_static_analysis"/);
    expect(svg).toContain('<title data-for="task_unit_test">script_failure</title>');
    expect(svg).toContain('>skipped</text>');
  });

  it('duration badges come straight from the overlay', () => {
    const { svg } = renderDiagramView(referenceXml, overlay);
    expect(svg).toContain('>1m 0s</text>'); // compile: 60 s
    expect(svg).toContain('>3m 0s</text>'); // unit-test: 180 s
  });

  it('detail panel lists script, conditions, and needs from the model payload', () => {
    const job: JobJson = {
      name: 'static-analysis',
      stage: 'build',
      script: ['sonar-scanner'],
      image: 'maven:3.9-eclipse-temurin-21',
      when: 'on_success',
      allow_failure: false,
      needs: ['compile'],
      conditions: [{ kind: 'changes', expression: ['src/**', 'pom.xml'] }],
      variables: [],
      tags: ['docker'],
      retry: 2
    };
    const html = renderDetailPanel(job, overlay['task_static_analysis']);
    expect(html).toMatchSnapshot();
    expect(html).toContain('sonar-scanner');
    expect(html).toContain('changes: src/**, pom.xml');
    expect(html).toContain('compile');
  });
});
