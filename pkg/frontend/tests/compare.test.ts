import { readFileSync } from 'node:fs';
import { join } from 'node:path';

import { describe, expect, it } from 'vitest';

import { renderCompareView } from '../src/compare';
import type { DiffResponse } from '../src/types';

function fixture(name: string): string {
  return readFileSync(join(process.cwd(), 'tests/fixtures', name), 'utf-8');
}

const v1 = fixture('inkscape_v1.bpmn.xml');
const v2 = fixture('inkscape_v2.bpmn.xml');
const diffResponse: DiffResponse = JSON.parse(fixture('diff_inkscape.json'));

function count(haystack: string, needle: string): number {
  return haystack.split(needle).length - 1;
}

describe('compare view', () => {
  it('renders both panes and the change list to stable snapshots', () => {
    const view = renderCompareView(v1, v2, diffResponse);
    expect(view.leftSvg).toMatchSnapshot();
    expect(view.rightSvg).toMatchSnapshot();
    expect(view.bannerHtml).toMatchSnapshot();
    expect(view.changeListHtml).toMatchSnapshot();
  });

  it('marks two added activities green and one modified amber in the new pane', () => {
    const view = renderCompareView(v1, v2, diffResponse);
    expect(count(view.rightSvg, 'class="node change-added"')).toBe(2);
    expect(count(view.rightSvg, 'class="node change-modified"')).toBe(1);
    expect(count(view.rightSvg, 'class="node change-removed"')).toBe(0);
    expect(view.rightSvg).toMatch(/class="node change-added" data-id="task_deps_macos"/);
    expect(view.rightSvg).toMatch(/class="node change-added" data-id="task_inkscape_android"/);
    expect(view.rightSvg).toMatch(/class="node change-modified" data-id="task_inkscape_macos"/);
  });

  it('marks only the modified activity in the old pane', () => {
    const view = renderCompareView(v1, v2, diffResponse);
    expect(count(view.leftSvg, 'class="node change-modified"')).toBe(1);
    expect(count(view.leftSvg, 'class="node change-added"')).toBe(0);
    expect(count(view.leftSvg, 'class="node change-removed"')).toBe(0);
  });

  it('summarizes counts and lists the eight field deltas', () => {
    const view = renderCompareView(v1, v2, diffResponse);
    expect(view.bannerHtml).toContain('jobs 15 &#8594; 17 (+2)');
    expect(view.changeListHtml).toContain('+ job deps:macos');
    expect(view.changeListHtml).toContain('+ job inkscape:android');
    expect(view.changeListHtml).toContain('~ job inkscape:macos (8 fields)');
    expect(view.changeListHtml).toContain('+ template .macos');
  });

  it('identical versions show the no-changes banner', () => {
    const empty: DiffResponse = {
      diff: {
        schema: 'pipetwin.diff/1',
        added_jobs: [],
        removed_jobs: [],
        modified_jobs: [],
        added_templates: [],
        removed_templates: [],
        modified_templates: [],
        added_stages: [],
        removed_stages: [],
        summary: {
          stages_before: 4,
          stages_after: 4,
          stages_delta: 0,
          jobs_before: 15,
          jobs_after: 15,
          jobs_delta: 0
        }
      },
      overlays: { v1: {}, v2: {} }
    };
    const view = renderCompareView(v1, v1, empty);
    expect(view.bannerHtml).toContain('no structural changes');
    expect(count(view.leftSvg, 'class="node change-')).toBe(0);
    expect(count(view.leftSvg, 'class="lane change-')).toBe(0);
  });
});
