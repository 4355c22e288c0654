import { describe, expect, it } from 'vitest';

import {
  initialState,
  selectProject,
  selectRun,
  selectVersion,
  setCompareTarget,
  setView
} from '../src/state';

const H1 = 'a'.repeat(64);
const H2 = 'b'.repeat(64);

describe('view state guards', () => {
  it('selecting a project resets version, run, and compare target', () => {
    let state = selectProject(initialState, 'p1');
    state = selectVersion(state, H1);
    state = setView(state, 'compare');
    state = setCompareTarget(state, H2);
    const next = selectProject(state, 'p2');
    expect(next.selectedVersion).toBeNull();
    expect(next.selectedRun).toBeNull();
    expect(next.compareTarget).toBeNull();
  });

  it('a selected run must belong to the selected version', () => {
    let state = selectProject(initialState, 'p1');
    state = selectVersion(state, H1);
    state = selectRun(state, '42', H1);
    expect(state.selectedRun).toBe('42');
    expect(() => selectRun(state, '43', H2)).toThrow(/not the selected version/);
  });

  it('changing version clears the selected run', () => {
    let state = selectProject(initialState, 'p1');
    state = selectVersion(state, H1);
    state = selectRun(state, '42', H1);
    state = selectVersion(state, H2);
    expect(state.selectedRun).toBeNull();
  });

  it('compare target only exists in the compare view', () => {
    let state = selectProject(initialState, 'p1');
    expect(() => setCompareTarget(state, H2)).toThrow(/compare view/);
    state = setView(state, 'compare');
    state = setCompareTarget(state, H2);
    expect(state.compareTarget).toBe(H2);
    state = setView(state, 'diagram');
    expect(state.compareTarget).toBeNull();
  });
});
