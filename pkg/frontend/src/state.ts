// View state with its two guard rules: a compare target exists only in the
// compare view, and a selected run always belongs to the selected version.

export type ActiveView = 'diagram' | 'compare' | 'dashboard';

export interface ViewState {
  selectedProject: string | null;
  selectedVersion: string | null;
  selectedRun: string | null;
  compareTarget: string | null;
  activeView: ActiveView;
}

export const initialState: ViewState = {
  selectedProject: null,
  selectedVersion: null,
  selectedRun: null,
  compareTarget: null,
  activeView: 'diagram'
};

export function selectProject(state: ViewState, projectId: string): ViewState {
  if (projectId === state.selectedProject) return state;
  return {
    ...initialState,
    activeView: state.activeView,
    compareTarget: null,
    selectedProject: projectId
  };
}

export function selectVersion(state: ViewState, yamlHash: string): ViewState {
  if (yamlHash === state.selectedVersion) return state;
  return { ...state, selectedVersion: yamlHash, selectedRun: null };
}

export function selectRun(state: ViewState, runId: string, runHash: string): ViewState {
  if (state.selectedVersion !== runHash) {
    throw new Error(`run ${runId} belongs to ${runHash}, not the selected version`);
  }
  return { ...state, selectedRun: runId };
}

export function clearRun(state: ViewState): ViewState {
  return { ...state, selectedRun: null };
}

export function setView(state: ViewState, view: ActiveView): ViewState {
  const compareTarget = view === 'compare' ? state.compareTarget : null;
  return { ...state, activeView: view, compareTarget };
}

export function setCompareTarget(state: ViewState, yamlHash: string | null): ViewState {
  if (state.activeView !== 'compare' && yamlHash !== null) {
    throw new Error('compare target can only be set in the compare view');
  }
  return { ...state, compareTarget: yamlHash };
}
