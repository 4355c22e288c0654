// Single-page wiring: selectors drive fetches, renderers produce the DOM.
// Stale responses are discarded by generation tagging; the only
// state-changing action is the sync button, which pulls from the forge.

import { api, ApiRequestError } from './api';
import { renderCompareView } from './compare';
import { renderDashboard } from './dashboard';
import { renderDetailPanel, renderDiagramView } from './diagram';
import {
  initialState,
  selectProject,
  selectRun,
  selectVersion,
  setCompareTarget,
  setView,
  ViewState,
  ActiveView
} from './state';
import type { ModelJson, ExecutionOverlay, VersionInfo, RunJson } from './types';

let state: ViewState = initialState;
let generation = 0;
let versions: VersionInfo[] = [];
let runs: RunJson[] = [];
let model: ModelJson | null = null;
let overlay: ExecutionOverlay | undefined;

const app = document.querySelector<HTMLDivElement>('#app');

function el<T extends HTMLElement>(selector: string): T {
  const found = document.querySelector<T>(selector);
  if (!found) throw new Error(`missing element ${selector}`);
  return found;
}

function banner(message: string, kind: 'error' | 'info' = 'error') {
  const zone = el<HTMLDivElement>('#banners');
  const div = document.createElement('div');
  div.className = `banner ${kind}`;
  div.textContent = message;
  const close = document.createElement('button');
  close.textContent = 'x';
  close.onclick = () => div.remove();
  div.appendChild(close);
  zone.appendChild(div);
}

function shortHash(hash: string): string {
  return hash.slice(0, 10);
}

async function refreshProjects() {
  const projects = await api.projects();
  const select = el<HTMLSelectElement>('#project-select');
  select.innerHTML =
    '<option value="">select project</option>' +
    projects
      .map((p) => `<option value="${p.project_id}">${p.project_id} (${p.base_url})</option>`)
      .join('');
  if (state.selectedProject) select.value = state.selectedProject;
}

async function refreshVersions() {
  if (!state.selectedProject) return;
  versions = await api.versions(state.selectedProject);
  const select = el<HTMLSelectElement>('#version-select');
  const compare = el<HTMLSelectElement>('#compare-select');
  const options = versions
    .map(
      (v) =>
        `<option value="${v.yaml_hash}">${shortHash(v.yaml_hash)} &#183; ` +
        `${v.first_seen.slice(0, 10)} &#183; ${v.job_count} jobs</option>`
    )
    .join('');
  select.innerHTML = '<option value="">select version</option>' + options;
  compare.innerHTML = '<option value="">compare with&#8230;</option>' + options;
  if (state.selectedVersion) select.value = state.selectedVersion;
  if (state.compareTarget) compare.value = state.compareTarget;
}

async function refreshRuns() {
  const select = el<HTMLSelectElement>('#run-select');
  if (!state.selectedProject || !state.selectedVersion) {
    select.innerHTML = '<option value="">runs&#8230;</option>';
    return;
  }
  runs = await api.runs(state.selectedProject, state.selectedVersion);
  select.innerHTML =
    '<option value="">structure only</option>' +
    runs
      .map((r) => `<option value="${r.run_id}">run ${r.run_id} &#183; ${r.status}</option>`)
      .join('');
  if (state.selectedRun) select.value = state.selectedRun;
}

async function render() {
  const mine = ++generation;
  const main = el<HTMLDivElement>('#view');
  if (!state.selectedProject || !state.selectedVersion) {
    main.innerHTML = '<p class="hint">Register or pick a project, then pick a version.</p>';
    return;
  }
  const project = state.selectedProject;
  const version = state.selectedVersion;
  try {
    if (state.activeView === 'diagram') {
      const [xml, modelJson] = await Promise.all([
        api.bpmn(project, version),
        api.model(project, version)
      ]);
      overlay = state.selectedRun ? await api.overlay(project, state.selectedRun) : undefined;
      if (mine !== generation) return;
      model = modelJson;
      const view = renderDiagramView(xml, overlay);
      main.innerHTML =
        view.legendHtml + `<div class="canvas">${view.svg}</div><div id="detail"></div>`;
      attachDetailHandlers();
    } else if (state.activeView === 'compare') {
      if (!state.compareTarget) {
        main.innerHTML = '<p class="hint">Pick a comparison target version.</p>';
        return;
      }
      const [leftXml, rightXml, diffResponse] = await Promise.all([
        api.bpmn(project, version),
        api.bpmn(project, state.compareTarget),
        api.diff(project, version, state.compareTarget)
      ]);
      if (mine !== generation) return;
      const view = renderCompareView(leftXml, rightXml, diffResponse);
      main.innerHTML =
        view.bannerHtml +
        `<div class="panes"><div class="canvas">${view.leftSvg}</div>` +
        `<div class="canvas">${view.rightSvg}</div></div>` +
        view.changeListHtml;
    } else {
      const metrics = await api.metrics(project, version);
      const delta = state.compareTarget
        ? await api.metricsDelta(project, version, state.compareTarget)
        : undefined;
      if (mine !== generation) return;
      main.innerHTML = renderDashboard(metrics, delta);
    }
  } catch (error) {
    if (error instanceof ApiRequestError) {
      banner(`${error.code}: ${error.message}`);
    } else {
      banner(String(error));
    }
  }
}

function attachDetailHandlers() {
  for (const shape of document.querySelectorAll<SVGElement>('[data-id^="task_"]')) {
    shape.addEventListener('click', () => {
      const elementId = shape.getAttribute('data-id') ?? '';
      const job = model?.jobs.find(
        (j) => `task_${j.name.replace(/[^A-Za-z0-9_]/g, '_')}` === elementId
      );
      if (!job) return;
      el<HTMLDivElement>('#detail').innerHTML = renderDetailPanel(job, overlay?.[elementId]);
    });
  }
}

async function onSync() {
  if (!state.selectedProject) return;
  const button = el<HTMLButtonElement>('#sync-button');
  button.disabled = true;
  try {
    const report = await api.sync(state.selectedProject);
    banner(
      report.new_versions === 0
        ? 'no new versions'
        : `${report.new_versions} new version(s), ${report.runs_ingested} runs`,
      'info'
    );
    await refreshVersions();
    await render();
  } catch (error) {
    if (error instanceof ApiRequestError) banner(`${error.code}: ${error.message}`);
    else banner(String(error));
  } finally {
    button.disabled = false;
  }
}

function bind() {
  el<HTMLSelectElement>('#project-select').addEventListener('change', async (event) => {
    state = selectProject(state, (event.target as HTMLSelectElement).value);
    await refreshVersions();
    await refreshRuns();
    await render();
  });
  el<HTMLSelectElement>('#version-select').addEventListener('change', async (event) => {
    state = selectVersion(state, (event.target as HTMLSelectElement).value);
    await refreshRuns();
    await render();
  });
  el<HTMLSelectElement>('#run-select').addEventListener('change', async (event) => {
    const runId = (event.target as HTMLSelectElement).value;
    if (!runId) {
      state = { ...state, selectedRun: null };
    } else {
      const run = runs.find((r) => r.run_id === runId);
      if (run) state = selectRun(state, runId, run.pipeline_yaml_hash);
    }
    await render();
  });
  el<HTMLSelectElement>('#compare-select').addEventListener('change', async (event) => {
    state = setCompareTarget(state, (event.target as HTMLSelectElement).value || null);
    await render();
  });
  for (const view of ['diagram', 'compare', 'dashboard'] as ActiveView[]) {
    el<HTMLButtonElement>(`#tab-${view}`).addEventListener('click', async () => {
      state = setView(state, view);
      document
        .querySelectorAll('.tab')
        .forEach((tab) => tab.classList.toggle('active', tab.id === `tab-${view}`));
      const compareSelect = el<HTMLSelectElement>('#compare-select');
      compareSelect.style.display = view === 'diagram' ? 'none' : '';
      await render();
    });
  }
  el<HTMLButtonElement>('#sync-button').addEventListener('click', onSync);
}

if (app) {
  bind();
  refreshProjects().then(render).catch((error) => banner(String(error)));
}
