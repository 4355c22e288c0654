// Typed client for the twin's /api/v1 surface. Non-2xx bodies always carry
// {status, code, message}; they surface as ApiRequestError for banners.

import type {
  ApiErrorBody,
  DeltaJson,
  DiffResponse,
  ExecutionOverlay,
  MetricsJson,
  ModelJson,
  ProjectInfo,
  RunJson,
  VersionInfo
} from './types';

const BASE = '/api/v1';

export class ApiRequestError extends Error {
  readonly status: number;
  readonly code: string;

  constructor(body: ApiErrorBody) {
    super(body.message);
    this.status = body.status;
    this.code = body.code;
  }
}

async function request<T>(path: string, init?: RequestInit): Promise<T> {
  const response = await fetch(`${BASE}${path}`, init);
  if (!response.ok) {
    const body = (await response.json()) as ApiErrorBody;
    throw new ApiRequestError(body);
  }
  return (await response.json()) as T;
}

async function requestText(path: string): Promise<string> {
  const response = await fetch(`${BASE}${path}`);
  if (!response.ok) {
    const body = (await response.json()) as ApiErrorBody;
    throw new ApiRequestError(body);
  }
  return await response.text();
}

export const api = {
  health: () => request<Record<string, unknown>>('/health'),
  projects: () => request<ProjectInfo[]>('/projects'),
  registerProject: (body: {
    base_url: string;
    project_id: string;
    ci_file_path?: string;
    token?: string;
  }) =>
    request<ProjectInfo>('/projects', {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(body)
    }),
  sync: (projectId: string) =>
    request<{ new_versions: number; runs_ingested: number }>(
      `/projects/${encodeURIComponent(projectId)}/sync`,
      { method: 'POST' }
    ),
  versions: (projectId: string) =>
    request<VersionInfo[]>(`/projects/${encodeURIComponent(projectId)}/versions`),
  bpmn: (projectId: string, hash: string) =>
    requestText(`/projects/${encodeURIComponent(projectId)}/versions/${hash}/bpmn`),
  model: (projectId: string, hash: string) =>
    request<ModelJson>(`/projects/${encodeURIComponent(projectId)}/versions/${hash}/model`),
  metrics: (projectId: string, hash: string) =>
    request<MetricsJson>(`/projects/${encodeURIComponent(projectId)}/versions/${hash}/metrics`),
  diff: (projectId: string, from: string, to: string) =>
    request<DiffResponse>(
      `/projects/${encodeURIComponent(projectId)}/diff?from=${from}&to=${to}`
    ),
  metricsDelta: (projectId: string, from: string, to: string) =>
    request<DeltaJson>(
      `/projects/${encodeURIComponent(projectId)}/metrics/delta?from=${from}&to=${to}`
    ),
  runs: (projectId: string, hash?: string) =>
    request<RunJson[]>(
      `/projects/${encodeURIComponent(projectId)}/runs${hash ? `?hash=${hash}` : ''}`
    ),
  overlay: (projectId: string, runId: string) =>
    request<ExecutionOverlay>(
      `/projects/${encodeURIComponent(projectId)}/runs/${encodeURIComponent(runId)}/overlay`
    )
};
