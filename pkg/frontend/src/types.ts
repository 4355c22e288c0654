// Response shapes of the /api/v1 endpoints. Every number shown in the UI
// comes straight out of one of these payloads.

export interface VersionInfo {
  yaml_hash: string;
  commit_sha: string;
  ref: string;
  first_seen: string;
  job_count: number;
}

export interface ProjectInfo {
  base_url: string;
  project_id: string;
  ci_file_path: string;
  ref: string | null;
  registered_at?: string;
}

export interface ConditionJson {
  kind: 'if' | 'changes' | 'exists';
  expression: string | string[];
}

export interface JobJson {
  name: string;
  stage: string;
  script: string[];
  image: string | null;
  when: string;
  allow_failure: boolean;
  needs: string[];
  conditions: ConditionJson[];
  variables: { key: string; value: string; scope: string }[];
  tags: string[];
  retry: number | null;
}

export interface ModelJson {
  schema: string;
  yaml_hash: string;
  stage_order: string[];
  jobs: JobJson[];
}

export interface MetricsJson {
  schema: string;
  kind: 'version';
  yaml_hash: string;
  runs: number;
  success_rate_pct: number | null;
  avg_duration_s: number | null;
  median_duration_s: number | null;
  stage_avg_s: Record<string, number>;
  avg_queue_s: number | null;
  failure_categories: Record<string, number>;
}

export interface DeltaRow {
  metric: string;
  before: number | null;
  after: number | null;
  delta: number | null;
  unit: string;
  display: string;
}

export interface DeltaJson {
  schema: string;
  kind: 'delta';
  rows: DeltaRow[];
}

export interface FieldChange {
  field: string;
  before: unknown;
  after: unknown;
}

export interface JobDelta {
  name: string;
  field_changes: FieldChange[];
}

export interface DiffJson {
  schema: string;
  added_jobs: string[];
  removed_jobs: string[];
  modified_jobs: JobDelta[];
  added_templates: string[];
  removed_templates: string[];
  modified_templates: JobDelta[];
  added_stages: string[];
  removed_stages: string[];
  summary: {
    stages_before: number;
    stages_after: number;
    stages_delta: number;
    jobs_before: number;
    jobs_after: number;
    jobs_delta: number;
  };
}

export type ChangeKind = 'added' | 'removed' | 'modified';

export interface DiffResponse {
  diff: DiffJson;
  overlays: { v1: Record<string, ChangeKind>; v2: Record<string, ChangeKind> } | null;
}

export interface OverlayEntry {
  status: string;
  duration_s: number | null;
  failure_reason: string | null;
}

export type ExecutionOverlay = Record<string, OverlayEntry>;

export interface RunJson {
  run_id: string;
  pipeline_yaml_hash: string;
  status: string;
  started_at: string | null;
  finished_at: string | null;
  duration_s: number | null;
  source: string | null;
}

export interface ApiErrorBody {
  status: number;
  code: string;
  message: string;
}
