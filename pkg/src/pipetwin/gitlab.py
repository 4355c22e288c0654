"""Acquisition from the actual CI environment over the GitLab REST API (v4).

Read-only: commit history for the CI file, file content per commit, pipeline
and job telemetry, plus hash-gated change polling. Tokens ride the
private-token header and never appear in serialized or logged forms.
"""

from __future__ import annotations

import base64
import logging
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from urllib.parse import quote

import requests

from .model import ExecutionStatus, JobRun, PipelineRun, TriggerType, compute_yaml_hash
from .parser import Provenance, RawConfig

logger = logging.getLogger(__name__)

BACKOFF_BASE_S = 1.0
BACKOFF_CAP_S = 300.0
DEFAULT_POLL_INTERVAL_S = 60.0
PER_PAGE = 100

_SOURCE_MAP = {
    "push": TriggerType.PUSH,
    "merge_request_event": TriggerType.MERGE_REQUEST,
    "schedule": TriggerType.SCHEDULE,
    "api": TriggerType.API,
    "web": TriggerType.WEB,
    "trigger": TriggerType.API,
    "tag_push": TriggerType.TAG_PUSH,
}


class AcquisitionError(Exception):
    pass


class AuthFailedError(AcquisitionError):
    pass


class NotFoundError(AcquisitionError):
    pass


class RateLimitedError(AcquisitionError):
    def __init__(self, retry_after: float | None):
        self.retry_after = retry_after
        super().__init__(f"rate limited (retry after {retry_after}s)")


class TransportError(AcquisitionError):
    pass


@dataclass(frozen=True)
class ProjectHandle:
    base_url: str
    project_id: str
    token: str | None = None
    ci_file_path: str = ".gitlab-ci.yml"
    ref: str | None = None

    def __repr__(self):
        masked = "***" if self.token else None
        return (
            f"ProjectHandle(base_url={self.base_url!r}, project_id={self.project_id!r}, "
            f"token={masked!r}, ci_file_path={self.ci_file_path!r}, ref={self.ref!r})"
        )

    def to_dict(self) -> dict:
        # token deliberately omitted: credentials never reach storage or logs
        return {
            "base_url": self.base_url,
            "project_id": self.project_id,
            "ci_file_path": self.ci_file_path,
            "ref": self.ref,
        }


@dataclass(frozen=True)
class ConfigSnapshot:
    raw: RawConfig
    fetched_at: str
    committed_at: str = ""

    @property
    def yaml_hash(self) -> str:
        return compute_yaml_hash(self.raw.raw_bytes)


@dataclass(frozen=True)
class MappingRejection:
    run_id: str
    reason: str


@dataclass
class RunFetchResult:
    runs: list[PipelineRun] = field(default_factory=list)
    rejected: list[MappingRejection] = field(default_factory=list)


@dataclass(frozen=True)
class ChangeDetection:
    snapshot: ConfigSnapshot


def now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def to_utc_iso(value: str | None) -> str | None:
    """Normalize a platform timestamp to UTC ISO-8601."""
    if not value:
        return None
    text = value.replace("Z", "+00:00")
    try:
        parsed = datetime.fromisoformat(text)
    except ValueError:
        return value
    if parsed.tzinfo is None:
        parsed = parsed.replace(tzinfo=timezone.utc)
    return parsed.astimezone(timezone.utc).isoformat()


class GitLabClient:
    def __init__(self, handle: ProjectHandle, session: requests.Session | None = None,
                 timeout: float = 15.0):
        self.handle = handle
        self.timeout = timeout
        self.session = session or requests.Session()
        if handle.token:
            self.session.headers["Private-Token"] = handle.token
        self._hash_cache: dict[str, str | None] = {}

    def _url(self, path: str) -> str:
        project = quote(str(self.handle.project_id), safe="")
        return f"{self.handle.base_url.rstrip('/')}/api/v4/projects/{project}{path}"

    def _get(self, path: str, params: dict | None = None) -> requests.Response:
        try:
            response = self.session.get(self._url(path), params=params, timeout=self.timeout)
        except requests.RequestException as exc:
            raise TransportError(str(exc)) from exc
        if response.status_code in (401, 403):
            raise AuthFailedError(f"{response.status_code} for {path}")
        if response.status_code == 404:
            raise NotFoundError(f"not found: {path}")
        if response.status_code == 429:
            retry_after = response.headers.get("Retry-After")
            raise RateLimitedError(float(retry_after) if retry_after else None)
        if response.status_code >= 500:
            raise TransportError(f"{response.status_code} for {path}")
        return response

    def _paginate(self, path: str, params: dict | None = None, limit: int | None = None):
        params = dict(params or {})
        params.setdefault("per_page", PER_PAGE)
        page = 1
        yielded = 0
        while True:
            params["page"] = page
            response = self._get(path, params)
            items = response.json()
            if not isinstance(items, list):
                raise TransportError(f"expected JSON array from {path}")
            for item in items:
                yield item
                yielded += 1
                if limit is not None and yielded >= limit:
                    return
            next_page = response.headers.get("X-Next-Page", "")
            if not next_page or not items:
                return
            page = int(next_page)

    def resolve_ref(self) -> str:
        if self.handle.ref:
            return self.handle.ref
        info = self._get("").json()
        return info.get("default_branch") or "main"

    def fetch_file(self, sha: str) -> bytes:
        """CI file content at one commit (base64-decoded)."""
        encoded = quote(self.handle.ci_file_path, safe="")
        payload = self._get(f"/repository/files/{encoded}", {"ref": sha}).json()
        content = payload.get("content", "")
        if payload.get("encoding") == "base64":
            return base64.b64decode(content)
        return content.encode("utf-8")

    def _file_hash(self, sha: str) -> str | None:
        if sha not in self._hash_cache:
            try:
                self._hash_cache[sha] = compute_yaml_hash(self.fetch_file(sha))
            except NotFoundError:
                self._hash_cache[sha] = None
        return self._hash_cache[sha]

    def list_config_versions(
        self,
        limit: int | None = None,
        since: str | None = None,
        until: str | None = None,
    ) -> list[ConfigSnapshot]:
        """Snapshots for commits touching the CI file, newest first.

        Equal-content snapshots are all returned; hash-based deduplication is
        the store's concern, not the acquisition layer's.
        """
        ref = self.resolve_ref()
        params: dict = {"path": self.handle.ci_file_path, "ref_name": ref}
        if since:
            params["since"] = since
        if until:
            params["until"] = until
        commits = list(self._paginate("/repository/commits", params, limit=limit))
        if not commits:
            # distinguish "no history" from "file never existed"
            self._get(
                f"/repository/files/{quote(self.handle.ci_file_path, safe='')}",
                {"ref": ref},
            )
            return []
        snapshots = []
        for commit in commits:
            sha = commit["id"]
            raw_bytes = self.fetch_file(sha)
            self._hash_cache.setdefault(sha, compute_yaml_hash(raw_bytes))
            snapshots.append(
                ConfigSnapshot(
                    raw=RawConfig(
                        raw_bytes=raw_bytes,
                        provenance=Provenance(
                            ref=ref, commit_sha=sha, file_path=self.handle.ci_file_path
                        ),
                    ),
                    fetched_at=now_iso(),
                    committed_at=to_utc_iso(
                        commit.get("committed_date") or commit.get("created_at")
                    )
                    or "",
                )
            )
        return snapshots

    def fetch_runs(
        self, commit_or_ref: str | None = None, limit: int | None = None
    ) -> RunFetchResult:
        """Pipelines with their jobs, mapped into the execution facet.

        Runs whose platform status falls outside the execution enumeration
        are rejected and reported, never silently coerced or dropped.
        """
        params: dict = {}
        if commit_or_ref:
            is_sha = len(commit_or_ref) == 40 and all(
                c in "0123456789abcdef" for c in commit_or_ref
            )
            params["sha" if is_sha else "ref"] = commit_or_ref
        result = RunFetchResult()
        for entry in self._paginate("/pipelines", params, limit=limit):
            run_id = str(entry.get("id"))
            try:
                result.runs.append(self._map_run(run_id, entry))
            except _RunRejected as exc:
                result.rejected.append(MappingRejection(run_id=run_id, reason=str(exc)))
        return result

    def _map_run(self, run_id: str, entry: dict) -> PipelineRun:
        status = _map_status(entry.get("status"), run_id)
        sha = entry.get("sha", "")
        yaml_hash = self._file_hash(sha) if sha else None
        if yaml_hash is None:
            raise _RunRejected(f"no CI file at commit {sha!r}")
        detail = self._get(f"/pipelines/{run_id}").json()
        job_runs = []
        for job in self._paginate(f"/pipelines/{run_id}/jobs"):
            job_status = _map_status(job.get("status"), run_id, job.get("name"))
            failure_reason = job.get("failure_reason")
            if job_status != ExecutionStatus.FAILED:
                failure_reason = None
            duration = job.get("duration")
            queued = job.get("queued_duration")
            job_runs.append(
                JobRun(
                    job_name=job.get("name", ""),
                    status=job_status,
                    started_at=to_utc_iso(job.get("started_at")),
                    finished_at=to_utc_iso(job.get("finished_at")),
                    duration_s=float(duration) if duration is not None else None,
                    queued_s=float(queued) if queued is not None else None,
                    failure_reason=failure_reason,
                )
            )
        source = _SOURCE_MAP.get(detail.get("source") or entry.get("source") or "")
        duration = detail.get("duration")
        return PipelineRun(
            run_id=run_id,
            pipeline_yaml_hash=yaml_hash,
            status=status,
            started_at=to_utc_iso(detail.get("started_at")),
            finished_at=to_utc_iso(detail.get("finished_at")),
            duration_s=float(duration) if duration is not None else None,
            source=source,
            job_runs=tuple(job_runs),
        )

    def head_snapshot(self) -> ConfigSnapshot | None:
        """Latest commit touching the CI file, or None when history is empty."""
        snapshots = self.list_config_versions(limit=1)
        return snapshots[0] if snapshots else None


class _RunRejected(Exception):
    pass


def _map_status(raw: str | None, run_id: str, job_name: str | None = None) -> ExecutionStatus:
    try:
        return ExecutionStatus(str(raw))
    except ValueError:
        where = f"job {job_name!r}" if job_name else "pipeline"
        raise _RunRejected(f"{where} status {raw!r} has no execution-status mapping") from None


def track_changes(
    handle: ProjectHandle,
    poll_interval: float = DEFAULT_POLL_INTERVAL_S,
    *,
    client: GitLabClient | None = None,
    last_hash: str | None = None,
    max_polls: int | None = None,
    sleep=time.sleep,
):
    """Poll the head of the configured ref; yield one event per new content hash.

    Transport failures back off exponentially (base 1 s, cap 5 min) and never
    end the stream; credential failures do.
    """
    client = client or GitLabClient(handle)
    backoff = BACKOFF_BASE_S
    polls = 0
    while max_polls is None or polls < max_polls:
        polls += 1
        try:
            snapshot = client.head_snapshot()
            backoff = BACKOFF_BASE_S
        except (TransportError, RateLimitedError) as exc:
            logger.warning("poll failed (%s); retrying in %.0fs", exc, backoff)
            sleep(backoff)
            backoff = min(backoff * 2, BACKOFF_CAP_S)
            continue
        if snapshot is not None and snapshot.yaml_hash != last_hash:
            last_hash = snapshot.yaml_hash
            yield ChangeDetection(snapshot=snapshot)
        sleep(poll_interval)
