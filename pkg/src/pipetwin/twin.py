"""Twin orchestration: snapshots in, models, BPMN documents, and metrics out.

The loop mirrors the data-distribution design: acquisition publishes
ConfigSnapshot / ExecutionData / ChangeDetection envelopes, worker threads
consume them, persist models and runs in the operational namespace, and
generate BPMN documents into the analytical namespace exactly once per
content hash. Per-event failures are isolated; the loop never halts.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, field

from . import analytics, bpmn
from .bus import Bus, Topic
from .diff import diff as compute_diff, project as project_diff
from .gitlab import (
    AcquisitionError,
    ConfigSnapshot,
    GitLabClient,
    ProjectHandle,
    now_iso,
)
from .model import Pipeline, pipeline_from_dict, pipeline_to_dict, run_from_dict, run_to_dict
from .parser import ParseError, Provenance, RawConfig, parse
from .store import (
    ANALYTICAL,
    OPERATIONAL,
    SCHEMA_PROJECT_RECORD,
    SCHEMA_VERSION_RECORD,
    TwinStore,
    bpmn_key,
    model_key,
    project_key,
    run_key,
    version_key,
)

logger = logging.getLogger(__name__)

_CONSUMED_TOPICS = (Topic.CONFIG_SNAPSHOT, Topic.CHANGE_DETECTION, Topic.EXECUTION_DATA)


@dataclass
class SyncReport:
    project_id: str
    snapshots: int = 0
    new_versions: int = 0
    runs_ingested: int = 0
    runs_rejected: int = 0
    errors: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "project_id": self.project_id,
            "snapshots": self.snapshots,
            "new_versions": self.new_versions,
            "runs_ingested": self.runs_ingested,
            "runs_rejected": self.runs_rejected,
            "errors": list(self.errors),
        }


class UnknownProjectError(Exception):
    pass


class TwinService:
    """One process-local twin over a persistent store and an in-process bus."""

    def __init__(self, store: TwinStore, bus: Bus | None = None, client_factory=GitLabClient):
        self.store = store
        self.bus = bus or Bus()
        self._client_factory = client_factory
        self._handles: dict[str, ProjectHandle] = {}
        self._trackers: dict[str, ChangeTracker] = {}
        self._head_hash: dict[str, str] = {}
        self._metrics_cache: dict[tuple[str, str], analytics.VersionMetrics] = {}
        self._process_lock = threading.RLock()
        self._sync_locks: dict[str, threading.Lock] = {}
        self._processed = {topic: 0 for topic in _CONSUMED_TOPICS}
        self._processed_cond = threading.Condition()
        self._workers: list[threading.Thread] = []
        self._subscriptions = []
        self.stats = {
            "generations": 0,
            "snapshots_processed": 0,
            "runs_processed": 0,
            "change_events": 0,
            "errors": 0,
        }
        for key, record in self.store.scan(OPERATIONAL, "project:"):
            handle = ProjectHandle(
                base_url=record["base_url"],
                project_id=record["project_id"],
                ci_file_path=record["ci_file_path"],
                ref=record.get("ref"),
            )
            self._handles[handle.project_id] = handle

    # --- lifecycle ---

    def start(self):
        """Launch one worker per consumed topic."""
        if self._workers:
            return
        for topic in _CONSUMED_TOPICS:
            sub = self.bus.subscribe(topic, buffer_size=256)
            self._subscriptions.append(sub)
            worker = threading.Thread(
                target=self._consume, args=(topic, sub), daemon=True, name=f"twin-{topic.value}"
            )
            worker.start()
            self._workers.append(worker)

    def stop(self):
        for sub in self._subscriptions:
            sub.close()
        for worker in self._workers:
            worker.join(timeout=2)
        self._workers.clear()
        self._subscriptions.clear()

    def wait_idle(self, timeout: float = 10.0) -> bool:
        """Block until every published envelope on consumed topics is handled."""

        def drained() -> bool:
            return all(
                self._processed[topic] >= self.bus.sequence(topic) for topic in _CONSUMED_TOPICS
            )

        with self._processed_cond:
            return self._processed_cond.wait_for(drained, timeout=timeout)

    def _consume(self, topic: Topic, sub):
        for envelope in sub:
            try:
                if topic in (Topic.CONFIG_SNAPSHOT, Topic.CHANGE_DETECTION):
                    if topic == Topic.CHANGE_DETECTION:
                        self.stats["change_events"] += 1
                    self._process_snapshot(envelope.payload)
                else:
                    self._process_execution(envelope.payload)
            except Exception:
                # poison envelopes are logged and skipped, never fatal
                self.stats["errors"] += 1
                logger.exception("failed to process %s envelope", topic.value)
            finally:
                with self._processed_cond:
                    self._processed[topic] += 1
                    self._processed_cond.notify_all()

    # --- project registry ---

    def register_project(self, handle: ProjectHandle) -> dict:
        self._handles[handle.project_id] = handle
        record = dict(handle.to_dict(), schema=SCHEMA_PROJECT_RECORD, registered_at=now_iso())
        existing = self.store.get(OPERATIONAL, project_key(handle.project_id))
        if existing:
            record["registered_at"] = existing.get("registered_at", record["registered_at"])
        self.store.put(OPERATIONAL, project_key(handle.project_id), record)
        return record

    def projects(self) -> list[dict]:
        return [record for _, record in self.store.scan(OPERATIONAL, "project:")]

    def handle_for(self, project_id: str) -> ProjectHandle:
        if project_id not in self._handles:
            raise UnknownProjectError(project_id)
        return self._handles[project_id]

    # --- acquisition driving ---

    def sync(self, project_id: str, limit: int | None = None, with_runs: bool = True) -> SyncReport:
        """Pull config history (and optionally runs) from the forge, then wait
        for the processing loop to drain. Serialized per project."""
        handle = self.handle_for(project_id)
        lock = self._sync_locks.setdefault(project_id, threading.Lock())
        report = SyncReport(project_id=project_id)
        with lock:
            client = self._client_factory(handle)
            before = {h for h, _ in self._version_records(project_id)}
            snapshots = client.list_config_versions(limit=limit)
            # oldest first so the first-seen commit of each hash lands first
            for snapshot in reversed(snapshots):
                self.publish_snapshot(project_id, snapshot)
                report.snapshots += 1
            if with_runs:
                fetched = client.fetch_runs(limit=limit)
                for run in fetched.runs:
                    self.bus.publish(
                        Topic.EXECUTION_DATA,
                        {"project_id": project_id, "run": run_to_dict(run)},
                    )
                    report.runs_ingested += 1
                report.runs_rejected = len(fetched.rejected)
                report.errors.extend(f"run {r.run_id}: {r.reason}" for r in fetched.rejected)
            self.wait_idle()
            after = {h for h, _ in self._version_records(project_id)}
            report.new_versions = len(after - before)
            if snapshots:
                # newest-first listing: snapshots[0] is the current head
                self._head_hash[project_id] = snapshots[0].yaml_hash
                tracker = self._trackers.get(project_id)
                if tracker:
                    tracker.seed(snapshots[0].yaml_hash)
        return report

    def publish_snapshot(self, project_id: str, snapshot: ConfigSnapshot, topic: Topic = Topic.CONFIG_SNAPSHOT):
        self.bus.publish(
            topic,
            {
                "project_id": project_id,
                "ref": snapshot.raw.provenance.ref,
                "commit_sha": snapshot.raw.provenance.commit_sha,
                "file_path": snapshot.raw.provenance.file_path,
                "content": snapshot.raw.raw_bytes.decode("utf-8", errors="replace"),
                "committed_at": snapshot.committed_at,
                "fetched_at": snapshot.fetched_at,
            },
        )

    def tracker(self, project_id: str, poll_interval: float = 60.0) -> "ChangeTracker":
        if project_id not in self._trackers:
            handle = self.handle_for(project_id)
            tracker = ChangeTracker(
                self, project_id, self._client_factory(handle), poll_interval
            )
            tracker.seed(self._head_hash.get(project_id))
            self._trackers[project_id] = tracker
        return self._trackers[project_id]

    # --- event processing ---

    def _process_snapshot(self, payload: dict):
        project_id = payload["project_id"]
        raw = RawConfig(
            raw_bytes=payload["content"].encode("utf-8"),
            provenance=Provenance(
                ref=payload.get("ref", ""),
                commit_sha=payload["commit_sha"],
                file_path=payload["file_path"],
            ),
        )
        try:
            pipeline = parse(raw)
        except ParseError as exc:
            self.stats["errors"] += 1
            logger.warning(
                "snapshot %s rejected: %s", payload.get("commit_sha", "?"), exc
            )
            return
        with self._process_lock:
            self.stats["snapshots_processed"] += 1
            committed_at = payload.get("committed_at") or ""
            record = self.store.get(
                OPERATIONAL, version_key(project_id, pipeline.yaml_hash)
            )
            is_new = record is None
            if is_new or (committed_at and committed_at < record.get("first_seen", "")):
                self.store.put(
                    OPERATIONAL,
                    model_key(project_id, pipeline.yaml_hash),
                    pipeline_to_dict(pipeline),
                )
                self.store.put(
                    OPERATIONAL,
                    version_key(project_id, pipeline.yaml_hash),
                    {
                        "schema": SCHEMA_VERSION_RECORD,
                        "yaml_hash": pipeline.yaml_hash,
                        "commit_sha": pipeline.commit_sha,
                        "ref": pipeline.ref,
                        "first_seen": committed_at,
                        "job_count": len(pipeline.jobs),
                    },
                )
            cached = self.store.get(ANALYTICAL, bpmn_key(project_id, pipeline.yaml_hash))
            if cached is None:
                document = bpmn.generate(pipeline)
                self.stats["generations"] += 1
                self.store.put(
                    ANALYTICAL, bpmn_key(project_id, pipeline.yaml_hash), document.to_dict()
                )
                self.bus.publish(
                    Topic.BPMN_XML,
                    {
                        "project_id": project_id,
                        "yaml_hash": pipeline.yaml_hash,
                        "xml": document.xml,
                    },
                )

    def _process_execution(self, payload: dict):
        project_id = payload["project_id"]
        run = run_from_dict(payload["run"])
        with self._process_lock:
            self.stats["runs_processed"] += 1
            self.store.put(OPERATIONAL, run_key(project_id, run.run_id), run_to_dict(run))
            self._metrics_cache.pop((project_id, run.pipeline_yaml_hash), None)

    # --- queries ---

    def _version_records(self, project_id: str) -> list[tuple[str, dict]]:
        prefix = f"version:{project_id}:"
        return [
            (key[len(prefix):], record)
            for key, record in self.store.scan(OPERATIONAL, prefix)
        ]

    def versions(self, project_id: str) -> list[dict]:
        records = [record for _, record in self._version_records(project_id)]
        records.sort(key=lambda r: (r.get("first_seen", ""), r["yaml_hash"]))
        return records

    def model(self, project_id: str, yaml_hash: str) -> Pipeline | None:
        record = self.store.get(OPERATIONAL, model_key(project_id, yaml_hash))
        return pipeline_from_dict(record) if record else None

    def bpmn_document(self, project_id: str, yaml_hash: str) -> bpmn.BpmnDocument | None:
        record = self.store.get(ANALYTICAL, bpmn_key(project_id, yaml_hash))
        return bpmn.BpmnDocument.from_dict(record) if record else None

    def runs(self, project_id: str, yaml_hash: str | None = None) -> list:
        out = []
        for _, record in self.store.scan(OPERATIONAL, f"run:{project_id}:"):
            run = run_from_dict(record)
            if yaml_hash is None or run.pipeline_yaml_hash == yaml_hash:
                out.append(run)
        out.sort(key=lambda r: (r.started_at or "", r.run_id))
        return out

    def run(self, project_id: str, run_id: str):
        record = self.store.get(OPERATIONAL, run_key(project_id, run_id))
        return run_from_dict(record) if record else None

    def metrics(self, project_id: str, yaml_hash: str) -> analytics.VersionMetrics:
        cache_key = (project_id, yaml_hash)
        if cache_key not in self._metrics_cache:
            self._metrics_cache[cache_key] = analytics.aggregate(
                self.runs(project_id, yaml_hash),
                pipeline=self.model(project_id, yaml_hash),
                yaml_hash=yaml_hash,
            )
        return self._metrics_cache[cache_key]

    def structural_diff(self, project_id: str, hash1: str, hash2: str):
        v1 = self.model(project_id, hash1)
        v2 = self.model(project_id, hash2)
        if v1 is None or v2 is None:
            return None
        structural = compute_diff(v1, v2)
        b1 = self.bpmn_document(project_id, hash1)
        b2 = self.bpmn_document(project_id, hash2)
        overlays = project_diff(structural, b1, b2) if b1 and b2 else None
        return structural, overlays

    def status(self) -> dict:
        return {
            "projects": len(self.projects()),
            "stats": dict(self.stats),
            "topics": {topic.value: self.bus.sequence(topic) for topic in Topic},
        }


class ChangeTracker:
    """Hash-gated poller for one project; emits ChangeDetection envelopes."""

    def __init__(self, twin: TwinService, project_id: str, client, poll_interval: float):
        self.twin = twin
        self.project_id = project_id
        self.client = client
        self.poll_interval = poll_interval
        self.last_hash: str | None = None

    def seed(self, yaml_hash: str | None):
        self.last_hash = yaml_hash

    def poll_once(self) -> bool:
        """One poll step; returns True when a change event was published."""
        snapshot = self.client.head_snapshot()
        if snapshot is None or snapshot.yaml_hash == self.last_hash:
            return False
        self.last_hash = snapshot.yaml_hash
        self.twin.publish_snapshot(self.project_id, snapshot, topic=Topic.CHANGE_DETECTION)
        return True

    def run(self, stop_event: threading.Event, sleep=None):
        """Poll loop for long-running deployments."""
        import time as _time

        sleep = sleep or _time.sleep
        backoff = 1.0
        while not stop_event.is_set():
            try:
                self.poll_once()
                backoff = 1.0
                sleep(self.poll_interval)
            except AcquisitionError as exc:
                logger.warning("change tracking poll failed: %s", exc)
                sleep(backoff)
                backoff = min(backoff * 2, 300.0)
