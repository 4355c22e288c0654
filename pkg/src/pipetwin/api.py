"""Local HTTP API over the twin, consumed by the browser UI and scripts.

Every non-2xx response carries exactly {status, code, message}. All
endpoints are read-only except project registration and sync triggering;
nothing writes back to the forge.
"""

from __future__ import annotations

import re

from fastapi import FastAPI, HTTPException, Query, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import __version__
from . import analytics
from .diff import diff_to_dict
from .gitlab import AcquisitionError, ProjectHandle
from .model import pipeline_to_dict, run_to_dict
from .twin import TwinService, UnknownProjectError

_HASH_RE = re.compile(r"^[0-9a-f]{64}$")


class ProjectRegistration(BaseModel):
    base_url: str
    project_id: str
    ci_file_path: str = ".gitlab-ci.yml"
    ref: str | None = None
    token: str | None = Field(default=None, description="kept in memory, never persisted")


class ProjectInfo(BaseModel):
    base_url: str
    project_id: str
    ci_file_path: str
    ref: str | None = None
    registered_at: str | None = None


class SyncSummary(BaseModel):
    project_id: str
    snapshots: int
    new_versions: int
    runs_ingested: int
    runs_rejected: int
    errors: list[str]


class VersionInfo(BaseModel):
    yaml_hash: str
    commit_sha: str
    ref: str
    first_seen: str
    job_count: int


class HealthInfo(BaseModel):
    status: str
    version: str
    projects: int
    stats: dict
    topics: dict


def _error(status: int, code: str, message: str) -> HTTPException:
    return HTTPException(status_code=status, detail={"code": code, "message": message})


def _check_hash(value: str, name: str) -> str:
    if not _HASH_RE.match(value or ""):
        raise _error(422, "invalid_hash", f"{name} must be a 64-character lowercase hex digest")
    return value


def create_app(twin: TwinService) -> FastAPI:
    app = FastAPI(title="pipetwin", version=__version__)

    @app.exception_handler(HTTPException)
    async def http_error(request: Request, exc: HTTPException):
        detail = exc.detail
        if isinstance(detail, dict) and "code" in detail:
            body = {"status": exc.status_code, **detail}
        else:
            body = {"status": exc.status_code, "code": "error", "message": str(detail)}
        return JSONResponse(status_code=exc.status_code, content=body)

    @app.exception_handler(RequestValidationError)
    async def validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=422,
            content={"status": 422, "code": "invalid_request", "message": str(exc.errors())},
        )

    @app.exception_handler(Exception)
    async def unhandled_error(request: Request, exc: Exception):
        return JSONResponse(
            status_code=500,
            content={"status": 500, "code": "internal", "message": str(exc)},
        )

    def get_project(project_id: str) -> str:
        try:
            twin.handle_for(project_id)
        except UnknownProjectError:
            raise _error(404, "unknown_project", f"project {project_id!r} is not registered")
        return project_id

    @app.get("/api/v1/health", response_model=HealthInfo)
    def health():
        status = twin.status()
        return HealthInfo(status="ok", version=__version__, **status)

    @app.get("/api/v1/projects")
    def list_projects():
        return twin.projects()

    @app.post("/api/v1/projects", response_model=ProjectInfo)
    def register_project(body: ProjectRegistration):
        handle = ProjectHandle(
            base_url=body.base_url,
            project_id=body.project_id,
            token=body.token,
            ci_file_path=body.ci_file_path,
            ref=body.ref,
        )
        record = twin.register_project(handle)
        return ProjectInfo(**{k: v for k, v in record.items() if k != "schema"})

    @app.post("/api/v1/projects/{project_id}/sync", response_model=SyncSummary)
    def sync_project(project_id: str, limit: int | None = Query(default=None, ge=1)):
        get_project(project_id)
        try:
            report = twin.sync(project_id, limit=limit)
        except AcquisitionError as exc:
            raise _error(502, "forge_unreachable", f"sync failed: {exc}")
        return SyncSummary(**report.to_dict())

    @app.get("/api/v1/projects/{project_id}/versions", response_model=list[VersionInfo])
    def list_versions(project_id: str):
        get_project(project_id)
        return [
            VersionInfo(
                yaml_hash=r["yaml_hash"],
                commit_sha=r["commit_sha"],
                ref=r.get("ref", ""),
                first_seen=r.get("first_seen", ""),
                job_count=r["job_count"],
            )
            for r in twin.versions(project_id)
        ]

    def _require_version(project_id: str, yaml_hash: str):
        if twin.model(project_id, yaml_hash) is None:
            # a hash that exists under another registered project is a
            # cross-project request, not a missing version
            for other in twin.projects():
                other_id = other["project_id"]
                if other_id != project_id and twin.model(other_id, yaml_hash) is not None:
                    raise _error(
                        409,
                        "cross_project",
                        f"version {yaml_hash} belongs to project {other_id!r}",
                    )
            raise _error(404, "unknown_version", f"no version {yaml_hash} in {project_id!r}")

    @app.get("/api/v1/projects/{project_id}/versions/{yaml_hash}/bpmn")
    def get_bpmn(project_id: str, yaml_hash: str):
        get_project(project_id)
        _check_hash(yaml_hash, "hash")
        _require_version(project_id, yaml_hash)
        document = twin.bpmn_document(project_id, yaml_hash)
        if document is None:
            raise _error(404, "unknown_version", f"no BPMN for {yaml_hash}")
        return Response(content=document.xml, media_type="application/xml")

    @app.get("/api/v1/projects/{project_id}/versions/{yaml_hash}/model")
    def get_model(project_id: str, yaml_hash: str):
        get_project(project_id)
        _check_hash(yaml_hash, "hash")
        _require_version(project_id, yaml_hash)
        return pipeline_to_dict(twin.model(project_id, yaml_hash))

    @app.get("/api/v1/projects/{project_id}/versions/{yaml_hash}/metrics")
    def get_metrics(project_id: str, yaml_hash: str):
        get_project(project_id)
        _check_hash(yaml_hash, "hash")
        _require_version(project_id, yaml_hash)
        return analytics.metrics_to_dict(twin.metrics(project_id, yaml_hash))

    @app.get("/api/v1/projects/{project_id}/diff")
    def get_diff(
        project_id: str,
        from_hash: str = Query(alias="from"),
        to_hash: str = Query(alias="to"),
    ):
        get_project(project_id)
        _check_hash(from_hash, "from")
        _check_hash(to_hash, "to")
        _require_version(project_id, from_hash)
        _require_version(project_id, to_hash)
        structural, overlays = twin.structural_diff(project_id, from_hash, to_hash)
        body = {"diff": diff_to_dict(structural), "overlays": None}
        if overlays:
            body["overlays"] = {"v1": overlays[0].entries, "v2": overlays[1].entries}
        return body

    @app.get("/api/v1/projects/{project_id}/metrics/delta")
    def get_metrics_delta(
        project_id: str,
        from_hash: str = Query(alias="from"),
        to_hash: str = Query(alias="to"),
    ):
        get_project(project_id)
        _check_hash(from_hash, "from")
        _check_hash(to_hash, "to")
        _require_version(project_id, from_hash)
        _require_version(project_id, to_hash)
        m1 = twin.metrics(project_id, from_hash)
        m2 = twin.metrics(project_id, to_hash)
        return analytics.delta_to_dict(analytics.delta(m1, m2))

    @app.get("/api/v1/projects/{project_id}/runs")
    def list_runs(project_id: str, yaml_hash: str | None = Query(default=None, alias="hash")):
        get_project(project_id)
        if yaml_hash is not None:
            _check_hash(yaml_hash, "hash")
        return [run_to_dict(r) for r in twin.runs(project_id, yaml_hash)]

    @app.get("/api/v1/projects/{project_id}/runs/{run_id}/overlay")
    def run_overlay(project_id: str, run_id: str):
        get_project(project_id)
        run = twin.run(project_id, run_id)
        if run is None:
            raise _error(404, "unknown_run", f"no run {run_id!r} in {project_id!r}")
        document = twin.bpmn_document(project_id, run.pipeline_yaml_hash)
        if document is None:
            raise _error(404, "unknown_version", f"no BPMN for {run.pipeline_yaml_hash}")
        try:
            result = analytics.overlay(run, document)
        except analytics.MissingElementError as exc:
            raise _error(409, "missing_element", str(exc))
        return analytics.overlay_to_dict(result)

    return app
