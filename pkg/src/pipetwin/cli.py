"""Batch CLI: offline transformation and diffing, ingestion, and serving.

Exit codes: 0 success (diff: no differences), 1 parse or validation failure,
2 I/O failure, 3 differences found (diff only).
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import __version__, bpmn
from .diff import diff as compute_diff, diff_to_dict, format_diff_text
from .gitlab import AcquisitionError, ProjectHandle
from .model import pipeline_to_dict, validate
from .parser import ParseError, Provenance, RawConfig, parse_result
from .store import TwinStore
from .twin import TwinService

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_IO = 2
EXIT_DIFFERENCES = 3


def _read(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        click.echo(f"error: cannot read {path}: {exc}", err=True)
        sys.exit(EXIT_IO)


def _parse_file(path: str):
    raw = RawConfig(raw_bytes=_read(path), provenance=Provenance(file_path=path))
    try:
        return parse_result(raw)
    except ParseError as exc:
        click.echo(f"error: {path}: {exc}", err=True)
        if hasattr(exc, "violations"):
            for v in exc.violations:
                click.echo(f"  {v.rule}: {v.entity}: {v.message}", err=True)
        sys.exit(EXIT_PARSE)


@click.group()
@click.version_option(__version__, prog_name="pipetwin")
def main():
    """Digital twin tooling for GitLab CI/CD pipelines."""


@main.command()
@click.argument("input_path", metavar="<in>")
@click.option("-o", "--output", "output_path", metavar="<out>", help="BPMN XML output file.")
@click.option("--validate-only", is_flag=True, help="Parse and validate, emit the report only.")
@click.option("--json-model", is_flag=True, help="Also emit the canonical model JSON to stdout.")
def transform(input_path, output_path, validate_only, json_model):
    """Transform a CI configuration into a BPMN 2.0 process model."""
    result = _parse_file(input_path)
    pipeline = result.pipeline
    for warning in result.warnings:
        click.echo(f"warning: {warning}", err=True)

    if validate_only:
        violations = validate(pipeline)
        click.echo(f"{len(violations)} violations")
        for v in violations:
            click.echo(f"  {v.rule}: {v.entity}: {v.message}")
        sys.exit(EXIT_OK if not violations else EXIT_PARSE)

    if not output_path:
        click.echo("error: -o/--output is required unless --validate-only", err=True)
        sys.exit(EXIT_IO)
    try:
        document = bpmn.generate(pipeline)
    except bpmn.GenerationError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_PARSE)
    try:
        Path(output_path).write_text(document.xml, encoding="utf-8")
    except OSError as exc:
        click.echo(f"error: cannot write {output_path}: {exc}", err=True)
        sys.exit(EXIT_IO)
    if json_model:
        click.echo(json.dumps(pipeline_to_dict(pipeline), indent=2, sort_keys=True))
    sys.exit(EXIT_OK)


@main.command(name="diff")
@click.argument("path_a", metavar="<a>")
@click.argument("path_b", metavar="<b>")
@click.option("--json", "as_json", is_flag=True, help="Emit the diff as JSON.")
def diff_cmd(path_a, path_b, as_json):
    """Structural diff between two CI configuration files."""
    v1 = _parse_file(path_a).pipeline
    v2 = _parse_file(path_b).pipeline
    structural = compute_diff(v1, v2)
    if as_json:
        click.echo(json.dumps(diff_to_dict(structural), indent=2, sort_keys=True))
    else:
        click.echo(format_diff_text(structural))
    sys.exit(EXIT_OK if structural.is_empty() else EXIT_DIFFERENCES)


@main.command()
@click.option("--url", required=True, help="Forge API root, e.g. https://gitlab.com")
@click.option("--project", "project_id", required=True, help="Project id or path.")
@click.option("--token", default=None, help="Private token (kept in memory only).")
@click.option("--limit", default=None, type=int, help="Most recent versions to acquire.")
@click.option("--ref", default=None, help="Branch to acquire (default branch otherwise).")
@click.option("--ci-file", default=".gitlab-ci.yml", show_default=True)
@click.option("--store", "store_path", default="pipetwin.db", show_default=True)
def ingest(url, project_id, token, limit, ref, ci_file, store_path):
    """Acquire configuration versions and run telemetry into the store."""
    store = TwinStore(store_path)
    twin = TwinService(store)
    twin.start()
    handle = ProjectHandle(
        base_url=url, project_id=project_id, token=token, ci_file_path=ci_file, ref=ref
    )
    twin.register_project(handle)
    try:
        report = twin.sync(project_id, limit=limit)
    except AcquisitionError as exc:
        click.echo(f"error: acquisition failed: {exc}", err=True)
        sys.exit(EXIT_PARSE)
    finally:
        twin.stop()
    click.echo(
        f"{report.snapshots} snapshots, {report.new_versions} new versions, "
        f"{report.runs_ingested} runs ingested, {report.runs_rejected} rejected"
    )
    for line in report.errors:
        click.echo(f"  {line}", err=True)
    sys.exit(EXIT_OK)


@main.command()
@click.option("--port", default=8080, show_default=True, type=int)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--store", "store_path", default="pipetwin.db", show_default=True)
@click.option("--ui-dir", default="frontend/dist", show_default=True,
              help="Static UI bundle served at / when present.")
def serve(port, host, store_path, ui_dir):
    """Run the twin HTTP service."""
    import uvicorn

    from .api import create_app

    store = TwinStore(store_path)
    twin = TwinService(store)
    twin.start()
    app = create_app(twin)
    if Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
