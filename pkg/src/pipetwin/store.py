"""Embedded single-file store with operational and analytical namespaces.

Layout: one sqlite file, table entries(namespace, key, value); values are
canonical JSON documents carrying their schema id. Key encoding:

    operational  model:<project>:<yaml_hash>     pipetwin.model/1
    operational  version:<project>:<yaml_hash>   pipetwin.version/1
    operational  run:<project>:<run_id>          pipetwin.run/1
    operational  project:<project>               pipetwin.project/1
    analytical   bpmn:<project>:<yaml_hash>      pipetwin.bpmn/1

Lookups on absent keys return None (a distinct value, never an exception);
undecodable or wrong-schema values raise StoreCorruptError.
"""

from __future__ import annotations

import json
import sqlite3
import threading

from .model import canonical_json

OPERATIONAL = "operational"
ANALYTICAL = "analytical"
_NAMESPACES = (OPERATIONAL, ANALYTICAL)

SCHEMA_VERSION_RECORD = "pipetwin.version/1"
SCHEMA_PROJECT_RECORD = "pipetwin.project/1"


class StoreCorruptError(Exception):
    def __init__(self, namespace: str, key: str, reason: str):
        self.namespace = namespace
        self.key = key
        super().__init__(f"{namespace}/{key}: {reason}")


def model_key(project_id: str, yaml_hash: str) -> str:
    return f"model:{project_id}:{yaml_hash}"


def version_key(project_id: str, yaml_hash: str) -> str:
    return f"version:{project_id}:{yaml_hash}"


def run_key(project_id: str, run_id: str) -> str:
    return f"run:{project_id}:{run_id}"


def bpmn_key(project_id: str, yaml_hash: str) -> str:
    return f"bpmn:{project_id}:{yaml_hash}"


def project_key(project_id: str) -> str:
    return f"project:{project_id}"


class TwinStore:
    """Linearizable per-key put/get over sqlite; last write wins."""

    def __init__(self, path: str = ":memory:"):
        self.path = path
        self._lock = threading.RLock()
        self._conn = sqlite3.connect(path, check_same_thread=False)
        self._conn.execute(
            "CREATE TABLE IF NOT EXISTS entries ("
            "namespace TEXT NOT NULL, key TEXT NOT NULL, value TEXT NOT NULL, "
            "PRIMARY KEY (namespace, key))"
        )
        self._conn.commit()

    def put(self, namespace: str, key: str, value: dict) -> dict:
        self._check_namespace(namespace)
        text = canonical_json(value)
        with self._lock:
            self._conn.execute(
                "INSERT INTO entries (namespace, key, value) VALUES (?, ?, ?) "
                "ON CONFLICT (namespace, key) DO UPDATE SET value = excluded.value",
                (namespace, key, text),
            )
            self._conn.commit()
        return value

    def get(self, namespace: str, key: str, expect_schema: str | None = None) -> dict | None:
        self._check_namespace(namespace)
        with self._lock:
            row = self._conn.execute(
                "SELECT value FROM entries WHERE namespace = ? AND key = ?", (namespace, key)
            ).fetchone()
        if row is None:
            return None
        try:
            value = json.loads(row[0])
        except json.JSONDecodeError as exc:
            raise StoreCorruptError(namespace, key, f"invalid JSON: {exc}") from exc
        if expect_schema is not None and value.get("schema") != expect_schema:
            raise StoreCorruptError(
                namespace, key, f"schema {value.get('schema')!r} != {expect_schema!r}"
            )
        return value

    def scan(self, namespace: str, prefix: str) -> list[tuple[str, dict]]:
        """All (key, value) pairs under a key prefix, key-sorted."""
        self._check_namespace(namespace)
        with self._lock:
            rows = self._conn.execute(
                "SELECT key, value FROM entries WHERE namespace = ? AND key LIKE ? ORDER BY key",
                (namespace, prefix + "%"),
            ).fetchall()
        out = []
        for key, text in rows:
            try:
                out.append((key, json.loads(text)))
            except json.JSONDecodeError as exc:
                raise StoreCorruptError(namespace, key, f"invalid JSON: {exc}") from exc
        return out

    def dump(self) -> str:
        """Canonical text of the full logical content; replay comparisons."""
        with self._lock:
            rows = self._conn.execute(
                "SELECT namespace, key, value FROM entries ORDER BY namespace, key"
            ).fetchall()
        return "\n".join(f"{ns}\t{key}\t{value}" for ns, key, value in rows)

    def close(self):
        with self._lock:
            self._conn.close()

    @staticmethod
    def _check_namespace(namespace: str):
        if namespace not in _NAMESPACES:
            raise ValueError(f"unknown namespace {namespace!r}")
