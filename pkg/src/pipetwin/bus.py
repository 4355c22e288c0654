"""In-process publish/subscribe spine with per-topic total order.

Subscribers own bounded buffers; a full buffer blocks the publisher rather
than dropping envelopes (lossless backpressure). The Topic/Envelope contract
is broker-agnostic so an external broker could replace this implementation.
"""

from __future__ import annotations

import queue
import threading
import time
from dataclasses import dataclass
from enum import Enum


class Topic(str, Enum):
    CONFIG_SNAPSHOT = "ConfigSnapshot"
    EXECUTION_DATA = "ExecutionData"
    BPMN_XML = "BpmnXml"
    CHANGE_DETECTION = "ChangeDetection"


class SchemaViolationError(Exception):
    def __init__(self, topic: Topic, reason: str):
        self.topic = topic
        super().__init__(f"payload for {topic.value} rejected: {reason}")


_REQUIRED_KEYS = {
    Topic.CONFIG_SNAPSHOT: ("project_id", "commit_sha", "file_path", "content"),
    Topic.CHANGE_DETECTION: ("project_id", "commit_sha", "file_path", "content"),
    Topic.EXECUTION_DATA: ("project_id", "run"),
    Topic.BPMN_XML: ("project_id", "yaml_hash", "xml"),
}


def _check_payload(topic: Topic, payload):
    if not isinstance(payload, dict):
        raise SchemaViolationError(topic, f"expected mapping, got {type(payload).__name__}")
    missing = [k for k in _REQUIRED_KEYS[topic] if k not in payload]
    if missing:
        raise SchemaViolationError(topic, f"missing keys {missing}")


@dataclass(frozen=True)
class Envelope:
    topic: Topic
    sequence: int
    payload: dict
    published_at: float


class Subscription:
    """Iterable stream of envelopes published after the subscription began."""

    _CLOSED = object()

    def __init__(self, bus: "Bus", topic: Topic, buffer_size: int):
        self._bus = bus
        self.topic = topic
        self._queue: queue.Queue = queue.Queue(maxsize=buffer_size)
        self.closed = False

    def get(self, timeout: float | None = None) -> Envelope | None:
        """Next envelope, or None when closed / timed out."""
        deadline = None if timeout is None else time.monotonic() + timeout
        while True:
            if self.closed and self._queue.empty():
                return None
            remaining = 0.1
            if deadline is not None:
                remaining = min(remaining, deadline - time.monotonic())
                if remaining <= 0:
                    return None
            try:
                item = self._queue.get(timeout=max(remaining, 0.001))
            except queue.Empty:
                continue
            if item is self._CLOSED:
                return None
            return item

    def __iter__(self):
        while True:
            item = self.get()
            if item is None:
                return
            yield item

    def close(self):
        """Stop delivery; drains the buffer so a blocked publisher resumes."""
        self.closed = True
        self._bus._detach(self)
        while True:
            try:
                self._queue.get_nowait()
            except queue.Empty:
                break


class Bus:
    def __init__(self):
        self._locks = {topic: threading.Lock() for topic in Topic}
        self._sequences = {topic: 0 for topic in Topic}
        self._subs: dict[Topic, list[Subscription]] = {topic: [] for topic in Topic}
        self._subs_lock = threading.Lock()

    def publish(self, topic: Topic, payload: dict) -> int:
        """Deliver to every current subscriber exactly once, in sequence order.

        Holds the topic lock across delivery: when a subscriber buffer is
        full the publisher blocks, which is what keeps the per-topic order
        gap-free and lossless.
        """
        _check_payload(topic, payload)
        with self._locks[topic]:
            self._sequences[topic] += 1
            envelope = Envelope(topic, self._sequences[topic], payload, time.time())
            with self._subs_lock:
                targets = list(self._subs[topic])
            for sub in targets:
                if sub.closed:
                    continue
                while True:
                    try:
                        sub._queue.put(envelope, timeout=0.1)
                        break
                    except queue.Full:
                        if sub.closed:
                            break
            return envelope.sequence

    def subscribe(self, topic: Topic, buffer_size: int = 64) -> Subscription:
        sub = Subscription(self, topic, buffer_size)
        with self._subs_lock:
            self._subs[topic].append(sub)
        return sub

    def sequence(self, topic: Topic) -> int:
        return self._sequences[topic]

    def _detach(self, sub: Subscription):
        with self._subs_lock:
            if sub in self._subs[sub.topic]:
                self._subs[sub.topic].remove(sub)
