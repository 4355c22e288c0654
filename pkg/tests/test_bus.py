"""Pub/sub contract: ordering, no replay, backpressure, concurrent stress."""

import threading
import time

import pytest

from pipetwin.bus import Bus, SchemaViolationError, Topic


def snapshot_payload(n=0):
    return {
        "project_id": "p1",
        "ref": "main",
        "commit_sha": f"sha{n}",
        "file_path": ".gitlab-ci.yml",
        "content": "stages: [build]",
    }


class TestPublish:
    def test_publish_without_subscribers_assigns_sequence(self):
        bus = Bus()
        assert bus.publish(Topic.CONFIG_SNAPSHOT, snapshot_payload()) == 1
        assert bus.publish(Topic.CONFIG_SNAPSHOT, snapshot_payload()) == 2

    def test_sequences_are_per_topic(self):
        bus = Bus()
        bus.publish(Topic.CONFIG_SNAPSHOT, snapshot_payload())
        assert bus.publish(Topic.BPMN_XML, {"project_id": "p", "yaml_hash": "h", "xml": "<x/>"}) == 1

    def test_malformed_payload_rejected(self):
        bus = Bus()
        with pytest.raises(SchemaViolationError):
            bus.publish(Topic.CONFIG_SNAPSHOT, {"nope": True})
        with pytest.raises(SchemaViolationError):
            bus.publish(Topic.BPMN_XML, "not a mapping")

    def test_three_subscribers_observe_five_publishes_in_order(self):
        bus = Bus()
        subs = [bus.subscribe(Topic.CONFIG_SNAPSHOT) for _ in range(3)]
        for i in range(5):
            bus.publish(Topic.CONFIG_SNAPSHOT, snapshot_payload(i))
        for sub in subs:
            sequences = [sub.get(timeout=1).sequence for _ in range(5)]
            assert sequences == [1, 2, 3, 4, 5]


class TestSubscribe:
    def test_no_replay_before_subscription(self):
        bus = Bus()
        bus.publish(Topic.CONFIG_SNAPSHOT, snapshot_payload(1))
        sub = bus.subscribe(Topic.CONFIG_SNAPSHOT)
        bus.publish(Topic.CONFIG_SNAPSHOT, snapshot_payload(2))
        envelope = sub.get(timeout=1)
        assert envelope.sequence == 2
        assert sub.get(timeout=0.05) is None

    def test_two_subscriptions_both_receive(self):
        bus = Bus()
        a = bus.subscribe(Topic.CHANGE_DETECTION)
        b = bus.subscribe(Topic.CHANGE_DETECTION)
        bus.publish(Topic.CHANGE_DETECTION, snapshot_payload())
        assert a.get(timeout=1).sequence == 1
        assert b.get(timeout=1).sequence == 1

    def test_close_stops_delivery(self):
        bus = Bus()
        sub = bus.subscribe(Topic.CONFIG_SNAPSHOT)
        sub.close()
        bus.publish(Topic.CONFIG_SNAPSHOT, snapshot_payload())
        assert sub.get(timeout=0.05) is None

    def test_iteration_ends_on_close(self):
        bus = Bus()
        sub = bus.subscribe(Topic.CONFIG_SNAPSHOT)
        bus.publish(Topic.CONFIG_SNAPSHOT, snapshot_payload())
        received = []

        def consume():
            for envelope in sub:
                received.append(envelope.sequence)

        worker = threading.Thread(target=consume)
        worker.start()
        time.sleep(0.2)
        sub.close()
        worker.join(timeout=2)
        assert not worker.is_alive()
        assert received == [1]


class TestBackpressure:
    def test_slow_subscriber_blocks_publisher_without_loss(self):
        bus = Bus()
        sub = bus.subscribe(Topic.CONFIG_SNAPSHOT, buffer_size=8)
        total = 40
        published_at = []

        def publish_all():
            for i in range(total):
                bus.publish(Topic.CONFIG_SNAPSHOT, snapshot_payload(i))
                published_at.append(time.monotonic())

        publisher = threading.Thread(target=publish_all)
        publisher.start()
        time.sleep(0.3)
        # buffer is 8: the publisher must be stalled well short of total
        assert len(published_at) < total
        received = []
        while len(received) < total:
            envelope = sub.get(timeout=2)
            assert envelope is not None, f"lost envelopes after {len(received)}"
            received.append(envelope.sequence)
        publisher.join(timeout=2)
        assert received == list(range(1, total + 1))


class TestConcurrentStress:
    def test_four_publishers_four_subscribers_thousand_envelopes(self):
        bus = Bus()
        n_publishers, n_subscribers = 4, 4
        per_publisher = 250
        total = n_publishers * per_publisher
        subs = [bus.subscribe(Topic.EXECUTION_DATA, buffer_size=32) for _ in range(n_subscribers)]
        seen: list[list[int]] = [[] for _ in range(n_subscribers)]

        def publish(worker: int):
            for i in range(per_publisher):
                bus.publish(
                    Topic.EXECUTION_DATA,
                    {"project_id": f"p{worker}", "run": {"i": i}},
                )

        def consume(idx: int):
            while len(seen[idx]) < total:
                envelope = subs[idx].get(timeout=5)
                if envelope is None:
                    return
                seen[idx].append(envelope.sequence)

        consumers = [threading.Thread(target=consume, args=(i,)) for i in range(n_subscribers)]
        publishers = [threading.Thread(target=publish, args=(i,)) for i in range(n_publishers)]
        for t in consumers + publishers:
            t.start()
        for t in publishers:
            t.join(timeout=30)
        for t in consumers:
            t.join(timeout=30)
        for idx in range(n_subscribers):
            # lossless and gap-free total order per subscriber
            assert seen[idx] == list(range(1, total + 1))
