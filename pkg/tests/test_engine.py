"""Streaming matcher behavior, batch-oracle equivalence, and probability
consistency against the exact evaluator."""

import json
import random

import pytest

from fusedesk.definitions import (
    ComplexEventDefinition,
    ConstituentSpec,
    compile_definition,
)
from fusedesk.engine import Detection, Engine, match_brute
from fusedesk.errors import (
    LogTooLargeError,
    OutOfOrderTimestampError,
    VersionMismatchError,
)
from fusedesk.feeds import FeedState, RegularMarking, SimpleEvent
from fusedesk.jsonutil import dumps_canonical
from fusedesk.logic import ProbFact, evaluate_exact


def ied_definition():
    return ComplexEventDefinition(
        name="ied",
        constituents=(
            ConstituentSpec("explosion", "initiator"),
            ConstituentSpec("siren", "terminator"),
        ),
        window_seconds=300.0,
        radius_meters=500.0,
    )


def make_event(event_id, cls, conf, t, loc=(0.0, 0.0), feed="checkpoint", context="day"):
    return SimpleEvent(
        id=event_id,
        feed_id=feed,
        modality="audio",
        class_label=cls,
        confidence=conf,
        timestamp=float(t),
        location=loc,
        partner="UK",
        context=context,
    )


class TestIngest:
    def test_ied_example(self):
        engine = Engine([ied_definition()])
        detections = engine.ingest_all(
            [
                make_event("cp-1", "explosion", 0.9, 10),
                make_event("cp-2", "siren", 0.8, 60, (100.0, 0.0)),
            ]
        )
        assert len(detections) == 1
        detection = detections[0]
        assert detection.interval_start == 10.0
        assert detection.interval_end == 60.0
        assert detection.probability == pytest.approx(0.72, abs=1e-9)
        assert detection.constituent_event_ids == (
            ("initiator", "cp-1"),
            ("terminator", "cp-2"),
        )
        assert detection.location == (0.0, 0.0)

    def test_window_expiry(self):
        engine = Engine([ied_definition()])
        detections = engine.ingest_all(
            [
                make_event("cp-1", "explosion", 0.9, 10),
                make_event("cp-2", "siren", 0.8, 400, (100.0, 0.0)),
            ]
        )
        assert detections == []
        assert engine.open_instances == []  # expired at t=310

    def test_radius_violation(self):
        engine = Engine([ied_definition()])
        detections = engine.ingest_all(
            [
                make_event("cp-1", "explosion", 0.9, 10),
                make_event("cp-2", "siren", 0.8, 60, (501.0, 0.0)),
            ]
        )
        assert detections == []

    def test_suppressed_initiator_opens_nothing(self):
        state = FeedState()
        state.mark_regular(RegularMarking("nightclub", "shotput", "any", "op", 1.0))
        definition = ComplexEventDefinition(
            name="scuffle",
            constituents=(
                ConstituentSpec("shotput", "initiator"),
                ConstituentSpec("punch", "terminator"),
            ),
            window_seconds=60.0,
            radius_meters=100.0,
        )
        engine = Engine([definition], feed_state=state)
        detections = engine.ingest_all(
            [
                make_event("nc-1", "shotput", 0.9, 10, feed="nightclub"),
                make_event("nc-2", "punch", 0.8, 20, feed="nightclub"),
            ]
        )
        assert detections == []
        assert engine.open_instances == []
        # still logged for audit
        assert [e.id for e in engine.event_log] == ["nc-1", "nc-2"]
        assert "nc-1" in engine.suppressions

    def test_two_sirens_first_closes(self):
        engine = Engine([ied_definition()])
        detections = engine.ingest_all(
            [
                make_event("cp-1", "explosion", 0.9, 10),
                make_event("cp-2", "siren", 0.8, 60, (100.0, 0.0)),
                make_event("cp-3", "siren", 0.5, 70, (100.0, 0.0)),
            ]
        )
        assert len(detections) == 1
        assert detections[0].constituent_event_ids == (
            ("initiator", "cp-1"),
            ("terminator", "cp-2"),
        )
        assert engine.open_instances == []  # second siren opened nothing

    def test_each_initiator_opens_instance(self):
        engine = Engine([ied_definition()])
        detections = engine.ingest_all(
            [
                make_event("cp-1", "explosion", 0.9, 10),
                make_event("cp-2", "explosion", 0.7, 20),
                make_event("cp-3", "siren", 0.8, 60, (100.0, 0.0)),
            ]
        )
        assert len(detections) == 2
        assert [d.interval_start for d in detections] == [10.0, 20.0]
        assert detections[0].probability == pytest.approx(0.72, abs=1e-9)
        assert detections[1].probability == pytest.approx(0.56, abs=1e-9)

    def test_zero_span_degenerate(self):
        definition = ComplexEventDefinition(
            name="boom",
            constituents=(
                ConstituentSpec("explosion", "initiator"),
                ConstituentSpec("explosion", "terminator"),
            ),
            window_seconds=60.0,
            radius_meters=100.0,
        )
        engine = Engine([definition])
        detections = engine.ingest_all([make_event("cp-1", "explosion", 0.9, 10)])
        assert len(detections) == 1
        assert detections[0].interval_start == detections[0].interval_end == 10.0
        assert detections[0].probability == pytest.approx(0.9)

    def test_supporting_min_count(self):
        definition = ComplexEventDefinition(
            name="ambush",
            constituents=(
                ConstituentSpec("explosion", "initiator"),
                ConstituentSpec("siren", "terminator"),
                ConstituentSpec("gunshot", "supporting", min_count=2),
            ),
            window_seconds=300.0,
            radius_meters=500.0,
        )
        engine = Engine([definition])
        stream = [
            make_event("a", "explosion", 0.9, 0),
            make_event("b", "gunshot", 0.6, 10),
            make_event("c", "siren", 0.8, 20),  # counts unmet: one gunshot
            make_event("d", "gunshot", 0.7, 30),
            make_event("e", "siren", 0.5, 40),  # now closes
        ]
        detections = engine.ingest_all(stream)
        assert len(detections) == 1
        detection = detections[0]
        assert detection.interval_end == 40.0
        # the closing siren is the terminator constituent
        roles = dict()
        for role, event_id in detection.constituent_event_ids:
            roles.setdefault(role, []).append(event_id)
        assert roles["terminator"] == ["e"]
        assert sorted(roles["supporting"]) == ["b", "d"]
        assert detection.probability == pytest.approx(0.9 * 0.5 * 0.6 * 0.7, abs=1e-12)

    def test_out_of_order_rejected(self):
        engine = Engine([ied_definition()])
        engine.ingest(make_event("cp-2", "explosion", 0.9, 10))
        with pytest.raises(OutOfOrderTimestampError):
            engine.ingest(make_event("cp-3", "siren", 0.8, 5))
        with pytest.raises(OutOfOrderTimestampError):
            engine.ingest(make_event("cp-1", "siren", 0.8, 10))  # id tie-break

    def test_open_instance_memory_bound(self):
        engine = Engine([ied_definition()])
        for index in range(50):
            engine.ingest(make_event(f"cp-{index:03d}", "explosion", 0.9, index * 20))
        # window 300 -> at most 16 initiators inside any live window
        assert len(engine.open_instances) <= 16


class TestSnapshot:
    def test_empty_round_trip(self):
        engine = Engine([ied_definition()])
        restored = Engine.restore(engine.snapshot())
        assert restored.snapshot() == engine.snapshot()
        assert restored.open_instances == []

    def test_mid_scenario_resume(self):
        stream = [
            make_event("cp-1", "explosion", 0.9, 10),
            make_event("cp-2", "gunshot", 0.6, 30),
            make_event("cp-3", "explosion", 0.7, 50),
            make_event("cp-4", "siren", 0.8, 90, (100.0, 0.0)),
            make_event("cp-5", "siren", 0.4, 120, (50.0, 0.0)),
        ]
        full = Engine([ied_definition()])
        expected = [d.to_json() for d in full.ingest_all(stream)]

        split = 3
        first = Engine([ied_definition()])
        first.ingest_all(stream[:split])
        resumed = Engine.restore(json.dumps(first.snapshot()))
        got = [d.to_json() for d in resumed.ingest_all(stream[split:])]
        prefix = [d.to_json() for d in first.detections]
        assert prefix + got == expected

    def test_corrupt_bytes(self):
        with pytest.raises((VersionMismatchError, json.JSONDecodeError)):
            Engine.restore("{not-json")
        with pytest.raises(VersionMismatchError):
            Engine.restore({"version": "something-else/9"})


# --------------------------------------------------------------------------
# Randomized streams: streaming == batch oracle
# --------------------------------------------------------------------------

CLASSES = ["explosion", "siren", "gunshot", "shotput", "hammer_throw", "shouting"]
ROLL_ROLES = ["initiator", "terminator", "supporting"]


def random_definition(rng, index):
    constituents = [
        ConstituentSpec(rng.choice(CLASSES), "initiator", min_count=rng.choice([1, 1, 2])),
        ConstituentSpec(rng.choice(CLASSES), "terminator", min_count=rng.choice([1, 1, 2])),
    ]
    for _ in range(rng.randint(0, 2)):
        constituents.append(
            ConstituentSpec(rng.choice(CLASSES), rng.choice(ROLL_ROLES))
        )
    return ComplexEventDefinition(
        name=f"pattern{index}",
        constituents=tuple(constituents),
        window_seconds=float(rng.choice([30, 60, 120])),
        radius_meters=float(rng.choice([50, 200, 1000])),
    )


def random_stream(rng, max_events=60):
    events = []
    count = rng.randint(0, max_events)
    feeds = ["alpha", "bravo", "charlie"]
    clocks = {feed: 0.0 for feed in feeds}
    for index in range(count):
        feed = rng.choice(feeds)
        clocks[feed] += rng.choice([0.0, 1.0, 3.0, 10.0, 40.0])
        events.append(
            make_event(
                f"{feed}-{index:04d}",
                rng.choice(CLASSES),
                rng.choice([0.3, 0.55, 0.7, 0.9]),
                clocks[feed],
                (float(rng.randint(-300, 300)), float(rng.randint(-300, 300))),
                feed=feed,
                context=rng.choice(["day", "night"]),
            )
        )
    events.sort(key=lambda e: (e.timestamp, e.id))
    return events


def random_markings(rng):
    markings = []
    for _ in range(rng.randint(0, 2)):
        markings.append(
            RegularMarking(
                rng.choice(["alpha", "bravo", "charlie"]),
                rng.choice(CLASSES),
                rng.choice(["day", "night", "any"]),
                "op",
                1.0,
            )
        )
    return markings


def run_streaming(definitions, stream, markings):
    state = FeedState()
    for marking in markings:
        state.mark_regular(marking)
    engine = Engine(definitions, feed_state=state)
    return engine.ingest_all(stream), engine


def test_streaming_equals_brute_on_random_streams():
    rng = random.Random(2026)
    for round_index in range(120):
        definitions = [
            random_definition(rng, i) for i in range(rng.randint(1, 3))
        ]
        stream = random_stream(rng)
        markings = random_markings(rng)
        streamed, _ = run_streaming(definitions, stream, markings)
        brute = match_brute(definitions, stream, markings=markings)
        assert [d.to_json() for d in streamed] == [d.to_json() for d in brute], (
            f"divergence in round {round_index}"
        )


def test_brute_log_limit():
    stream = [make_event(f"cp-{i:04d}", "explosion", 0.5, i) for i in range(201)]
    with pytest.raises(LogTooLargeError):
        match_brute([ied_definition()], stream)


def test_brute_empty_and_initiator_only():
    assert match_brute([ied_definition()], []) == []
    only_initiators = [make_event(f"cp-{i}", "explosion", 0.5, i) for i in range(4)]
    assert match_brute([ied_definition()], only_initiators) == []


def test_determinism_byte_identical_logs():
    rng = random.Random(7)
    definitions = [random_definition(rng, i) for i in range(2)]
    stream = random_stream(rng)
    first, _ = run_streaming(definitions, stream, [])
    second, _ = run_streaming(definitions, stream, [])
    first_bytes = "\n".join(dumps_canonical(d.to_json()) for d in first)
    second_bytes = "\n".join(dumps_canonical(d.to_json()) for d in second)
    assert first_bytes == second_bytes


def test_suppression_soundness_no_suppressed_constituents():
    rng = random.Random(11)
    for _ in range(40):
        definitions = [random_definition(rng, i) for i in range(2)]
        stream = random_stream(rng, max_events=40)
        markings = random_markings(rng)
        detections, engine = run_streaming(definitions, stream, markings)
        suppressed_ids = set(engine.suppressions)
        for detection in detections:
            for _, event_id in detection.constituent_event_ids:
                assert event_id not in suppressed_ids


# --------------------------------------------------------------------------
# Probability consistency with the exact evaluator
# --------------------------------------------------------------------------


def distinct_class_definition(rng, index):
    """Definitions whose constituents match disjoint classes, minCount 1,
    so slot selections coincide with the possible-worlds reading."""
    labels = rng.sample(CLASSES, rng.randint(2, 4))
    constituents = [
        ConstituentSpec(labels[0], "initiator"),
        ConstituentSpec(labels[1], "terminator"),
    ]
    for label in labels[2:]:
        constituents.append(ConstituentSpec(label, "supporting"))
    return ComplexEventDefinition(
        name=f"case{index}",
        constituents=tuple(constituents),
        window_seconds=float(rng.choice([60, 120, 300])),
        radius_meters=float(rng.choice([100, 500])),
    )


def test_detection_probability_matches_exact_evaluator():
    rng = random.Random(4242)
    checked = 0
    for index in range(200):
        definition = distinct_class_definition(rng, index)
        own_labels = [spec.matcher for spec in definition.constituents]
        stream = []
        clock = 0.0
        for event_index in range(rng.randint(2, 10)):
            clock += rng.choice([1.0, 5.0, 20.0])
            pool = own_labels if rng.random() < 0.7 else CLASSES
            stream.append(
                make_event(
                    f"s-{event_index:03d}",
                    rng.choice(pool),
                    rng.choice([0.4, 0.6, 0.85, 0.95]),
                    clock,
                    (float(rng.randint(-200, 200)), float(rng.randint(-200, 200))),
                )
            )
        engine = Engine([definition])
        detections = engine.ingest_all(stream)
        if not detections:
            continue
        fragment = compile_definition(definition)
        events_by_id = engine.feed_state.events_by_id
        for detection in detections:
            chosen = []
            seen = set()
            for _, event_id in detection.constituent_event_ids:
                if event_id in seen:
                    continue
                seen.add(event_id)
                event = events_by_id[event_id]
                chosen.append(
                    ProbFact(
                        event.confidence,
                        event.class_label,
                        event.timestamp,
                        event.location,
                    )
                )
            exact = evaluate_exact(fragment, chosen, definition.name)
            assert exact == pytest.approx(detection.probability, abs=1e-9)
            checked += 1
    assert checked >= 30  # the generator must actually produce detections


def test_detection_json_round_trip():
    engine = Engine([ied_definition()])
    detections = engine.ingest_all(
        [
            make_event("cp-1", "explosion", 0.9, 10),
            make_event("cp-2", "siren", 0.8, 60, (100.0, 0.0)),
        ]
    )
    detection = detections[0]
    assert Detection.from_json(detection.to_json()) == detection
    assert detection.anchor_event_id == "cp-1"
