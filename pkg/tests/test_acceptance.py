"""Acceptance suite: one test per exit criterion, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines; every
tolerance is pinned here, nothing is calibrated elsewhere.
"""

import json
import random
import shutil
import time
from contextlib import contextmanager
from pathlib import Path

from fusedesk.definitions import (
    ComplexEventDefinition,
    ConstituentSpec,
    compile_definition,
    write_fragment,
)
from fusedesk.engine import Engine, match_brute
from fusedesk.feeds import FeedState, RegularMarking, SimpleEvent
from fusedesk.gateway.runner import run_headless
from fusedesk.gateway.store import ProjectStore
from fusedesk.graph import (
    Concept,
    Edge,
    KnowledgeGraph,
    Node,
    Palette,
    Provenance,
    add_edge,
    add_node,
    deserialize,
    empty_graph,
    merge,
    serialize,
)
from fusedesk.logic import ProbFact, evaluate_exact, parse, render
from fusedesk.simulate import FeedSpec, InjectedEvent, Scenario, generate

GOLDEN_DIR = Path(__file__).parent / "golden"

IED_RULE = (
    "complex_event(ied, T1, T2) :- simple_event(explosion, T1, L1), "
    "simple_event(siren, T2, L2), T2 >= T1, T2 - T1 =< 300, "
    "dist(L1, L2) =< 500."
)


@contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"[ACCEPTANCE] {name}: FAIL")
        raise
    print(f"[ACCEPTANCE] {name}: PASS")


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


def test_ied_scenario_reproduction():
    with criterion("IED scenario reproduction"):
        started = time.monotonic()
        scenario = Scenario(
            name="checkpoint-ied",
            seed=5,
            duration_seconds=100.0,
            feeds=(
                FeedSpec(
                    feed_id="checkpoint",
                    partner="UK",
                    location=(0.0, 0.0),
                    modality="audio",
                    background_rate=0.0,
                ),
            ),
            injections=(
                InjectedEvent("checkpoint", "explosion", 10.0, 0.9),
                InjectedEvent("checkpoint", "siren", 60.0, 0.8, offset=(100.0, 0.0)),
            ),
        )
        engine = Engine([ied_definition()])
        detections = engine.ingest_all(generate(scenario))
        assert len(detections) == 1
        detection = detections[0]
        assert detection.interval_start == 10.0
        assert detection.interval_end == 60.0
        assert abs(detection.probability - 0.72) <= 1e-9
        provenance = dict(detection.constituent_event_ids)
        events = {e.id: e for e in engine.event_log}
        assert events[provenance["initiator"]].class_label == "explosion"
        assert events[provenance["terminator"]].class_label == "siren"
        assert time.monotonic() - started < 1.0


def test_suppression_behavior():
    with criterion("Suppression behavior"):
        nightclub = FeedSpec(
            feed_id="nightclub",
            partner="UK",
            location=(0.0, 0.0),
            modality="video",
            background_rate=0.1,
            background_classes=(
                ("shotput", 0.5),
                ("hammer_throw", 0.35),
                ("punch", 0.15),
            ),
        )
        scenario = Scenario("nightclub-bg", 42, 600.0, feeds=(nightclub,))
        definitions = [
            ComplexEventDefinition(
                name="scuffle",
                constituents=(
                    ConstituentSpec("shotput", "initiator"),
                    ConstituentSpec("punch", "terminator"),
                ),
                window_seconds=120.0,
                radius_meters=50.0,
            ),
            ComplexEventDefinition(
                name="brawl",
                constituents=(
                    ConstituentSpec("hammer_throw", "initiator"),
                    ConstituentSpec("punch", "terminator"),
                ),
                window_seconds=120.0,
                radius_meters=50.0,
            ),
        ]
        events = generate(scenario)

        # without markings the background does open instances / detect
        control = Engine(definitions)
        control_detections = control.ingest_all(events)
        assert control_detections or control.open_instances

        state = FeedState()
        state.mark_regular(RegularMarking("nightclub", "shotput", "any", "op1", 0.0))
        state.mark_regular(
            RegularMarking("nightclub", "hammer_throw", "any", "op1", 0.0)
        )
        engine = Engine(definitions, feed_state=state)
        detections = engine.ingest_all(events)
        assert engine.open_instances == []
        marked = {"shotput", "hammer_throw"}
        for detection in detections:
            for _, event_id in detection.constituent_event_ids:
                assert engine.feed_state.events_by_id[event_id].class_label not in marked
        assert detections == []  # both definitions initiate on marked classes
        logged = {e.class_label for e in engine.event_log}
        assert marked <= logged


CLASSES = ["explosion", "siren", "gunshot", "shotput", "hammer_throw", "shouting"]


def _random_definition(rng, index):
    constituents = [
        ConstituentSpec(rng.choice(CLASSES), "initiator", min_count=rng.choice([1, 1, 2])),
        ConstituentSpec(rng.choice(CLASSES), "terminator", min_count=rng.choice([1, 1, 2])),
    ]
    for _ in range(rng.randint(0, 2)):
        constituents.append(
            ConstituentSpec(
                rng.choice(CLASSES),
                rng.choice(["initiator", "terminator", "supporting"]),
            )
        )
    return ComplexEventDefinition(
        name=f"pattern{index}",
        constituents=tuple(constituents),
        window_seconds=float(rng.choice([30, 60, 120])),
        radius_meters=float(rng.choice([50, 200, 1000])),
    )


def _random_stream(rng, max_events):
    events = []
    feeds = ["alpha", "bravo", "charlie"]
    clocks = {feed: 0.0 for feed in feeds}
    for index in range(rng.randint(0, max_events)):
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


def test_streaming_batch_oracle_equivalence():
    with criterion("Streaming/batch oracle equivalence (200 streams)"):
        started = time.monotonic()
        rng = random.Random(90125)
        for round_index in range(200):
            definitions = [
                _random_definition(rng, i) for i in range(rng.randint(1, 3))
            ]
            stream = _random_stream(rng, max_events=200)
            markings = [
                RegularMarking(
                    rng.choice(["alpha", "bravo", "charlie"]),
                    rng.choice(CLASSES),
                    rng.choice(["day", "night", "any"]),
                    "op",
                    0.0,
                )
                for _ in range(rng.randint(0, 2))
            ]
            state = FeedState()
            for marking in markings:
                state.mark_regular(marking)
            engine = Engine(definitions, feed_state=state)
            streamed = engine.ingest_all(stream)
            brute = match_brute(definitions, stream, markings=markings)
            assert [d.to_json() for d in streamed] == [d.to_json() for d in brute], (
                f"divergence in round {round_index}"
            )
        assert time.monotonic() - started < 60.0


def test_probability_oracle():
    with criterion("Probability oracle (exact evaluator)"):
        # hand-enumerable anchors first
        single = "complex_event(x, T1, T1) :- simple_event(explosion, T1, L1)."
        assert (
            abs(
                evaluate_exact(
                    single, [ProbFact(0.5, "explosion", 10.0, (0.0, 0.0))], "x"
                )
                - 0.5
            )
            <= 1e-9
        )
        fragment = compile_definition(ied_definition())
        conj = [
            ProbFact(0.9, "explosion", 10.0, (0.0, 0.0)),
            ProbFact(0.8, "siren", 60.0, (100.0, 0.0)),
        ]
        assert abs(evaluate_exact(fragment, conj, "ied") - 0.72) <= 1e-9
        noisy = conj + [ProbFact(0.5, "siren", 80.0, (50.0, 0.0))]
        assert abs(evaluate_exact(fragment, noisy, "ied") - 0.81) <= 1e-9

        rng = random.Random(777)
        checked = 0
        rounds = 0
        while checked < 100 and rounds < 600:
            rounds += 1
            labels = rng.sample(CLASSES, rng.randint(2, 4))
            constituents = [
                ConstituentSpec(labels[0], "initiator"),
                ConstituentSpec(labels[1], "terminator"),
            ] + [ConstituentSpec(label, "supporting") for label in labels[2:]]
            definition = ComplexEventDefinition(
                name=f"case{rounds}",
                constituents=tuple(constituents),
                window_seconds=float(rng.choice([60, 120, 300])),
                radius_meters=float(rng.choice([100, 500])),
            )
            stream = []
            clock = 0.0
            for event_index in range(rng.randint(2, 10)):
                clock += rng.choice([1.0, 5.0, 20.0])
                pool = labels if rng.random() < 0.7 else CLASSES
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
            for detection in detections:
                facts = []
                seen = set()
                for _, event_id in detection.constituent_event_ids:
                    if event_id in seen:
                        continue
                    seen.add(event_id)
                    event = engine.feed_state.events_by_id[event_id]
                    facts.append(
                        ProbFact(
                            event.confidence,
                            event.class_label,
                            event.timestamp,
                            event.location,
                        )
                    )
                assert len(facts) <= 10
                exact = evaluate_exact(fragment, facts, definition.name)
                assert abs(exact - detection.probability) <= 1e-9
                checked += 1
        assert checked >= 100


PROV = Provenance("analyst1", "UK", "2026-02-01T09:00:00Z")


def _random_palette(rng):
    palette = Palette("gen")
    for index in range(rng.randint(0, 5)):
        parent = rng.choice(list(palette.concepts))
        schema = tuple(
            (key, rng.choice(["text", "number", "timestamp", "geopoint"]))
            for key in rng.sample(["k1", "k2", "k3"], rng.randint(0, 2))
        )
        palette = palette.add_concept(
            Concept(f"C{index}", parent=parent, property_schema=schema)
        )
    return palette


def _random_value(rng, kind):
    if kind == "text":
        return rng.choice(["", "abc", "night watch"])
    if kind == "number":
        return rng.randint(-500, 500)
    if kind == "timestamp":
        return "2026-03-01T12:00:00Z"
    return [rng.randint(-50, 50), rng.randint(-50, 50)]


def _random_graph(rng, palette, prefix=""):
    graph = empty_graph("proj", palette)
    for index in range(rng.randint(0, 6)):
        concept = rng.choice([None] + list(palette.concepts))
        properties = {}
        if concept is not None:
            for key, kind in palette.inherited_schema(concept).items():
                if rng.random() < 0.5:
                    properties[key] = _random_value(rng, kind)
        if rng.random() < 0.3:
            properties["x-tag"] = "ops"
        graph = add_node(
            graph,
            Node(
                id=f"{prefix}n{index}",
                concept=concept,
                label=rng.choice(["alpha", "bravo", ""]),
                properties=properties,
                position=(float(rng.randint(-100, 100)), float(rng.randint(-100, 100))),
                provenance=PROV,
            ),
            palette,
        )
    ids = sorted(graph.nodes)
    if ids:
        for index in range(rng.randint(0, 4)):
            graph = add_edge(
                graph,
                Edge(
                    id=f"{prefix}e{index}",
                    relation=None,
                    source=rng.choice(ids),
                    target=rng.choice(ids),
                    provenance=PROV,
                ),
                palette,
            )
    return graph


def test_graph_json_round_trip_and_merge():
    with criterion("Graph JSON round-trip + merge idempotence"):
        rng = random.Random(31337)
        for _ in range(100):
            palette = _random_palette(rng)
            graph = _random_graph(rng, palette)
            text = serialize(graph)
            assert deserialize(text) == graph
            # canonical bytes survive insertion-order permutation
            nodes = list(graph.nodes.values())
            edges = list(graph.edges.values())
            rng.shuffle(nodes)
            rng.shuffle(edges)
            permuted = KnowledgeGraph(
                graph.project_id,
                graph.palette_ref,
                {n.id: n for n in nodes},
                {e.id: e for e in edges},
            )
            assert serialize(permuted) == text
        for _ in range(50):
            palette = _random_palette(rng)
            local = _random_graph(rng, palette, prefix="l-")
            remote = _random_graph(rng, palette, prefix="r-")
            once = merge(
                local, remote, "uk", local_palette=palette, remote_palette=palette
            )
            twice = merge(
                once, remote, "uk", local_palette=palette, remote_palette=palette
            )
            assert once == twice
            assert serialize(once) == serialize(twice)
            assert set(local.nodes) <= set(once.nodes)


def test_compiler_round_trip_and_golden():
    with criterion("Compiler round-trip + IED golden"):
        rng = random.Random(5150)
        for index in range(100):
            definition = _random_definition(rng, index)
            fragment = compile_definition(definition)
            ast = parse(fragment.text)
            assert render(ast) == fragment.text
            assert parse(render(ast)) == ast
        fragment = compile_definition(ied_definition())
        assert fragment.text == IED_RULE
        golden = GOLDEN_DIR / "ied.pl"
        import tempfile

        with tempfile.TemporaryDirectory() as tmp:
            out = Path(tmp) / "ied.pl"
            write_fragment(fragment, out)
            assert out.read_bytes() == golden.read_bytes()


def test_end_to_end_determinism(tmp_path):
    with criterion("Determinism end-to-end (headless)"):
        scenario = {
            "name": "busy",
            "seed": 9,
            "durationSeconds": 600,
            "feeds": [
                {
                    "feedId": "checkpoint",
                    "partner": "UK",
                    "location": {"x": 0, "y": 0},
                    "modality": "audio",
                    "backgroundRate": 0.2,
                    "backgroundClasses": [
                        {"classLabel": "explosion", "weight": 0.3},
                        {"classLabel": "siren", "weight": 0.3},
                        {"classLabel": "shouting", "weight": 0.4},
                    ],
                    "contextSchedule": [{"fromSecond": 0, "context": "day"}],
                }
            ],
            "injections": [],
            "definitions": [
                {
                    "name": "ied",
                    "constituents": [
                        {"matcher": "explosion", "matcherKind": "class", "role": "initiator", "minCount": 1},
                        {"matcher": "siren", "matcherKind": "class", "role": "terminator", "minCount": 1},
                    ],
                    "windowSeconds": 300,
                    "radiusMeters": 500,
                    "enabled": True,
                }
            ],
        }
        scenario_path = tmp_path / "busy.scenario.json"
        scenario_path.write_text(json.dumps(scenario))
        out1 = tmp_path / "a.detections.jsonl"
        out2 = tmp_path / "b.detections.jsonl"
        assert run_headless(str(scenario_path), 9, str(out1)) == 0
        assert run_headless(str(scenario_path), 9, str(out2)) == 0
        assert out1.read_bytes() == out2.read_bytes()
        assert out1.stat().st_size > 0  # the run actually detected things


def test_crash_consistency(tmp_path):
    with criterion("Crash consistency (kill-point fuzz)"):
        rng = random.Random(600613)
        for sequence_index in range(50):
            root = tmp_path / f"store-{sequence_index}"
            store = ProjectStore(root)
            palette = Palette("default")
            for step in range(rng.randint(1, 6)):
                op = rng.randrange(5)
                if op == 0:
                    palette = palette.add_concept(Concept(f"K{sequence_index}_{step}"))
                    store.save_palette("p", palette)
                elif op == 1:
                    store.save_definitions("p", [ied_definition().to_json()])
                elif op == 2:
                    store.save_markings(
                        "p", [RegularMarking("f", "shotput", "any", "op", 1.0).to_json()]
                    )
                elif op == 3:
                    store.append_event(
                        "p", make_event(f"e{step}", "siren", 0.5, float(step)).to_json()
                    )
                else:
                    store.append_detection(
                        "p", {"id": f"d{step}", "definitionName": "ied"}
                    )
                kill = tmp_path / f"kill-{sequence_index}-{step}"
                shutil.copytree(root, kill)
                recovered = ProjectStore(kill)
                recovered.validate("p")
                for path in (kill / "projects" / "p").iterdir():
                    assert not path.name.endswith(".tmp"), "partial write left behind"
                    if path.suffix == ".json":
                        json.loads(path.read_text())  # no partial JSON anywhere
                shutil.rmtree(kill)
