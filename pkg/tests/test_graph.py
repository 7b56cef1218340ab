"""Palette subsumption, graph operations, canonical JSON, and merge."""

import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fusedesk.errors import (
    DanglingEndpointError,
    DuplicateIdError,
    GraphParseError,
    GraphSchemaError,
    PaletteConflictError,
    SchemaViolationError,
    UnknownConceptError,
)
from fusedesk.graph import (
    Concept,
    Edge,
    KnowledgeGraph,
    Node,
    Palette,
    Provenance,
    RelationType,
    add_edge,
    add_node,
    deserialize,
    empty_graph,
    is_subconcept,
    merge,
    merge_palettes,
    palette_from_json,
    palette_to_json,
    query_by_concept,
    serialize,
    validate_graph,
)

PROV = Provenance(agent="analyst1", partner="UK", created_at="2026-02-01T09:00:00Z")


def audio_palette() -> Palette:
    palette = Palette("sensors")
    palette = palette.add_concept(Concept("AudioEvent"))
    palette = palette.add_concept(Concept("Siren", parent="AudioEvent"))
    palette = palette.add_concept(Concept("Explosion", parent="AudioEvent"))
    palette = palette.add_concept(
        Concept("ComplexEvent", property_schema=(("severity", "number"),))
    )
    palette = palette.add_relation(RelationType("near", "AudioEvent", "AudioEvent"))
    return palette


class TestSubconcept:
    def test_reflexive(self):
        palette = Palette("p").add_concept(Concept("Dog"))
        assert is_subconcept(palette, "Dog", "Dog")

    def test_universal_root(self):
        palette = Palette("p").add_concept(Concept("Dog"))
        assert is_subconcept(palette, "Dog", "thing")

    def test_chain(self):
        palette = audio_palette()
        assert is_subconcept(palette, "Siren", "AudioEvent")
        assert not is_subconcept(palette, "AudioEvent", "Siren")

    def test_unknown_concept_named(self):
        palette = audio_palette()
        with pytest.raises(UnknownConceptError) as excinfo:
            is_subconcept(palette, "Siren", "Ghost")
        assert excinfo.value.concept == "Ghost"


class TestPalette:
    def test_contains_root(self):
        assert "thing" in Palette("p").concepts

    def test_version_increments(self):
        palette = Palette("p")
        v0 = palette.version
        palette = palette.add_concept(Concept("A"))
        assert palette.version == v0 + 1
        palette = palette.add_relation(RelationType("r", "A", "A"))
        assert palette.version == v0 + 2

    def test_duplicate_concept(self):
        palette = Palette("p").add_concept(Concept("A"))
        with pytest.raises(DuplicateIdError):
            palette.add_concept(Concept("A"))

    def test_unknown_parent(self):
        with pytest.raises(UnknownConceptError):
            Palette("p").add_concept(Concept("A", parent="Missing"))

    def test_json_round_trip(self):
        palette = audio_palette()
        again = palette_from_json(palette_to_json(palette))
        assert again == palette

    def test_cycle_rejected(self):
        with pytest.raises(SchemaViolationError):
            Palette(
                "p",
                concepts={
                    "a": Concept("a", parent="b"),
                    "b": Concept("b", parent="a"),
                },
            )


class TestGraphOps:
    def test_add_complex_event_node(self):
        palette = audio_palette()
        graph = empty_graph("proj", palette)
        node = Node("n1", "ComplexEvent", "IED", {"severity": 3}, (0.0, 0.0), PROV)
        graph = add_node(graph, node, palette)
        assert graph.nodes["n1"].label == "IED"

    def test_duplicate_node_id(self):
        palette = audio_palette()
        graph = empty_graph("proj", palette)
        node = Node("n1", None, "a", {}, (0.0, 0.0), PROV)
        graph = add_node(graph, node, palette)
        with pytest.raises(DuplicateIdError):
            add_node(graph, node, palette)

    def test_dangling_edge(self):
        palette = audio_palette()
        graph = empty_graph("proj", palette)
        graph = add_node(graph, Node("n1", None, "a", {}, (0.0, 0.0), PROV), palette)
        with pytest.raises(DanglingEndpointError):
            add_edge(graph, Edge("e1", None, "n1", "missing", PROV), palette)

    def test_untyped_node_arbitrary_properties(self):
        palette = audio_palette()
        graph = empty_graph("proj", palette)
        node = Node("n1", None, "note", {"anything": "goes", "n": 7}, (1.0, 2.0), PROV)
        graph = add_node(graph, node, palette)
        assert graph.nodes["n1"].properties["anything"] == "goes"

    def test_schema_violation_names_key(self):
        palette = audio_palette()
        graph = empty_graph("proj", palette)
        node = Node("n1", "Siren", "s", {"volume": 3}, (0.0, 0.0), PROV)
        with pytest.raises(SchemaViolationError) as excinfo:
            add_node(graph, node, palette)
        assert excinfo.value.offending == "volume"

    def test_extension_properties_allowed(self):
        palette = audio_palette()
        graph = empty_graph("proj", palette)
        node = Node("n1", "Siren", "s", {"x-note": "ops"}, (0.0, 0.0), PROV)
        graph = add_node(graph, node, palette)
        assert "x-note" in graph.nodes["n1"].properties

    def test_relation_domain_range(self):
        palette = audio_palette()
        graph = empty_graph("proj", palette)
        graph = add_node(graph, Node("s", "Siren", "s", {}, (0.0, 0.0), PROV), palette)
        graph = add_node(graph, Node("c", "ComplexEvent", "c", {}, (0.0, 0.0), PROV), palette)
        graph = add_edge(graph, Edge("e1", "near", "s", "s", PROV), palette)
        with pytest.raises(SchemaViolationError):
            add_edge(graph, Edge("e2", "near", "s", "c", PROV), palette)

    def test_query_by_concept_closure(self):
        palette = audio_palette()
        graph = empty_graph("proj", palette)
        for index, concept in enumerate(["Siren", "Siren", "Explosion"]):
            graph = add_node(
                graph, Node(f"n{index}", concept, concept, {}, (0.0, 0.0), PROV), palette
            )
        graph = add_node(graph, Node("u", None, "untyped", {}, (0.0, 0.0), PROV), palette)
        assert len(query_by_concept(graph, palette, "AudioEvent")) == 3
        assert len(query_by_concept(graph, palette, "thing")) == 4
        assert query_by_concept(graph, palette, "ComplexEvent") == []


class TestSerialization:
    def test_empty_graph_bytes(self):
        palette = audio_palette()
        graph = empty_graph("proj", palette)
        text = serialize(graph)
        assert text.startswith('{"projectId":"proj"')
        assert '"nodes":[]' in text and '"edges":[]' in text
        assert deserialize(text) == graph

    def test_parse_error_position(self):
        with pytest.raises(GraphParseError) as excinfo:
            deserialize('{"projectId": }')
        assert excinfo.value.line == 1
        assert excinfo.value.column > 1

    def test_unknown_node_reference(self):
        palette = audio_palette()
        graph = empty_graph("proj", palette)
        graph = add_node(graph, Node("n1", None, "a", {}, (0.0, 0.0), PROV), palette)
        graph = add_edge(graph, Edge("e1", None, "n1", "n1", PROV), palette)
        data = json.loads(serialize(graph))
        data["edges"][0]["target"] = "ghost"
        with pytest.raises(GraphSchemaError) as excinfo:
            deserialize(json.dumps(data))
        assert "ghost" in str(excinfo.value)
        assert excinfo.value.path.startswith("$.edges")


# --------------------------------------------------------------------------
# Randomized palettes and graphs
# --------------------------------------------------------------------------

_CONCEPT_NAMES = [f"C{i}" for i in range(8)]
_KINDS = ["text", "number", "timestamp", "geopoint"]


@st.composite
def palettes(draw) -> Palette:
    palette = Palette("gen")
    count = draw(st.integers(min_value=0, max_value=6))
    for index in range(count):
        parents = list(palette.concepts)
        parent = draw(st.sampled_from(parents))
        keys = draw(st.lists(st.sampled_from(["k1", "k2", "k3"]), unique=True, max_size=2))
        schema = tuple((key, draw(st.sampled_from(_KINDS))) for key in keys)
        palette = palette.add_concept(
            Concept(_CONCEPT_NAMES[index], parent=parent, property_schema=schema)
        )
    return palette


def _value_for(draw, kind: str):
    if kind == "text":
        return draw(st.text(alphabet="abc ", max_size=6))
    if kind == "number":
        return draw(st.integers(min_value=-1000, max_value=1000))
    if kind == "timestamp":
        return "2026-03-01T12:00:00Z"
    return [
        draw(st.integers(min_value=-100, max_value=100)),
        draw(st.integers(min_value=-100, max_value=100)),
    ]


@st.composite
def graphs(draw) -> tuple[Palette, KnowledgeGraph]:
    palette = draw(palettes())
    graph = empty_graph("proj", palette)
    node_count = draw(st.integers(min_value=0, max_value=6))
    coords = st.floats(
        min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False
    ).map(lambda v: v + 0.0)
    for index in range(node_count):
        concept = draw(st.sampled_from([None] + list(palette.concepts)))
        properties = {}
        if concept is not None:
            schema = palette.inherited_schema(concept)
            for key, kind in schema.items():
                if draw(st.booleans()):
                    properties[key] = _value_for(draw, kind)
        if draw(st.booleans()):
            properties["x-tag"] = draw(st.text(alphabet="xyz", max_size=4))
        node = Node(
            id=f"n{index}",
            concept=concept,
            label=draw(st.text(alphabet="abcde ", max_size=8)),
            properties=properties,
            position=(draw(coords), draw(coords)),
            provenance=PROV,
        )
        graph = add_node(graph, node, palette)
    edge_count = draw(st.integers(min_value=0, max_value=5)) if node_count else 0
    node_ids = sorted(graph.nodes)
    for index in range(edge_count):
        edge = Edge(
            id=f"e{index}",
            relation=None,
            source=draw(st.sampled_from(node_ids)),
            target=draw(st.sampled_from(node_ids)),
            provenance=PROV,
        )
        graph = add_edge(graph, edge, palette)
    return palette, graph


@settings(max_examples=120, deadline=None)
@given(graphs())
def test_round_trip_identity(pair):
    _, graph = pair
    assert deserialize(serialize(graph)) == graph


@settings(max_examples=60, deadline=None)
@given(graphs(), st.randoms())
def test_canonical_bytes_insertion_order_free(pair, rng):
    palette, graph = pair
    nodes = list(graph.nodes.values())
    edges = list(graph.edges.values())
    rng.shuffle(nodes)
    rng.shuffle(edges)
    rebuilt = KnowledgeGraph(
        graph.project_id,
        graph.palette_ref,
        {n.id: n for n in nodes},
        {e.id: e for e in edges},
    )
    assert rebuilt == graph
    assert serialize(rebuilt) == serialize(graph)


@settings(max_examples=60, deadline=None)
@given(palettes(), st.data())
def test_subconcept_partial_order(palette, data):
    names = list(palette.concepts)
    a = data.draw(st.sampled_from(names))
    b = data.draw(st.sampled_from(names))
    c = data.draw(st.sampled_from(names))
    assert is_subconcept(palette, a, a)
    if is_subconcept(palette, a, b) and is_subconcept(palette, b, a):
        assert a == b
    if is_subconcept(palette, a, b) and is_subconcept(palette, b, c):
        assert is_subconcept(palette, a, c)


@settings(max_examples=40, deadline=None)
@given(graphs(), st.data())
def test_mutation_fuzz_preserves_invariants(pair, data):
    palette, graph = pair
    for step in range(data.draw(st.integers(min_value=1, max_value=8))):
        if data.draw(st.booleans()) or not graph.nodes:
            node = Node(
                id=f"fz-n{step}",
                concept=data.draw(st.sampled_from([None] + list(palette.concepts))),
                label="fuzz",
                properties={},
                position=(0.0, 0.0),
                provenance=PROV,
            )
            graph = add_node(graph, node, palette)
        else:
            ids = sorted(graph.nodes)
            edge = Edge(
                id=f"fz-e{step}",
                relation=None,
                source=data.draw(st.sampled_from(ids)),
                target=data.draw(st.sampled_from(ids)),
                provenance=PROV,
            )
            graph = add_edge(graph, edge, palette)
        validate_graph(graph, palette)


class TestMerge:
    def _pair(self):
        palette = audio_palette()
        local = empty_graph("proj", palette)
        for index in range(3):
            local = add_node(
                local, Node(f"l{index}", "Siren", "s", {}, (0.0, 0.0), PROV), palette
            )
        remote = empty_graph("proj", palette)
        remote_prov = Provenance("machine7", "US", "2026-02-02T10:00:00Z")
        for index in range(2):
            remote = add_node(
                remote,
                Node(f"r{index}", "Explosion", "x", {}, (0.0, 0.0), remote_prov),
                palette,
            )
        remote = add_edge(remote, Edge("re0", None, "r0", "r1", remote_prov), palette)
        return palette, local, remote

    def test_empty_remote_identity(self):
        palette, local, _ = self._pair()
        remote = empty_graph("proj", palette)
        merged = merge(
            local, remote, "uk", local_palette=palette, remote_palette=palette
        )
        assert merged == local

    def test_disjoint_union_sizes(self):
        palette, local, remote = self._pair()
        merged = merge(
            local, remote, "us", local_palette=palette, remote_palette=palette
        )
        assert len(merged.nodes) == 5
        assert len(merged.edges) == 1
        assert "us/r0" in merged.nodes
        assert merged.edges["us/re0"].source == "us/r0"

    def test_idempotent(self):
        palette, local, remote = self._pair()
        once = merge(local, remote, "us", local_palette=palette, remote_palette=palette)
        twice = merge(once, remote, "us", local_palette=palette, remote_palette=palette)
        assert once == twice
        assert serialize(once) == serialize(twice)

    def test_provenance_retains_agent_records_partner(self):
        palette, local, remote = self._pair()
        merged = merge(local, remote, "us", local_palette=palette, remote_palette=palette)
        moved = merged.nodes["us/r0"]
        assert moved.provenance.agent == "machine7"
        assert moved.provenance.partner == "us"

    def test_palette_conflict_lists_names(self):
        left = Palette("a").add_concept(Concept("Siren", parent="thing"))
        right = Palette("b").add_concept(Concept("AudioEvent")).add_concept(
            Concept("Siren", parent="AudioEvent")
        )
        with pytest.raises(PaletteConflictError) as excinfo:
            merge_palettes(left, right)
        assert excinfo.value.clashing == ["Siren"]

    def test_allow_list_filters(self):
        palette, local, remote = self._pair()
        merged = merge(
            local,
            remote,
            "us",
            local_palette=palette,
            remote_palette=palette,
            allowed_concepts=["Siren"],
        )
        assert len(merged.nodes) == 3  # explosions filtered out
        assert len(merged.edges) == 0

    def test_local_count_preserved_random_pairs(self):
        rng = random.Random(7)
        palette = audio_palette()
        for _ in range(25):
            local = empty_graph("proj", palette)
            for index in range(rng.randint(0, 5)):
                local = add_node(
                    local, Node(f"l{index}", None, "n", {}, (0.0, 0.0), PROV), palette
                )
            remote = empty_graph("proj", palette)
            for index in range(rng.randint(0, 5)):
                remote = add_node(
                    remote, Node(f"r{index}", None, "n", {}, (0.0, 0.0), PROV), palette
                )
            merged = merge(
                local, remote, "fr", local_palette=palette, remote_palette=palette
            )
            assert set(local.nodes) <= set(merged.nodes)
            again = merge(
                merged, remote, "fr", local_palette=palette, remote_palette=palette
            )
            assert again == merged
