"""Shared knowledge graph: palettes, typed nodes, queries, coalition merge.

Builds a small sensor ontology, populates a graph, shows the canonical
JSON form, and merges a partner's graph with namespaced ids.
"""

from fusedesk import (
    Concept,
    Edge,
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
    query_by_concept,
    serialize,
)

# -- palette: a single-inheritance concept hierarchy rooted at "thing" ----
palette = Palette("sensors")
palette = palette.add_concept(Concept("AudioEvent"))
palette = palette.add_concept(Concept("Siren", parent="AudioEvent"))
palette = palette.add_concept(Concept("Explosion", parent="AudioEvent"))
palette = palette.add_concept(
    Concept("ComplexEvent", property_schema=(("severity", "number"),))
)
palette = palette.add_relation(RelationType("evidence_for", "AudioEvent", "ComplexEvent"))

print("palette version:", palette.version)
print("Siren is an AudioEvent:", is_subconcept(palette, "Siren", "AudioEvent"))
print("every concept is a thing:", is_subconcept(palette, "Explosion", "thing"))

# -- graph: typed and untyped nodes, checked relations ---------------------
who = Provenance(agent="analyst1", partner="UK", created_at="2026-02-01T09:00:00Z")
graph = empty_graph("patrol-7", palette)
graph = add_node(graph, Node("ev1", "Explosion", "loud bang", {}, (120.0, 80.0), who), palette)
graph = add_node(graph, Node("ev2", "Siren", "siren follows", {}, (150.0, 90.0), who), palette)
graph = add_node(
    graph,
    Node("ce1", "ComplexEvent", "IED", {"severity": 4}, (135.0, 85.0), who),
    palette,
)
graph = add_node(graph, Node("note1", None, "operator note", {"text": "verify"}, (0.0, 0.0), who), palette)
graph = add_edge(graph, Edge("l1", "evidence_for", "ev1", "ce1", who), palette)
graph = add_edge(graph, Edge("l2", "evidence_for", "ev2", "ce1", who), palette)

print("\naudio events:", [n.id for n in query_by_concept(graph, palette, "AudioEvent")])
print("everything:", [n.id for n in query_by_concept(graph, palette, "thing")])

# -- canonical JSON: equal graphs produce identical bytes -------------------
text = serialize(graph)
print("\ncanonical JSON starts:", text[:80], "...")
assert deserialize(text) == graph

# -- coalition merge: partner ids are namespaced, provenance kept -----------
partner_prov = Provenance(agent="fusion-svc", partner="US", created_at="2026-02-01T10:00:00Z")
partner_graph = empty_graph("patrol-7", palette)
partner_graph = add_node(
    partner_graph, Node("ev1", "Siren", "dock siren", {}, (900.0, 20.0), partner_prov), palette
)
merged = merge(graph, partner_graph, "us", local_palette=palette, remote_palette=palette)
print("\nafter merge:", sorted(merged.nodes))
print("remote provenance:", merged.nodes["us/ev1"].provenance)
again = merge(merged, partner_graph, "us", local_palette=palette, remote_palette=palette)
assert again == merged, "merging the same remote twice changes nothing"
print("merge is idempotent: ok")
