"""Typed property graph governed by extensible concept palettes.

A palette is a single-inheritance concept hierarchy rooted at ``thing``
plus a set of named relation types with domain/range constraints. Graphs
hold typed (or deliberately untyped) nodes and edges with per-element
provenance, serialize to a canonical JSON form, and can absorb a partner's
graph with namespaced ids so that repeated merges are idempotent.

All values here are immutable; mutating operations return new instances.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from datetime import datetime
from typing import Any, Iterable, Mapping, Optional

from .errors import (
    DanglingEndpointError,
    DuplicateIdError,
    GraphParseError,
    GraphSchemaError,
    PaletteConflictError,
    SchemaViolationError,
    UnknownConceptError,
    UnknownRelationError,
)
from .jsonutil import dumps_canonical

ROOT_CONCEPT = "thing"

VALUE_KINDS = ("text", "number", "timestamp", "geopoint")


def _check_rfc3339(text: str) -> bool:
    candidate = text[:-1] + "+00:00" if text.endswith("Z") else text
    try:
        datetime.fromisoformat(candidate)
    except ValueError:
        return False
    return True


@dataclass(frozen=True)
class Concept:
    """One palette concept; ``parent`` is None only for the root."""

    name: str
    parent: Optional[str] = ROOT_CONCEPT
    property_schema: tuple[tuple[str, str], ...] = ()
    builtin: bool = False

    def __post_init__(self) -> None:
        for key, kind in self.property_schema:
            if kind not in VALUE_KINDS:
                raise SchemaViolationError(
                    f"property {key!r} has unknown value kind {kind!r}", key
                )


@dataclass(frozen=True)
class RelationType:
    name: str
    domain: str
    range: str


@dataclass(frozen=True)
class Provenance:
    agent: str
    partner: str
    created_at: str  # RFC-3339 text, kept verbatim for byte-stable round trips

    def __post_init__(self) -> None:
        if not _check_rfc3339(self.created_at):
            raise SchemaViolationError(
                f"createdAt {self.created_at!r} is not RFC-3339", "createdAt"
            )


@dataclass(frozen=True)
class Node:
    id: str
    concept: Optional[str]
    label: str
    properties: Mapping[str, Any]
    position: tuple[float, float]
    provenance: Provenance

    def __post_init__(self) -> None:
        # Tuples become lists so in-memory values match a JSON round trip.
        object.__setattr__(
            self,
            "properties",
            {
                key: list(value) if isinstance(value, tuple) else value
                for key, value in self.properties.items()
            },
        )
        object.__setattr__(
            self, "position", (float(self.position[0]), float(self.position[1]))
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Node):
            return NotImplemented
        return (
            self.id == other.id
            and self.concept == other.concept
            and self.label == other.label
            and dict(self.properties) == dict(other.properties)
            and self.position == other.position
            and self.provenance == other.provenance
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class Edge:
    id: str
    relation: Optional[str]
    source: str
    target: str
    provenance: Provenance


@dataclass(frozen=True)
class Palette:
    """Concept/relation catalogue with a version that bumps on mutation."""

    name: str
    version: int = 1
    concepts: Mapping[str, Concept] = field(default_factory=dict)
    relations: Mapping[str, RelationType] = field(default_factory=dict)

    def __post_init__(self) -> None:
        concepts = dict(self.concepts)
        if ROOT_CONCEPT not in concepts:
            concepts[ROOT_CONCEPT] = Concept(ROOT_CONCEPT, parent=None, builtin=True)
        object.__setattr__(self, "concepts", concepts)
        object.__setattr__(self, "relations", dict(self.relations))
        for name, concept in concepts.items():
            if name == ROOT_CONCEPT:
                continue
            seen = {name}
            current = concept.parent
            while current != ROOT_CONCEPT:
                if current is None or current not in concepts:
                    raise UnknownConceptError(str(current))
                if current in seen:
                    raise SchemaViolationError(
                        f"concept {name!r} has a cyclic parent chain", name
                    )
                seen.add(current)
                current = concepts[current].parent
        for relation in self.relations.values():
            for bound in (relation.domain, relation.range):
                if bound not in concepts:
                    raise UnknownConceptError(bound)

    def concept(self, name: str) -> Concept:
        try:
            return self.concepts[name]
        except KeyError:
            raise UnknownConceptError(name) from None

    def add_concept(self, concept: Concept) -> "Palette":
        if concept.name in self.concepts:
            raise DuplicateIdError(concept.name)
        parent = concept.parent if concept.parent is not None else ROOT_CONCEPT
        if parent not in self.concepts:
            raise UnknownConceptError(parent)
        concepts = dict(self.concepts)
        concepts[concept.name] = replace(concept, parent=parent)
        return replace(self, concepts=concepts, version=self.version + 1)

    def add_relation(self, relation: RelationType) -> "Palette":
        if relation.name in self.relations:
            raise DuplicateIdError(relation.name)
        for concept_name in (relation.domain, relation.range):
            if concept_name not in self.concepts:
                raise UnknownConceptError(concept_name)
        relations = dict(self.relations)
        relations[relation.name] = relation
        return replace(self, relations=relations, version=self.version + 1)

    def inherited_schema(self, concept_name: str) -> dict[str, str]:
        """Property schema of a concept including everything inherited."""
        schema: dict[str, str] = {}
        for ancestor in self.ancestry(concept_name):
            for key, kind in self.concepts[ancestor].property_schema:
                schema.setdefault(key, kind)
        return schema

    def ancestry(self, concept_name: str) -> list[str]:
        """Concept name followed by its parent chain up to the root."""
        chain = []
        current: Optional[str] = concept_name
        while current is not None:
            chain.append(current)
            current = self.concept(current).parent
        return chain


def is_subconcept(palette: Palette, child: str, ancestor: str) -> bool:
    """Reflexive-transitive subsumption along the parent chain."""
    palette.concept(ancestor)  # raise on unknown ancestor even if unreachable
    return ancestor in palette.ancestry(child)


@dataclass(frozen=True)
class KnowledgeGraph:
    project_id: str
    palette_ref: tuple[str, int]
    nodes: Mapping[str, Node] = field(default_factory=dict)
    edges: Mapping[str, Edge] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "palette_ref", tuple(self.palette_ref))
        object.__setattr__(self, "nodes", dict(self.nodes))
        object.__setattr__(self, "edges", dict(self.edges))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, KnowledgeGraph):
            return NotImplemented
        return (
            self.project_id == other.project_id
            and tuple(self.palette_ref) == tuple(other.palette_ref)
            and dict(self.nodes) == dict(other.nodes)
            and dict(self.edges) == dict(other.edges)
        )

    __hash__ = None  # type: ignore[assignment]


def empty_graph(project_id: str, palette: Palette) -> KnowledgeGraph:
    return KnowledgeGraph(project_id, (palette.name, palette.version))


_VALUE_CHECKS = {
    "text": lambda v: isinstance(v, str),
    "number": lambda v: isinstance(v, (int, float)) and not isinstance(v, bool),
    "timestamp": lambda v: isinstance(v, str) and _check_rfc3339(v),
    "geopoint": lambda v: (
        isinstance(v, (list, tuple))
        and len(v) == 2
        and all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in v)
    ),
}


def _validate_node(palette: Palette, node: Node) -> None:
    if node.concept is None:
        return  # untyped nodes bypass the schema entirely
    schema = palette.inherited_schema(node.concept)
    for key, value in node.properties.items():
        if key.startswith("x-"):
            continue
        if key not in schema:
            raise SchemaViolationError(
                f"property {key!r} is not in the schema of concept "
                f"{node.concept!r}",
                key,
            )
        if not _VALUE_CHECKS[schema[key]](value):
            raise SchemaViolationError(
                f"property {key!r} does not match value kind {schema[key]!r}", key
            )


def _node_concept_or_root(graph: KnowledgeGraph, node_id: str) -> Optional[str]:
    return graph.nodes[node_id].concept


def _validate_edge(palette: Palette, graph: KnowledgeGraph, edge: Edge) -> None:
    for endpoint in (edge.source, edge.target):
        if endpoint not in graph.nodes:
            raise DanglingEndpointError(edge.id, endpoint)
    if edge.relation is None:
        return
    if edge.relation not in palette.relations:
        raise UnknownRelationError(edge.relation)
    relation = palette.relations[edge.relation]
    for endpoint, bound in ((edge.source, relation.domain), (edge.target, relation.range)):
        concept = _node_concept_or_root(graph, endpoint)
        # Untyped nodes satisfy only a "thing" bound.
        if concept is None:
            if bound != ROOT_CONCEPT:
                raise SchemaViolationError(
                    f"untyped node {endpoint!r} cannot satisfy relation "
                    f"{edge.relation!r} bound {bound!r}",
                    edge.relation,
                )
        elif not is_subconcept(palette, concept, bound):
            raise SchemaViolationError(
                f"node {endpoint!r} concept {concept!r} is not a subconcept of "
                f"{bound!r} required by relation {edge.relation!r}",
                edge.relation,
            )


def add_node(graph: KnowledgeGraph, node: Node, palette: Palette) -> KnowledgeGraph:
    if node.id in graph.nodes:
        raise DuplicateIdError(node.id)
    if node.concept is not None:
        palette.concept(node.concept)
    _validate_node(palette, node)
    nodes = dict(graph.nodes)
    nodes[node.id] = node
    return replace(graph, nodes=nodes)


def add_edge(graph: KnowledgeGraph, edge: Edge, palette: Palette) -> KnowledgeGraph:
    if edge.id in graph.edges or edge.id in graph.nodes:
        raise DuplicateIdError(edge.id)
    _validate_edge(palette, graph, edge)
    edges = dict(graph.edges)
    edges[edge.id] = edge
    return replace(graph, edges=edges)


def query_by_concept(
    graph: KnowledgeGraph, palette: Palette, concept: str
) -> list[Node]:
    """Nodes whose concept is subsumed by ``concept``, sorted by id.

    Untyped nodes are reported only under the root concept.
    """
    palette.concept(concept)
    hits = []
    for node in graph.nodes.values():
        if node.concept is None:
            if concept == ROOT_CONCEPT:
                hits.append(node)
        elif is_subconcept(palette, node.concept, concept):
            hits.append(node)
    return sorted(hits, key=lambda n: n.id)


def validate_graph(graph: KnowledgeGraph, palette: Palette) -> None:
    """Re-check every graph invariant; raises on the first violation."""
    seen: set[str] = set()
    for node in graph.nodes.values():
        if node.id in seen:
            raise DuplicateIdError(node.id)
        seen.add(node.id)
        if node.concept is not None:
            palette.concept(node.concept)
        _validate_node(palette, node)
    for edge in graph.edges.values():
        if edge.id in seen:
            raise DuplicateIdError(edge.id)
        seen.add(edge.id)
        _validate_edge(palette, graph, edge)


# --------------------------------------------------------------------------
# Canonical JSON serialization
# --------------------------------------------------------------------------


def _provenance_to_json(provenance: Provenance) -> dict[str, Any]:
    return {
        "agent": provenance.agent,
        "partner": provenance.partner,
        "createdAt": provenance.created_at,
    }


def _node_to_json(node: Node) -> dict[str, Any]:
    return {
        "id": node.id,
        "concept": node.concept,
        "label": node.label,
        "properties": {key: node.properties[key] for key in sorted(node.properties)},
        "position": {"x": node.position[0], "y": node.position[1]},
        "provenance": _provenance_to_json(node.provenance),
    }


def _edge_to_json(edge: Edge) -> dict[str, Any]:
    return {
        "id": edge.id,
        "relation": edge.relation,
        "source": edge.source,
        "target": edge.target,
        "provenance": _provenance_to_json(edge.provenance),
    }


def graph_to_json(graph: KnowledgeGraph) -> dict[str, Any]:
    return {
        "projectId": graph.project_id,
        "palette": {"name": graph.palette_ref[0], "version": graph.palette_ref[1]},
        "nodes": [_node_to_json(graph.nodes[i]) for i in sorted(graph.nodes)],
        "edges": [_edge_to_json(graph.edges[i]) for i in sorted(graph.edges)],
    }


def serialize(graph: KnowledgeGraph) -> str:
    """Canonical bytes: equal graphs always produce identical text."""
    return dumps_canonical(graph_to_json(graph))


def _expect(obj: Any, kind: type, path: str) -> Any:
    names = {dict: "object", list: "array", str: "string", int: "integer"}
    if kind is float:
        if not isinstance(obj, (int, float)) or isinstance(obj, bool):
            raise GraphSchemaError("expected number", path)
        return float(obj)
    if not isinstance(obj, kind) or (kind is int and isinstance(obj, bool)):
        raise GraphSchemaError(f"expected {names.get(kind, kind.__name__)}", path)
    return obj


def _provenance_from_json(obj: Any, path: str) -> Provenance:
    data = _expect(obj, dict, path)
    prov = Provenance(
        agent=_expect(data.get("agent"), str, f"{path}.agent"),
        partner=_expect(data.get("partner"), str, f"{path}.partner"),
        created_at=_expect(data.get("createdAt"), str, f"{path}.createdAt"),
    )
    return prov


def _node_from_json(obj: Any, path: str) -> Node:
    data = _expect(obj, dict, path)
    concept = data.get("concept")
    if concept is not None:
        concept = _expect(concept, str, f"{path}.concept")
    position = _expect(data.get("position"), dict, f"{path}.position")
    return Node(
        id=_expect(data.get("id"), str, f"{path}.id"),
        concept=concept,
        label=_expect(data.get("label"), str, f"{path}.label"),
        properties=_expect(data.get("properties", {}), dict, f"{path}.properties"),
        position=(
            _expect(position.get("x"), float, f"{path}.position.x"),
            _expect(position.get("y"), float, f"{path}.position.y"),
        ),
        provenance=_provenance_from_json(data.get("provenance"), f"{path}.provenance"),
    )


def _edge_from_json(obj: Any, path: str) -> Edge:
    data = _expect(obj, dict, path)
    relation = data.get("relation")
    if relation is not None:
        relation = _expect(relation, str, f"{path}.relation")
    return Edge(
        id=_expect(data.get("id"), str, f"{path}.id"),
        relation=relation,
        source=_expect(data.get("source"), str, f"{path}.source"),
        target=_expect(data.get("target"), str, f"{path}.target"),
        provenance=_provenance_from_json(data.get("provenance"), f"{path}.provenance"),
    )


def deserialize(text: str) -> KnowledgeGraph:
    """Parse graph JSON, checking structure and referential integrity."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphParseError(exc.msg, exc.lineno, exc.colno) from None
    root = _expect(raw, dict, "$")
    palette_ref = _expect(root.get("palette"), dict, "$.palette")
    graph = KnowledgeGraph(
        project_id=_expect(root.get("projectId"), str, "$.projectId"),
        palette_ref=(
            _expect(palette_ref.get("name"), str, "$.palette.name"),
            _expect(palette_ref.get("version"), int, "$.palette.version"),
        ),
    )
    nodes: dict[str, Node] = {}
    for index, item in enumerate(_expect(root.get("nodes"), list, "$.nodes")):
        node = _node_from_json(item, f"$.nodes[{index}]")
        if node.id in nodes:
            raise GraphSchemaError(f"duplicate node id {node.id!r}", f"$.nodes[{index}]")
        nodes[node.id] = node
    edges: dict[str, Edge] = {}
    for index, item in enumerate(_expect(root.get("edges"), list, "$.edges")):
        edge = _edge_from_json(item, f"$.edges[{index}]")
        if edge.id in edges:
            raise GraphSchemaError(f"duplicate edge id {edge.id!r}", f"$.edges[{index}]")
        for endpoint in (edge.source, edge.target):
            if endpoint not in nodes:
                raise GraphSchemaError(
                    f"edge {edge.id!r} references unknown node {endpoint!r}",
                    f"$.edges[{index}]",
                )
        edges[edge.id] = edge
    return replace(graph, nodes=nodes, edges=edges)


# --------------------------------------------------------------------------
# Palette JSON
# --------------------------------------------------------------------------


def palette_to_json(palette: Palette) -> dict[str, Any]:
    return {
        "name": palette.name,
        "version": palette.version,
        "concepts": [
            {
                "name": concept.name,
                "parent": concept.parent,
                "propertySchema": [
                    {"key": key, "valueKind": kind}
                    for key, kind in concept.property_schema
                ],
            }
            for concept in sorted(palette.concepts.values(), key=lambda c: c.name)
        ],
        "relations": [
            {"name": r.name, "domain": r.domain, "range": r.range}
            for r in sorted(palette.relations.values(), key=lambda r: r.name)
        ],
    }


def palette_from_json(raw: Any) -> Palette:
    data = _expect(raw, dict, "$")
    concepts: dict[str, Concept] = {}
    for index, item in enumerate(_expect(data.get("concepts"), list, "$.concepts")):
        obj = _expect(item, dict, f"$.concepts[{index}]")
        name = _expect(obj.get("name"), str, f"$.concepts[{index}].name")
        parent = obj.get("parent")
        if parent is not None:
            parent = _expect(parent, str, f"$.concepts[{index}].parent")
        schema = []
        for schema_index, entry in enumerate(obj.get("propertySchema", [])):
            entry = _expect(
                entry, dict, f"$.concepts[{index}].propertySchema[{schema_index}]"
            )
            schema.append((entry["key"], entry["valueKind"]))
        concepts[name] = Concept(
            name,
            parent=parent,
            property_schema=tuple(schema),
            builtin=(name == ROOT_CONCEPT),
        )
    relations: dict[str, RelationType] = {}
    for index, item in enumerate(_expect(data.get("relations", []), list, "$.relations")):
        obj = _expect(item, dict, f"$.relations[{index}]")
        relations[obj["name"]] = RelationType(obj["name"], obj["domain"], obj["range"])
    return Palette(
        name=_expect(data.get("name"), str, "$.name"),
        version=_expect(data.get("version"), int, "$.version"),
        concepts=concepts,
        relations=relations,
    )


# --------------------------------------------------------------------------
# Coalition merge
# --------------------------------------------------------------------------


def check_palette_compatible(local: Palette, remote: Palette) -> None:
    clashing = [
        name
        for name, concept in remote.concepts.items()
        if name in local.concepts and local.concepts[name].parent != concept.parent
    ]
    if clashing:
        raise PaletteConflictError(clashing)


def merge_palettes(local: Palette, remote: Palette) -> Palette:
    """Union of two compatible palettes; version bumps iff anything is new."""
    check_palette_compatible(local, remote)
    new_concepts = {
        name: concept
        for name, concept in remote.concepts.items()
        if name not in local.concepts
    }
    new_relations = {
        name: relation
        for name, relation in remote.relations.items()
        if name not in local.relations
    }
    if not new_concepts and not new_relations:
        return local
    return replace(
        local,
        concepts={**local.concepts, **new_concepts},
        relations={**local.relations, **new_relations},
        version=local.version + 1,
    )


def _namespaced(element_id: str, partner: str) -> str:
    return element_id if "/" in element_id else f"{partner}/{element_id}"


def merge(
    local: KnowledgeGraph,
    remote: KnowledgeGraph,
    remote_partner: str,
    *,
    local_palette: Palette,
    remote_palette: Palette,
    allowed_concepts: Optional[Iterable[str]] = None,
) -> KnowledgeGraph:
    """Union of the two graphs with remote ids namespaced by partner.

    Remote provenance keeps the original agent but records the partner the
    element arrived from. Already-present ids are left untouched, which
    makes the merge idempotent. ``allowed_concepts``, when given, is the
    sharing policy: only remote nodes whose concept is subsumed by one of
    the allowed names (and edges between surviving nodes) come across.
    """
    check_palette_compatible(local_palette, remote_palette)
    allowed = None if allowed_concepts is None else set(allowed_concepts)

    def node_allowed(node: Node) -> bool:
        if allowed is None:
            return True
        if node.concept is None:
            return ROOT_CONCEPT in allowed
        return any(
            is_subconcept(remote_palette, node.concept, name)
            for name in allowed
            if name in remote_palette.concepts
        )

    nodes = dict(local.nodes)
    id_map: dict[str, str] = {}
    for node in remote.nodes.values():
        new_id = _namespaced(node.id, remote_partner)
        id_map[node.id] = new_id
        if not node_allowed(node) or new_id in nodes:
            continue
        nodes[new_id] = replace(
            node,
            id=new_id,
            provenance=replace(node.provenance, partner=remote_partner),
        )
    edges = dict(local.edges)
    for edge in remote.edges.values():
        new_id = _namespaced(edge.id, remote_partner)
        source = id_map.get(edge.source, _namespaced(edge.source, remote_partner))
        target = id_map.get(edge.target, _namespaced(edge.target, remote_partner))
        if new_id in edges or source not in nodes or target not in nodes:
            continue
        edges[new_id] = replace(
            edge,
            id=new_id,
            source=source,
            target=target,
            provenance=replace(edge.provenance, partner=remote_partner),
        )
    return replace(local, nodes=nodes, edges=edges)
