"""fusedesk: a human-steerable complex event processing workbench.

Operators observe per-feed classification frequencies, suppress regular
background classes, define complex events that compile to probabilistic
logic rules, and receive detections with provenance-based explanations,
all over a shared JSON knowledge graph that multiple partners can merge.
"""

from .definitions import (
    ComplexEventDefinition,
    ConstituentSpec,
    LogicFragment,
    compile_definition,
    validate,
)
from .engine import Detection, Engine, match_brute
from .errors import FusedeskError
from .explain import Explanation, explain, explain_suppression, verify_explanation
from .feeds import FeedState, RegularMarking, SimpleEvent
from .graph import (
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
    query_by_concept,
    serialize,
)
from .logic import ProbFact, evaluate_exact, parse, render
from .simulate import FeedSpec, InjectedEvent, Scenario, generate, validate_scenario

__version__ = "0.1.0"

__all__ = [
    "ComplexEventDefinition",
    "Concept",
    "ConstituentSpec",
    "Detection",
    "Edge",
    "Engine",
    "Explanation",
    "FeedSpec",
    "FeedState",
    "FusedeskError",
    "InjectedEvent",
    "KnowledgeGraph",
    "LogicFragment",
    "Node",
    "Palette",
    "ProbFact",
    "Provenance",
    "RegularMarking",
    "RelationType",
    "Scenario",
    "SimpleEvent",
    "add_edge",
    "add_node",
    "compile_definition",
    "deserialize",
    "empty_graph",
    "evaluate_exact",
    "explain",
    "explain_suppression",
    "generate",
    "is_subconcept",
    "match_brute",
    "merge",
    "merge_palettes",
    "parse",
    "query_by_concept",
    "render",
    "serialize",
    "validate",
    "validate_scenario",
    "verify_explanation",
]
