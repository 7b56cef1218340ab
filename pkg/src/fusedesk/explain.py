"""Human-consumable explanations for detections and suppression decisions.

Explanations are rebuilt on demand from the event log and the definition,
never stored, so they cannot drift from ground truth: every number in one
is recomputable, and ``verify_explanation`` does exactly that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Mapping, Optional, Sequence, Union

from .definitions import ComplexEventDefinition, canonical_order, event_matches
from .engine import Detection, Engine, SuppressionDecision
from .errors import DanglingConstituentError, FusedeskError, UnknownEventError
from .feeds import FeedState, SimpleEvent
from .graph import Palette
from .jsonutil import fmt_number

NARRATIVE_TEMPLATE = (
    "{name} detected: initiated by {init_class} (p={init_conf}) at t={init_t}, "
    "terminated by {term_class} (p={term_conf}) at t={term_t}; "
    "Δt={delta}s ≤ {window}s; max distance {distance}m ≤ {radius}m; "
    "combined probability {probability}."
)


@dataclass(frozen=True)
class ConstraintCheck:
    kind: str  # temporal | spatial | count
    actual: float
    bound: float
    satisfied: bool

    def to_json(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "actual": self.actual,
            "bound": self.bound,
            "satisfied": self.satisfied,
        }


@dataclass(frozen=True)
class ConstituentLine:
    event_id: str
    role: str
    class_label: str
    confidence: float
    feed_id: str
    partner: str

    def to_json(self) -> dict[str, Any]:
        return {
            "eventId": self.event_id,
            "role": self.role,
            "classLabel": self.class_label,
            "confidence": self.confidence,
            "feedId": self.feed_id,
            "partner": self.partner,
        }


@dataclass(frozen=True)
class Explanation:
    detection_id: str
    constituents: tuple[ConstituentLine, ...]
    constraint_checks: tuple[ConstraintCheck, ...]
    probability_terms: tuple[tuple[str, float], ...]
    product: float
    narrative: str

    def to_json(self) -> dict[str, Any]:
        return {
            "detectionId": self.detection_id,
            "constituents": [line.to_json() for line in self.constituents],
            "constraintChecks": [check.to_json() for check in self.constraint_checks],
            "probabilityTerms": [
                {"eventId": event_id, "confidence": confidence}
                for event_id, confidence in self.probability_terms
            ],
            "product": self.product,
            "narrative": self.narrative,
        }


def _distance(a: tuple[float, float], b: tuple[float, float]) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def _event_index(
    event_log: Union[FeedState, Sequence[SimpleEvent]]
) -> Mapping[str, SimpleEvent]:
    if isinstance(event_log, FeedState):
        return event_log.events_by_id
    return {event.id: event for event in event_log}


def _definition_index(
    definitions: Union[Mapping[str, ComplexEventDefinition], Sequence[ComplexEventDefinition]]
) -> Mapping[str, ComplexEventDefinition]:
    if isinstance(definitions, Mapping):
        return definitions
    return {definition.name: definition for definition in definitions}


def explain(
    detection: Detection,
    event_log: Union[FeedState, Sequence[SimpleEvent]],
    definitions: Union[Mapping[str, ComplexEventDefinition], Sequence[ComplexEventDefinition]],
    *,
    palette: Optional[Palette] = None,
    class_mapping: Optional[dict[str, str]] = None,
) -> Explanation:
    """Reconstruct the full reasoning behind one detection."""
    events = _event_index(event_log)
    by_name = _definition_index(definitions)
    if detection.definition_name not in by_name:
        raise FusedeskError(f"unknown definition {detection.definition_name!r}")
    definition = by_name[detection.definition_name]

    resolved: list[tuple[str, SimpleEvent]] = []
    for role, event_id in detection.constituent_event_ids:
        if event_id not in events:
            raise DanglingConstituentError(event_id)
        resolved.append((role, events[event_id]))

    anchor_id = detection.anchor_event_id
    anchor = next(
        (event for role, event in resolved if role == "initiator" and event.id == anchor_id),
        resolved[0][1],
    )
    initiator = anchor
    terminator = next(event for role, event in resolved if role == "terminator")

    checks: list[ConstraintCheck] = [
        ConstraintCheck(
            kind="temporal",
            actual=terminator.timestamp - initiator.timestamp,
            bound=definition.window_seconds,
            satisfied=0.0
            <= terminator.timestamp - initiator.timestamp
            <= definition.window_seconds,
        )
    ]
    anchor_seen = False
    for role, event in resolved:
        if not anchor_seen and role == "initiator" and event.id == anchor.id:
            anchor_seen = True
            continue
        separation = _distance(event.location, anchor.location)
        checks.append(
            ConstraintCheck(
                kind="spatial",
                actual=separation,
                bound=definition.radius_meters,
                satisfied=separation <= definition.radius_meters,
            )
        )
    for spec in canonical_order(definition):
        qualifying = sum(
            1
            for event in events.values()
            if detection.interval_start <= event.timestamp <= detection.interval_end
            and _distance(event.location, anchor.location) <= definition.radius_meters
            and event_matches(spec, event.class_label, palette, class_mapping)
        )
        checks.append(
            ConstraintCheck(
                kind="count",
                actual=qualifying,
                bound=spec.min_count,
                satisfied=qualifying >= spec.min_count,
            )
        )

    terms: list[tuple[str, float]] = []
    seen: set[str] = set()
    for _, event in resolved:
        if event.id not in seen:
            seen.add(event.id)
            terms.append((event.id, event.confidence))
    product = 1.0
    for _, confidence in terms:
        product *= confidence

    spatial_actuals = [check.actual for check in checks if check.kind == "spatial"]
    narrative = NARRATIVE_TEMPLATE.format(
        name=detection.definition_name,
        init_class=initiator.class_label,
        init_conf=fmt_number(initiator.confidence),
        init_t=fmt_number(initiator.timestamp),
        term_class=terminator.class_label,
        term_conf=fmt_number(terminator.confidence),
        term_t=fmt_number(terminator.timestamp),
        delta=fmt_number(terminator.timestamp - initiator.timestamp),
        window=fmt_number(definition.window_seconds),
        distance=fmt_number(max(spatial_actuals) if spatial_actuals else 0.0),
        radius=fmt_number(definition.radius_meters),
        probability=fmt_number(product),
    )

    return Explanation(
        detection_id=detection.id,
        constituents=tuple(
            ConstituentLine(
                event_id=event.id,
                role=role,
                class_label=event.class_label,
                confidence=event.confidence,
                feed_id=event.feed_id,
                partner=event.partner,
            )
            for role, event in resolved
        ),
        constraint_checks=tuple(checks),
        probability_terms=tuple(terms),
        product=product,
        narrative=narrative,
    )


def verify_explanation(
    explanation: Explanation,
    detection: Detection,
    event_log: Union[FeedState, Sequence[SimpleEvent]],
    definitions: Union[Mapping[str, ComplexEventDefinition], Sequence[ComplexEventDefinition]],
    *,
    palette: Optional[Palette] = None,
    class_mapping: Optional[dict[str, str]] = None,
) -> bool:
    """Recompute the explanation from scratch; exact agreement required."""
    recomputed = explain(
        detection,
        event_log,
        definitions,
        palette=palette,
        class_mapping=class_mapping,
    )
    return recomputed == explanation and abs(
        explanation.product - detection.probability
    ) <= 1e-9


def explain_suppression(
    event_id: str, engine: Engine
) -> Optional[SuppressionDecision]:
    """The ingestion-time suppression decision for an event, if any.

    Markings added after an event was ingested do not retroactively
    produce a trace; the decision is whatever was made at ingestion.
    """
    if event_id not in engine.feed_state.events_by_id:
        raise UnknownEventError(event_id)
    return engine.suppressions.get(event_id)
