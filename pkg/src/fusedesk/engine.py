"""Streaming complex-event matcher with a brute-force batch oracle.

The engine consumes simple events in global (timestamp, id) order. An
event matching an initiator constituent opens an instance anchored on
that event; later events within the instance's window and radius join
every constituent they match; the instance closes and emits a detection
when a terminator-matching event arrives while every constituent's
minimum count is met. Suppressed (regular-marked) events are logged for
audit but never matched.

``match_brute`` re-derives the same detections by direct enumeration over
the full log, one anchor at a time, and is used to cross-check the
streaming path.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Optional, Sequence, Union

from .definitions import ComplexEventDefinition, event_matches, validate
from .errors import (
    FusedeskError,
    InvalidDefinitionError,
    LogTooLargeError,
    OutOfOrderTimestampError,
    VersionMismatchError,
)
from .feeds import FeedState, RegularMarking, SimpleEvent
from .graph import Palette, palette_from_json, palette_to_json

SNAPSHOT_VERSION = "fusedesk-engine/1"
MAX_BRUTE_EVENTS = 200


def _distance(a: tuple[float, float], b: tuple[float, float]) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


@dataclass(frozen=True)
class Detection:
    """An emitted complex event with its provenance."""

    id: str
    definition_name: str
    interval_start: float
    interval_end: float
    location: tuple[float, float]
    probability: float
    constituent_event_ids: tuple[tuple[str, str], ...]  # (role, event id)
    emitted_at: float

    @property
    def anchor_event_id(self) -> str:
        # Detection ids are "<definition>/<anchor event id>" by construction.
        return self.id[len(self.definition_name) + 1 :]

    def to_json(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "definitionName": self.definition_name,
            "intervalStart": self.interval_start,
            "intervalEnd": self.interval_end,
            "location": {"x": self.location[0], "y": self.location[1]},
            "probability": self.probability,
            "constituentEventIds": [
                {"role": role, "eventId": event_id}
                for role, event_id in self.constituent_event_ids
            ],
            "emittedAt": self.emitted_at,
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "Detection":
        return cls(
            id=data["id"],
            definition_name=data["definitionName"],
            interval_start=data["intervalStart"],
            interval_end=data["intervalEnd"],
            location=(data["location"]["x"], data["location"]["y"]),
            probability=data["probability"],
            constituent_event_ids=tuple(
                (item["role"], item["eventId"]) for item in data["constituentEventIds"]
            ),
            emitted_at=data["emittedAt"],
        )


@dataclass(frozen=True)
class SuppressionDecision:
    event_id: str
    marking: RegularMarking
    decided_at: float


@dataclass(eq=False)
class OpenInstance:
    """One in-flight complex-event candidate anchored on its initiator."""

    definition: ComplexEventDefinition
    anchor: SimpleEvent
    opened_at: float
    deadline: float
    collected: list[list[SimpleEvent]] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.collected:
            self.collected = [[] for _ in self.definition.constituents]

    def counts_met(self) -> bool:
        return all(
            len(events) >= spec.min_count
            for spec, events in zip(self.definition.constituents, self.collected)
        )


def _pick_constituents(
    instance: OpenInstance, closing: SimpleEvent
) -> list[tuple[str, SimpleEvent]]:
    """Choose one event per constituent slot.

    The anchor is pinned to the first slot of every initiator constituent
    it satisfies, and the closing event to the first slot of every
    terminator constituent it satisfies; that keeps the chosen set
    consistent with the compiled rule's temporal constraints. Remaining
    slots take the top qualifying events by (confidence desc, id asc).
    Listed in canonical constituent order: initiators, terminators,
    supporting.
    """
    ranked: list[tuple[int, str, list[SimpleEvent]]] = []
    definition = instance.definition
    pinned_for_role = {"initiator": instance.anchor, "terminator": closing}
    for role in ("initiator", "terminator", "supporting"):
        pinned = pinned_for_role.get(role)
        for index, spec in enumerate(definition.constituents):
            if spec.role != role:
                continue
            pool = instance.collected[index]
            picks: list[SimpleEvent] = []
            rest = sorted(pool, key=lambda e: (-e.confidence, e.id))
            if pinned is not None and any(e.id == pinned.id for e in pool):
                picks.append(pinned)
                rest = [e for e in rest if e.id != pinned.id]
            picks.extend(rest[: spec.min_count - len(picks)])
            ranked.append((index, spec.role, picks))
    return [(role, event) for _, role, picks in ranked for event in picks]


def _detection_from_close(
    instance: OpenInstance, closing: SimpleEvent
) -> Detection:
    chosen = _pick_constituents(instance, closing)
    probability = 1.0
    seen: set[str] = set()
    for _, event in chosen:
        if event.id not in seen:
            seen.add(event.id)
            probability *= event.confidence
    return Detection(
        id=f"{instance.definition.name}/{instance.anchor.id}",
        definition_name=instance.definition.name,
        interval_start=instance.anchor.timestamp,
        interval_end=closing.timestamp,
        location=instance.anchor.location,
        probability=probability,
        constituent_event_ids=tuple((role, event.id) for role, event in chosen),
        emitted_at=closing.timestamp,
    )


class Engine:
    """Sequential matcher over a totally ordered event stream."""

    def __init__(
        self,
        definitions: Iterable[ComplexEventDefinition],
        feed_state: Optional[FeedState] = None,
        palette: Optional[Palette] = None,
        class_mapping: Optional[dict[str, str]] = None,
    ):
        self.definitions: dict[str, ComplexEventDefinition] = {}
        for definition in definitions:
            self.add_definition(definition)
        self.feed_state = feed_state if feed_state is not None else FeedState()
        self.palette = palette
        self.class_mapping = class_mapping if class_mapping is not None else {}
        self.open_instances: list[OpenInstance] = []
        self.detections: list[Detection] = []
        self.suppressions: dict[str, SuppressionDecision] = {}
        self.clock: Optional[tuple[float, str]] = None

    def add_definition(self, definition: ComplexEventDefinition) -> None:
        violations = validate(definition)
        if violations:
            raise InvalidDefinitionError(violations)
        if definition.name in self.definitions:
            raise InvalidDefinitionError([f"name: duplicate {definition.name!r}"])
        self.definitions[definition.name] = definition

    @property
    def event_log(self) -> list[SimpleEvent]:
        return self.feed_state.events

    def _matches(self, spec, class_label: str) -> bool:
        return event_matches(spec, class_label, self.palette, self.class_mapping)

    def ingest(self, event: SimpleEvent) -> list[Detection]:
        """Process one event; returns detections it triggered."""
        if self.clock is not None and (event.timestamp, event.id) <= self.clock:
            raise OutOfOrderTimestampError(
                event.feed_id, self.clock[0], event.timestamp
            )
        self.feed_state.record(event)
        self.clock = (event.timestamp, event.id)

        marking = self.feed_state.matching_marking(event)
        if marking is not None:
            self.suppressions[event.id] = SuppressionDecision(
                event.id, marking, event.timestamp
            )
            return []

        self.open_instances = [
            instance
            for instance in self.open_instances
            if instance.deadline >= event.timestamp
        ]

        closable: list[OpenInstance] = []
        for instance in self.open_instances:
            if event.timestamp > instance.deadline:
                continue
            if _distance(event.location, instance.anchor.location) > instance.definition.radius_meters:
                continue
            hit_terminator = False
            for index, spec in enumerate(instance.definition.constituents):
                if self._matches(spec, event.class_label):
                    instance.collected[index].append(event)
                    if spec.role == "terminator":
                        hit_terminator = True
            if hit_terminator:
                closable.append(instance)

        for definition in self.definitions.values():
            if not definition.enabled:
                continue
            if not any(
                spec.role == "initiator" and self._matches(spec, event.class_label)
                for spec in definition.constituents
            ):
                continue
            instance = OpenInstance(
                definition=definition,
                anchor=event,
                opened_at=event.timestamp,
                deadline=event.timestamp + definition.window_seconds,
            )
            hit_terminator = False
            for index, spec in enumerate(definition.constituents):
                if self._matches(spec, event.class_label):
                    instance.collected[index].append(event)
                    if spec.role == "terminator":
                        hit_terminator = True
            self.open_instances.append(instance)
            if hit_terminator:
                closable.append(instance)

        emitted: list[Detection] = []
        closed: list[OpenInstance] = []
        for instance in closable:
            if instance.counts_met():
                emitted.append(_detection_from_close(instance, event))
                closed.append(instance)
        if closed:
            self.open_instances = [
                instance for instance in self.open_instances if instance not in closed
            ]
        emitted.sort(key=lambda d: d.definition_name)
        self.detections.extend(emitted)
        return emitted

    def ingest_all(self, events: Iterable[SimpleEvent]) -> list[Detection]:
        out: list[Detection] = []
        for event in events:
            out.extend(self.ingest(event))
        return out

    # -- snapshot / restore --------------------------------------------------

    def snapshot(self) -> dict[str, Any]:
        """Matcher state sufficient to continue the stream identically.

        The audit log itself is not captured; it lives in the project
        store. Restoring yields an engine with an empty log but identical
        future behavior.
        """
        return {
            "version": SNAPSHOT_VERSION,
            "clock": None
            if self.clock is None
            else {"t": self.clock[0], "id": self.clock[1]},
            "palette": None if self.palette is None else palette_to_json(self.palette),
            "classMapping": dict(sorted(self.class_mapping.items())),
            "definitions": [d.to_json() for d in self.definitions.values()],
            "markings": self.feed_state.markings_json(),
            "feedClocks": dict(sorted(self.feed_state.feed_clocks.items())),
            "openInstances": [
                {
                    "definition": instance.definition.name,
                    "anchor": instance.anchor.to_json(),
                    "openedAt": instance.opened_at,
                    "deadline": instance.deadline,
                    "collected": [
                        [event.to_json() for event in events]
                        for events in instance.collected
                    ],
                }
                for instance in self.open_instances
            ],
        }

    @classmethod
    def restore(cls, state: Union[str, dict[str, Any]]) -> "Engine":
        if isinstance(state, (str, bytes)):
            state = json.loads(state)
        if not isinstance(state, dict) or state.get("version") != SNAPSHOT_VERSION:
            raise VersionMismatchError(
                SNAPSHOT_VERSION, str(state.get("version") if isinstance(state, dict) else state)
            )
        palette = (
            palette_from_json(state["palette"]) if state.get("palette") else None
        )
        engine = cls(
            [ComplexEventDefinition.from_json(d) for d in state["definitions"]],
            palette=palette,
            class_mapping=dict(state.get("classMapping", {})),
        )
        engine.feed_state.load_markings(state.get("markings", []))
        engine.feed_state.feed_clocks.update(state.get("feedClocks", {}))
        clock = state.get("clock")
        engine.clock = None if clock is None else (clock["t"], clock["id"])
        for raw in state.get("openInstances", []):
            name = raw["definition"]
            if name not in engine.definitions:
                raise FusedeskError(
                    f"snapshot references unknown definition {name!r}"
                )
            definition = engine.definitions[name]
            instance = OpenInstance(
                definition=definition,
                anchor=SimpleEvent.from_json(raw["anchor"]),
                opened_at=raw["openedAt"],
                deadline=raw["deadline"],
                collected=[
                    [SimpleEvent.from_json(e) for e in events]
                    for events in raw["collected"]
                ],
            )
            if len(instance.collected) != len(definition.constituents):
                raise FusedeskError(
                    f"snapshot instance of {name!r} has inconsistent slots"
                )
            engine.open_instances.append(instance)
        return engine


# --------------------------------------------------------------------------
# Batch oracle
# --------------------------------------------------------------------------


def match_brute(
    definitions: Sequence[ComplexEventDefinition],
    event_log: Sequence[SimpleEvent],
    *,
    markings: Sequence[RegularMarking] = (),
    palette: Optional[Palette] = None,
    class_mapping: Optional[dict[str, str]] = None,
) -> list[Detection]:
    """Enumerate detections over the whole log, anchor by anchor.

    Equivalent to streaming ingestion but derived independently: for each
    non-suppressed event matching an initiator constituent, walk the
    qualifying sub-log in order and close at the earliest terminator
    arrival that satisfies every minimum count. Output is ordered by
    (intervalEnd, closing event id, definitionName, anchor).
    """
    if len(event_log) > MAX_BRUTE_EVENTS:
        raise LogTooLargeError(len(event_log), MAX_BRUTE_EVENTS)
    mapping = class_mapping or {}
    ordered = sorted(event_log, key=lambda e: (e.timestamp, e.id))
    visible = [
        event
        for event in ordered
        if not any(marking.matches(event) for marking in markings)
    ]

    results: list[tuple[tuple, Detection]] = []
    for def_index, definition in enumerate(definitions):
        if not definition.enabled:
            continue
        initiator_specs = [
            spec for spec in definition.constituents if spec.role == "initiator"
        ]
        for anchor in visible:
            if not any(
                event_matches(spec, anchor.class_label, palette, mapping)
                for spec in initiator_specs
            ):
                continue
            deadline = anchor.timestamp + definition.window_seconds
            instance = OpenInstance(
                definition=definition,
                anchor=anchor,
                opened_at=anchor.timestamp,
                deadline=deadline,
            )
            closing: Optional[SimpleEvent] = None
            for event in visible:
                if (event.timestamp, event.id) < (anchor.timestamp, anchor.id):
                    continue
                if event.timestamp > deadline:
                    break
                if _distance(event.location, anchor.location) > definition.radius_meters:
                    continue
                hit_terminator = False
                for index, spec in enumerate(definition.constituents):
                    if event_matches(spec, event.class_label, palette, mapping):
                        instance.collected[index].append(event)
                        if spec.role == "terminator":
                            hit_terminator = True
                if hit_terminator and instance.counts_met():
                    closing = event
                    break
            if closing is None:
                continue
            detection = _detection_from_close(instance, closing)
            sort_key = (
                detection.interval_end,
                closing.id,
                definition.name,
                anchor.timestamp,
                anchor.id,
                def_index,
            )
            results.append((sort_key, detection))
    results.sort(key=lambda item: item[0])
    return [detection for _, detection in results]
