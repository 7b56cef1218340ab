"""Per-feed classification logs, frequency statistics, and regular-class
suppression.

Operators watch the class frequencies a feed produces during normal
operation and mark the common background classes as "regular", optionally
scoped to a context (day/night). Marked classes stay in the audit log but
are invisible to downstream pattern matching. The class-to-concept map
lets definitions written against palette concepts match raw class labels.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable, Optional

from .errors import (
    NoSuchMarkingError,
    OutOfOrderTimestampError,
    SchemaViolationError,
    UnknownConceptError,
    UnknownFeedError,
)
from .graph import Palette

MODALITIES = ("video", "audio", "seismic", "text")
EVENT_CONTEXTS = ("day", "night")
MARKING_CONTEXTS = ("day", "night", "any")


@dataclass(frozen=True)
class SimpleEvent:
    """One classifier output on one feed at one scenario-clock instant."""

    id: str
    feed_id: str
    modality: str
    class_label: str
    confidence: float
    timestamp: float
    location: tuple[float, float]
    partner: str
    context: str

    def __post_init__(self) -> None:
        if not 0.0 <= self.confidence <= 1.0:
            raise SchemaViolationError(
                f"confidence {self.confidence} outside [0, 1]", "confidence"
            )
        if self.modality not in MODALITIES:
            raise SchemaViolationError(
                f"modality {self.modality!r} not one of {MODALITIES}", "modality"
            )
        if self.context not in EVENT_CONTEXTS:
            raise SchemaViolationError(
                f"event context {self.context!r} must be day or night", "context"
            )
        object.__setattr__(
            self, "location", (float(self.location[0]), float(self.location[1]))
        )

    def to_json(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "feedId": self.feed_id,
            "modality": self.modality,
            "classLabel": self.class_label,
            "confidence": self.confidence,
            "timestamp": self.timestamp,
            "location": {"x": self.location[0], "y": self.location[1]},
            "partner": self.partner,
            "context": self.context,
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "SimpleEvent":
        return cls(
            id=data["id"],
            feed_id=data["feedId"],
            modality=data["modality"],
            class_label=data["classLabel"],
            confidence=data["confidence"],
            timestamp=data["timestamp"],
            location=(data["location"]["x"], data["location"]["y"]),
            partner=data["partner"],
            context=data["context"],
        )


@dataclass(frozen=True)
class RegularMarking:
    feed_id: str
    class_label: str
    context: str  # day | night | any
    marked_by: str
    marked_at: float

    def __post_init__(self) -> None:
        if self.context not in MARKING_CONTEXTS:
            raise SchemaViolationError(
                f"marking context {self.context!r} not one of {MARKING_CONTEXTS}",
                "context",
            )

    def matches(self, event: SimpleEvent) -> bool:
        return (
            self.feed_id == event.feed_id
            and self.class_label == event.class_label
            and self.context in (event.context, "any")
        )

    def to_json(self) -> dict[str, Any]:
        return {
            "feedId": self.feed_id,
            "classLabel": self.class_label,
            "context": self.context,
            "markedBy": self.marked_by,
            "markedAt": self.marked_at,
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "RegularMarking":
        return cls(
            feed_id=data["feedId"],
            class_label=data["classLabel"],
            context=data["context"],
            marked_by=data["markedBy"],
            marked_at=data["markedAt"],
        )


class FeedState:
    """Event log plus markings and the class-to-concept map.

    One logical writer per feed: ``record`` enforces a per-feed monotone
    clock. ``version`` bumps on every marking or mapping change so
    downstream consumers can detect staleness.
    """

    def __init__(self) -> None:
        self.events: list[SimpleEvent] = []
        self.events_by_id: dict[str, SimpleEvent] = {}
        self.feed_clocks: dict[str, float] = {}
        self.markings: dict[tuple[str, str, str], RegularMarking] = {}
        self.class_to_concept: dict[str, str] = {}
        self.version = 0

    # -- event log ---------------------------------------------------------

    def record(self, event: SimpleEvent) -> None:
        last = self.feed_clocks.get(event.feed_id)
        if last is not None and event.timestamp < last:
            raise OutOfOrderTimestampError(event.feed_id, last, event.timestamp)
        self.feed_clocks[event.feed_id] = event.timestamp
        self.events.append(event)
        self.events_by_id[event.id] = event

    def load_events(self, events: Iterable[SimpleEvent]) -> None:
        """Reload an audit log verbatim (no monotonicity checks).

        Used when rebuilding state from a store; the log may span several
        scenario runs whose clocks each restarted from zero.
        """
        for event in events:
            self.events.append(event)
            self.events_by_id[event.id] = event
            self.feed_clocks[event.feed_id] = event.timestamp

    def known_feed(self, feed_id: str) -> bool:
        return feed_id in self.feed_clocks

    def feed_clock(self, feed_id: str) -> float:
        if not self.known_feed(feed_id):
            raise UnknownFeedError(feed_id)
        return self.feed_clocks[feed_id]

    # -- frequencies ---------------------------------------------------------

    def top_classes(
        self, feed_id: str, window_seconds: float, context: str = "any"
    ) -> list[tuple[str, int]]:
        """Class counts over (now - window, now], descending, ties by label."""
        if window_seconds <= 0:
            raise ValueError("window_seconds must be positive")
        now = self.feed_clock(feed_id)
        counts: dict[str, int] = {}
        for event in self.events:
            if event.feed_id != feed_id:
                continue
            if not (now - window_seconds < event.timestamp <= now):
                continue
            if context != "any" and event.context != context:
                continue
            counts[event.class_label] = counts.get(event.class_label, 0) + 1
        return sorted(counts.items(), key=lambda item: (-item[1], item[0]))

    def frequencies(
        self, feed_id: str, window_seconds: float, context: str = "any"
    ) -> list[dict[str, Any]]:
        """JSON-shaped view of ``top_classes`` with rates."""
        return [
            {"class": label, "count": count, "rate": count / window_seconds}
            for label, count in self.top_classes(feed_id, window_seconds, context)
        ]

    def class_count(self, feed_id: str, class_label: str) -> int:
        return sum(
            1
            for event in self.events
            if event.feed_id == feed_id and event.class_label == class_label
        )

    # -- regular markings ----------------------------------------------------

    def mark_regular(self, marking: RegularMarking) -> None:
        self.markings[(marking.feed_id, marking.class_label, marking.context)] = marking
        self.version += 1

    def unmark_regular(self, feed_id: str, class_label: str, context: str) -> None:
        key = (feed_id, class_label, context)
        if key not in self.markings:
            raise NoSuchMarkingError(feed_id, class_label, context)
        del self.markings[key]
        self.version += 1

    def is_suppressed(self, event: SimpleEvent) -> bool:
        return self.matching_marking(event) is not None

    def matching_marking(self, event: SimpleEvent) -> Optional[RegularMarking]:
        for context in (event.context, "any"):
            marking = self.markings.get((event.feed_id, event.class_label, context))
            if marking is not None:
                return marking
        return None

    def markings_json(self) -> list[dict[str, Any]]:
        return [
            marking.to_json()
            for marking in sorted(
                self.markings.values(),
                key=lambda m: (m.feed_id, m.class_label, m.context),
            )
        ]

    def load_markings(self, raw: Iterable[dict[str, Any]]) -> None:
        for item in raw:
            marking = RegularMarking.from_json(item)
            self.markings[
                (marking.feed_id, marking.class_label, marking.context)
            ] = marking

    # -- class-to-concept map --------------------------------------------------

    def map_class(self, class_label: str) -> Optional[str]:
        return self.class_to_concept.get(class_label)

    def set_mapping(self, mapping: dict[str, str], palette: Palette) -> None:
        for class_label, concept in mapping.items():
            if concept not in palette.concepts:
                raise UnknownConceptError(concept)
        self.class_to_concept = dict(mapping)
        self.version += 1
