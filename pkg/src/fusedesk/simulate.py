"""Deterministic multi-feed scenario simulator.

Stands in for live classifier services: each feed emits background
classifications at a fixed rate plus scripted injections at exact times.
Generation is a pure function of (scenario, seed), byte-for-byte.

PRNG contract (alternate implementations must reproduce streams exactly):

* Per feed, the substream seed is the first 8 bytes, big-endian, of
  ``SHA-256("<seed>:<feedId>")`` where ``<seed>`` is the scenario seed in
  decimal. The generator is numpy's ``default_rng`` (PCG64) over that
  64-bit seed.
* Background events consume exactly three uniforms from that generator,
  in order: ``u1`` for the inter-arrival gap ``-ln(1 - u1) / rate``,
  ``u2`` for the class (cumulative scan of the normalized weights in
  listed order, first bucket with cumulative >= u2), and ``u3`` for the
  confidence ``lo + u3 * (hi - lo)``.
* Generation stops at the first arrival time >= durationSeconds.
* Background events sit exactly at the feed location; injections at the
  feed location plus their offset. Per feed, events are ordered by time
  (background before injection on exact ties) and numbered
  ``<feedId>-<n:06d>`` from 1; the global stream is sorted by
  (timestamp, id).
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from typing import Any, Optional, Union

import numpy as np

from .errors import InvalidScenarioError
from .feeds import EVENT_CONTEXTS, MODALITIES, SimpleEvent

DEFAULT_CONFIDENCE_BAND = (0.55, 0.95)


@dataclass(frozen=True)
class FeedSpec:
    feed_id: str
    partner: str
    location: tuple[float, float]
    modality: str
    background_rate: float
    background_classes: tuple[tuple[str, float], ...] = ()
    context_schedule: tuple[tuple[float, str], ...] = ((0.0, "day"),)
    confidence_band: tuple[float, float] = DEFAULT_CONFIDENCE_BAND

    def context_at(self, timestamp: float) -> str:
        context = self.context_schedule[0][1]
        for from_second, entry in self.context_schedule:
            if from_second <= timestamp:
                context = entry
        return context


@dataclass(frozen=True)
class InjectedEvent:
    feed_id: str
    class_label: str
    at_second: float
    confidence: float
    offset: tuple[float, float] = (0.0, 0.0)


@dataclass(frozen=True)
class Scenario:
    name: str
    seed: int
    duration_seconds: float
    feeds: tuple[FeedSpec, ...] = ()
    injections: tuple[InjectedEvent, ...] = ()


def feed_stream_seed(scenario_seed: int, feed_id: str) -> int:
    digest = hashlib.sha256(f"{scenario_seed}:{feed_id}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def scenario_violations(scenario: Scenario) -> list[str]:
    violations = []
    if not scenario.name:
        violations.append("name: must be nonempty")
    if not scenario.duration_seconds > 0:
        violations.append("durationSeconds: must be > 0")
    seen_feeds = set()
    for index, feed in enumerate(scenario.feeds):
        where = f"feeds[{index}]"
        if feed.feed_id in seen_feeds:
            violations.append(f"{where}.feedId: duplicate {feed.feed_id!r}")
        seen_feeds.add(feed.feed_id)
        if feed.modality not in MODALITIES:
            violations.append(f"{where}.modality: unknown {feed.modality!r}")
        if feed.background_rate < 0:
            violations.append(f"{where}.backgroundRate: must be >= 0")
        if feed.background_rate > 0 and not feed.background_classes:
            violations.append(f"{where}.backgroundClasses: required when rate > 0")
        for label, weight in feed.background_classes:
            if weight <= 0:
                violations.append(
                    f"{where}.backgroundClasses[{label}]: weight must be positive"
                )
        if not feed.context_schedule or min(f for f, _ in feed.context_schedule) > 0:
            violations.append(f"{where}.contextSchedule: must cover [0, duration)")
        for from_second, context in feed.context_schedule:
            if context not in EVENT_CONTEXTS:
                violations.append(
                    f"{where}.contextSchedule[{from_second}]: context {context!r}"
                    " must be day or night"
                )
        lo, hi = feed.confidence_band
        if not (0.0 <= lo <= hi <= 1.0):
            violations.append(f"{where}.confidenceBand: must be within [0, 1]")
    for index, injection in enumerate(scenario.injections):
        where = f"injections[{index}]"
        if injection.feed_id not in seen_feeds:
            violations.append(f"{where}.feedId: unknown feed {injection.feed_id!r}")
        if not 0 <= injection.at_second <= scenario.duration_seconds:
            violations.append(f"{where}.atSecond: outside [0, duration]")
        if not 0.0 <= injection.confidence <= 1.0:
            violations.append(f"{where}.confidence: outside [0, 1]")
    return violations


def generate(scenario: Scenario) -> list[SimpleEvent]:
    """The full event stream, globally ordered by (timestamp, id)."""
    violations = scenario_violations(scenario)
    if violations:
        raise InvalidScenarioError(violations)
    events: list[SimpleEvent] = []
    for feed in scenario.feeds:
        rows: list[tuple[float, str, float, tuple[float, float]]] = []
        if feed.background_rate > 0 and feed.background_classes:
            rng = np.random.default_rng(feed_stream_seed(scenario.seed, feed.feed_id))
            total_weight = sum(weight for _, weight in feed.background_classes)
            lo, hi = feed.confidence_band
            now = 0.0
            while True:
                gap = -math.log(1.0 - rng.random()) / feed.background_rate
                now += gap
                if now >= scenario.duration_seconds:
                    break
                pick = rng.random()
                cumulative = 0.0
                label = feed.background_classes[-1][0]
                for candidate, weight in feed.background_classes:
                    cumulative += weight / total_weight
                    if pick <= cumulative:
                        label = candidate
                        break
                confidence = lo + rng.random() * (hi - lo)
                rows.append((now, label, confidence, feed.location))
        for injection in scenario.injections:
            if injection.feed_id != feed.feed_id:
                continue
            rows.append(
                (
                    injection.at_second,
                    injection.class_label,
                    injection.confidence,
                    (
                        feed.location[0] + injection.offset[0],
                        feed.location[1] + injection.offset[1],
                    ),
                )
            )
        rows.sort(key=lambda row: row[0])  # stable: background before injection
        for number, (timestamp, label, confidence, location) in enumerate(rows, 1):
            events.append(
                SimpleEvent(
                    id=f"{feed.feed_id}-{number:06d}",
                    feed_id=feed.feed_id,
                    modality=feed.modality,
                    class_label=label,
                    confidence=confidence,
                    timestamp=timestamp,
                    location=location,
                    partner=feed.partner,
                    context=feed.context_at(timestamp),
                )
            )
    events.sort(key=lambda event: (event.timestamp, event.id))
    return events


# --------------------------------------------------------------------------
# Scenario JSON
# --------------------------------------------------------------------------


def feed_from_json(data: dict[str, Any]) -> FeedSpec:
    band = data.get("confidenceBand")
    return FeedSpec(
        feed_id=data["feedId"],
        partner=data["partner"],
        location=(data["location"]["x"], data["location"]["y"]),
        modality=data["modality"],
        background_rate=data.get("backgroundRate", 0.0),
        background_classes=tuple(
            (item["classLabel"], item["weight"])
            for item in data.get("backgroundClasses", [])
        ),
        context_schedule=tuple(
            (item["fromSecond"], item["context"])
            for item in data.get("contextSchedule", [{"fromSecond": 0, "context": "day"}])
        ),
        confidence_band=tuple(band) if band else DEFAULT_CONFIDENCE_BAND,
    )


def scenario_from_json(data: dict[str, Any]) -> Scenario:
    return Scenario(
        name=data.get("name", ""),
        seed=data.get("seed", 0),
        duration_seconds=data.get("durationSeconds", 0.0),
        feeds=tuple(feed_from_json(item) for item in data.get("feeds", [])),
        injections=tuple(
            InjectedEvent(
                feed_id=item["feedId"],
                class_label=item["classLabel"],
                at_second=item["atSecond"],
                confidence=item["confidence"],
                offset=(
                    item.get("offset", {}).get("dx", 0.0),
                    item.get("offset", {}).get("dy", 0.0),
                ),
            )
            for item in data.get("injections", [])
        ),
    )


def scenario_to_json(scenario: Scenario) -> dict[str, Any]:
    return {
        "name": scenario.name,
        "seed": scenario.seed,
        "durationSeconds": scenario.duration_seconds,
        "feeds": [
            {
                "feedId": feed.feed_id,
                "partner": feed.partner,
                "location": {"x": feed.location[0], "y": feed.location[1]},
                "modality": feed.modality,
                "backgroundRate": feed.background_rate,
                "backgroundClasses": [
                    {"classLabel": label, "weight": weight}
                    for label, weight in feed.background_classes
                ],
                "contextSchedule": [
                    {"fromSecond": from_second, "context": context}
                    for from_second, context in feed.context_schedule
                ],
                "confidenceBand": list(feed.confidence_band),
            }
            for feed in scenario.feeds
        ],
        "injections": [
            {
                "feedId": injection.feed_id,
                "classLabel": injection.class_label,
                "atSecond": injection.at_second,
                "confidence": injection.confidence,
                "offset": {"dx": injection.offset[0], "dy": injection.offset[1]},
            }
            for injection in scenario.injections
        ],
    }


def validate_scenario(
    source: Union[str, dict[str, Any]], seed_override: Optional[int] = None
) -> Scenario:
    """Parse and validate scenario JSON; raises with the violation list."""
    if isinstance(source, str):
        try:
            data = json.loads(source)
        except json.JSONDecodeError as exc:
            raise InvalidScenarioError(
                [f"parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}"]
            ) from None
    else:
        data = source
    if not isinstance(data, dict):
        raise InvalidScenarioError(["top level: expected object"])
    try:
        scenario = scenario_from_json(data)
    except (KeyError, TypeError) as exc:
        raise InvalidScenarioError([f"missing or malformed field: {exc}"]) from None
    if seed_override is not None:
        scenario = Scenario(
            name=scenario.name,
            seed=seed_override,
            duration_seconds=scenario.duration_seconds,
            feeds=scenario.feeds,
            injections=scenario.injections,
        )
    violations = scenario_violations(scenario)
    if violations:
        raise InvalidScenarioError(violations)
    return scenario
