"""Scenario execution shared by the HTTP API and the headless CLI.

A scenario file may embed the run configuration next to the simulation
inputs: ``definitions`` (array of definition JSON), ``markings``,
``classMapping``, and ``palette``. Headless runs take everything from the
file; API runs overlay the file's configuration on the project state.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path
from typing import Any, Callable, Optional

from ..definitions import ComplexEventDefinition, validate
from ..engine import Detection, Engine
from ..errors import FusedeskError, InvalidScenarioError
from ..feeds import FeedState, SimpleEvent
from ..graph import Palette, palette_from_json
from ..jsonutil import dumps_canonical
from ..simulate import Scenario, generate, validate_scenario

Publish = Callable[[str, dict[str, Any]], None]


class RunConfig:
    """Everything a run needs besides the simulation inputs."""

    def __init__(
        self,
        definitions: list[ComplexEventDefinition],
        markings: list[dict[str, Any]],
        class_mapping: dict[str, str],
        palette: Optional[Palette] = None,
    ):
        self.definitions = definitions
        self.markings = markings
        self.class_mapping = class_mapping
        self.palette = palette

    @classmethod
    def from_scenario_json(cls, raw: dict[str, Any]) -> "RunConfig":
        definitions = []
        for item in raw.get("definitions", []):
            definition = ComplexEventDefinition.from_json(item)
            violations = validate(definition)
            if violations:
                raise InvalidScenarioError(
                    [f"definitions[{definition.name}]: {v}" for v in violations]
                )
            definitions.append(definition)
        palette = (
            palette_from_json(raw["palette"]) if raw.get("palette") else None
        )
        return cls(
            definitions=definitions,
            markings=list(raw.get("markings", [])),
            class_mapping=dict(raw.get("classMapping", {})),
            palette=palette,
        )


class RunResult:
    def __init__(
        self,
        scenario: Scenario,
        events: list[SimpleEvent],
        detections: list[Detection],
        engine: Engine,
    ):
        self.scenario = scenario
        self.events = events
        self.detections = detections
        self.engine = engine

    def summary(self) -> dict[str, Any]:
        by_definition: dict[str, int] = {}
        for detection in self.detections:
            by_definition[detection.definition_name] = (
                by_definition.get(detection.definition_name, 0) + 1
            )
        return {
            "scenario": self.scenario.name,
            "seed": self.scenario.seed,
            "events": len(self.events),
            "suppressed": len(self.engine.suppressions),
            "detections": len(self.detections),
            "byDefinition": dict(sorted(by_definition.items())),
        }


def run_scenario(
    scenario: Scenario,
    config: RunConfig,
    publish: Optional[Publish] = None,
    on_event: Optional[Callable[[SimpleEvent], None]] = None,
    on_detection: Optional[Callable[[Detection], None]] = None,
) -> RunResult:
    """Generate the stream and push it through a fresh engine.

    ``publish`` receives one message per engine-visible occurrence:
    ``simple_event`` and ``frequency_update`` for every generated event,
    ``detection`` for every emitted detection.
    """
    state = FeedState()
    state.load_markings(config.markings)
    if config.palette is not None and config.class_mapping:
        state.set_mapping(config.class_mapping, config.palette)
    else:
        state.class_to_concept = dict(config.class_mapping)
    engine = Engine(
        config.definitions,
        feed_state=state,
        palette=config.palette,
        class_mapping=config.class_mapping,
    )
    events = generate(scenario)
    counts: dict[tuple[str, str], int] = {}
    detections: list[Detection] = []
    for event in events:
        emitted = engine.ingest(event)
        if on_event is not None:
            on_event(event)
        key = (event.feed_id, event.class_label)
        counts[key] = counts.get(key, 0) + 1
        if publish is not None:
            publish("simple_event", event.to_json())
            publish(
                "frequency_update",
                {
                    "feedId": event.feed_id,
                    "classLabel": event.class_label,
                    "context": event.context,
                    "count": counts[key],
                    "suppressed": event.id in engine.suppressions,
                },
            )
        for detection in emitted:
            detections.append(detection)
            if on_detection is not None:
                on_detection(detection)
            if publish is not None:
                publish("detection", detection.to_json())
    return RunResult(scenario, events, detections, engine)


def load_scenario_file(path: Path) -> tuple[Scenario, RunConfig, dict[str, Any]]:
    raw = json.loads(path.read_text(encoding="utf-8"))
    scenario = validate_scenario(raw)
    return scenario, RunConfig.from_scenario_json(raw), raw


def run_headless(
    scenario_path: str,
    seed: Optional[int],
    out_path: str,
    stdout=None,
    stderr=None,
) -> int:
    """Generate, match, and write the detection log.

    Exit codes: 0 success, 1 validation failure, 2 I/O failure.
    """
    stdout = stdout if stdout is not None else sys.stdout
    stderr = stderr if stderr is not None else sys.stderr
    try:
        raw_text = Path(scenario_path).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"cannot read scenario: {exc}", file=stderr)
        return 2
    try:
        raw = json.loads(raw_text)
        scenario = validate_scenario(raw, seed_override=seed)
        config = RunConfig.from_scenario_json(raw if isinstance(raw, dict) else {})
        result = run_scenario(scenario, config)
    except InvalidScenarioError as exc:
        for violation in exc.violations:
            print(violation, file=stderr)
        return 1
    except FusedeskError as exc:
        print(str(exc), file=stderr)
        return 1
    lines = "".join(
        dumps_canonical(detection.to_json()) + "\n" for detection in result.detections
    )
    try:
        out = Path(out_path)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(lines, encoding="utf-8")
    except OSError as exc:
        print(f"cannot write detections: {exc}", file=stderr)
        return 2
    print(dumps_canonical(result.summary()), file=stdout)
    return 0
