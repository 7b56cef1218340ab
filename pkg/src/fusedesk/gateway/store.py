"""File-backed project store: diffable, inspectable, crash-consistent.

Layout under the data root::

    projects/<project>/palette.json
    projects/<project>/graph.json
    projects/<project>/definitions.json
    projects/<project>/markings.json
    projects/<project>/mapping.json
    projects/<project>/events.jsonl
    projects/<project>/project.detections.jsonl

Snapshot files are replaced atomically (write-temp-then-rename); the two
logs are append-only with one canonical JSON document per line. A
truncated trailing line (the only partial state a crash between writes
can leave) is dropped on read.
"""

from __future__ import annotations

import json
import re
from pathlib import Path
from typing import Any, Optional

from ..errors import StoreCorruptError
from ..graph import (
    KnowledgeGraph,
    Palette,
    deserialize,
    palette_from_json,
    palette_to_json,
    serialize,
)
from ..jsonutil import append_jsonl, atomic_write_text, dumps_canonical, read_jsonl

_PROJECT_RE = re.compile(r"^[A-Za-z0-9_-]+$")


class ProjectStore:
    def __init__(self, root: Path):
        self.root = Path(root)
        (self.root / "projects").mkdir(parents=True, exist_ok=True)

    def list_projects(self) -> list[str]:
        return sorted(
            entry.name for entry in (self.root / "projects").iterdir() if entry.is_dir()
        )

    def project_dir(self, project: str) -> Path:
        if not _PROJECT_RE.match(project):
            raise ValueError(f"invalid project name {project!r}")
        return self.root / "projects" / project

    def _load_json(self, path: Path) -> Optional[Any]:
        if not path.exists():
            return None
        try:
            return json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise StoreCorruptError(str(path), exc.msg) from None

    # -- palette ---------------------------------------------------------

    def load_palette(self, project: str) -> Palette:
        raw = self._load_json(self.project_dir(project) / "palette.json")
        if raw is None:
            return Palette(name="default")
        return palette_from_json(raw)

    def save_palette(self, project: str, palette: Palette) -> None:
        atomic_write_text(
            self.project_dir(project) / "palette.json",
            dumps_canonical(palette_to_json(palette)),
        )

    # -- graph -----------------------------------------------------------

    def load_graph(self, project: str, palette: Palette) -> KnowledgeGraph:
        path = self.project_dir(project) / "graph.json"
        if not path.exists():
            from ..graph import empty_graph

            return empty_graph(project, palette)
        try:
            return deserialize(path.read_text(encoding="utf-8"))
        except Exception as exc:
            raise StoreCorruptError(str(path), str(exc)) from None

    def save_graph(self, project: str, graph: KnowledgeGraph) -> None:
        atomic_write_text(self.project_dir(project) / "graph.json", serialize(graph))

    # -- definitions / markings / mapping ---------------------------------

    def load_definitions(self, project: str) -> list[dict[str, Any]]:
        raw = self._load_json(self.project_dir(project) / "definitions.json")
        return raw if raw is not None else []

    def save_definitions(self, project: str, definitions: list[dict[str, Any]]) -> None:
        atomic_write_text(
            self.project_dir(project) / "definitions.json", dumps_canonical(definitions)
        )

    def load_markings(self, project: str) -> list[dict[str, Any]]:
        raw = self._load_json(self.project_dir(project) / "markings.json")
        return raw if raw is not None else []

    def save_markings(self, project: str, markings: list[dict[str, Any]]) -> None:
        atomic_write_text(
            self.project_dir(project) / "markings.json", dumps_canonical(markings)
        )

    def load_mapping(self, project: str) -> dict[str, str]:
        raw = self._load_json(self.project_dir(project) / "mapping.json")
        return raw if raw is not None else {}

    def save_mapping(self, project: str, mapping: dict[str, str]) -> None:
        atomic_write_text(
            self.project_dir(project) / "mapping.json",
            dumps_canonical(dict(sorted(mapping.items()))),
        )

    # -- logs --------------------------------------------------------------

    def events_path(self, project: str) -> Path:
        return self.project_dir(project) / "events.jsonl"

    def detections_path(self, project: str) -> Path:
        return self.project_dir(project) / "project.detections.jsonl"

    def append_event(self, project: str, event_json: dict[str, Any]) -> None:
        append_jsonl(self.events_path(project), event_json)

    def append_detection(self, project: str, detection_json: dict[str, Any]) -> None:
        append_jsonl(self.detections_path(project), detection_json)

    def read_events(self, project: str) -> list[dict[str, Any]]:
        return list(read_jsonl(self.events_path(project)))

    def read_detections(self, project: str) -> list[dict[str, Any]]:
        return list(read_jsonl(self.detections_path(project)))

    def validate(self, project: str) -> None:
        """Recovery check: every store file must load cleanly."""
        palette = self.load_palette(project)
        self.load_graph(project, palette)
        self.load_definitions(project)
        self.load_markings(project)
        self.load_mapping(project)
        self.read_events(project)
        self.read_detections(project)
