"""Complex-event definitions and their compilation to logic fragments.

A definition names the pattern, lists its constituents (each one a class
label or a palette concept, with a role and a minimum count), and bounds
the pattern in time (initiator-to-terminator window) and space (radius
around the initiator). ``compile_definition`` renders the canonical rule
text; concept matchers are expanded into ground class labels through the
class-to-concept map so the rules stay first-order-free.
"""

from __future__ import annotations

import hashlib
import itertools
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from .errors import InvalidDefinitionError, StoreCorruptError, UnmappedConceptError
from .graph import Palette, is_subconcept
from .jsonutil import atomic_write_text
from .logic import Comparison, Diff, Dist, EventAtom, Num, Rule, Var, parse, render

ROLES = ("initiator", "terminator", "supporting")
MATCHER_KINDS = ("class", "concept")

_IDENT_RE = re.compile(r"^[A-Za-z][A-Za-z0-9_]*$")

# Expansion guard: a definition whose concept matchers fan out into more
# ground-class combinations than this is rejected rather than compiled.
MAX_RULES = 64


@dataclass(frozen=True)
class ConstituentSpec:
    matcher: str
    role: str
    matcher_kind: str = "class"
    min_count: int = 1

    def to_json(self) -> dict[str, Any]:
        return {
            "matcher": self.matcher,
            "matcherKind": self.matcher_kind,
            "role": self.role,
            "minCount": self.min_count,
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "ConstituentSpec":
        return cls(
            matcher=data["matcher"],
            role=data["role"],
            matcher_kind=data.get("matcherKind", "class"),
            min_count=data.get("minCount", 1),
        )


@dataclass(frozen=True)
class ComplexEventDefinition:
    name: str
    constituents: tuple[ConstituentSpec, ...]
    window_seconds: float
    radius_meters: float
    enabled: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "constituents", tuple(self.constituents))

    def by_role(self, role: str) -> tuple[ConstituentSpec, ...]:
        return tuple(spec for spec in self.constituents if spec.role == role)

    def to_json(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "constituents": [spec.to_json() for spec in self.constituents],
            "windowSeconds": self.window_seconds,
            "radiusMeters": self.radius_meters,
            "enabled": self.enabled,
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "ComplexEventDefinition":
        return cls(
            name=data["name"],
            constituents=tuple(
                ConstituentSpec.from_json(item) for item in data.get("constituents", [])
            ),
            window_seconds=data["windowSeconds"],
            radius_meters=data["radiusMeters"],
            enabled=data.get("enabled", True),
        )


def validate(definition: ComplexEventDefinition) -> list[str]:
    """Return the violation list; empty means the definition is sound."""
    violations = []
    if not _IDENT_RE.match(definition.name or ""):
        violations.append("name: must be a letter followed by letters, digits or _")
    roles = [spec.role for spec in definition.constituents]
    if "initiator" not in roles:
        violations.append("constituents: missing initiator")
    if "terminator" not in roles:
        violations.append("constituents: missing terminator")
    for index, spec in enumerate(definition.constituents):
        where = f"constituents[{index}]"
        if spec.role not in ROLES:
            violations.append(f"{where}.role: unknown role {spec.role!r}")
        if spec.matcher_kind not in MATCHER_KINDS:
            violations.append(
                f"{where}.matcherKind: unknown kind {spec.matcher_kind!r}"
            )
        if not spec.matcher or not _IDENT_RE.match(spec.matcher):
            violations.append(f"{where}.matcher: must be a nonempty identifier")
        if not isinstance(spec.min_count, int) or spec.min_count < 1:
            violations.append(f"{where}.minCount: must be a positive integer")
    if not definition.window_seconds > 0:
        violations.append("windowSeconds: must be > 0")
    if not definition.radius_meters > 0:
        violations.append("radiusMeters: must be > 0")
    return violations


def matcher_classes(
    spec: ConstituentSpec,
    palette: Optional[Palette],
    class_mapping: Optional[dict[str, str]],
) -> list[str]:
    """Ground class labels a constituent can match, sorted."""
    if spec.matcher_kind == "class":
        return [spec.matcher]
    if palette is None or not class_mapping:
        raise UnmappedConceptError(spec.matcher)
    if spec.matcher not in palette.concepts:
        raise UnmappedConceptError(spec.matcher)
    labels = sorted(
        label
        for label, concept in class_mapping.items()
        if concept in palette.concepts and is_subconcept(palette, concept, spec.matcher)
    )
    if not labels:
        raise UnmappedConceptError(spec.matcher)
    return labels


def event_matches(
    spec: ConstituentSpec,
    class_label: str,
    palette: Optional[Palette] = None,
    class_mapping: Optional[dict[str, str]] = None,
) -> bool:
    """Does a raw class label satisfy this constituent's matcher?"""
    if spec.matcher_kind == "class":
        return class_label == spec.matcher
    if palette is None or not class_mapping:
        return False
    concept = class_mapping.get(class_label)
    if concept is None or concept not in palette.concepts:
        return False
    if spec.matcher not in palette.concepts:
        return False
    return is_subconcept(palette, concept, spec.matcher)


@dataclass(frozen=True)
class LogicFragment:
    """Canonical rule text plus its provenance and content hash."""

    text: str
    source_definition: str
    checksum: str = field(default="")

    def __post_init__(self) -> None:
        if not self.checksum:
            object.__setattr__(self, "checksum", checksum_of(self.text))


def checksum_of(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def canonical_order(
    definition: ComplexEventDefinition,
) -> list[ConstituentSpec]:
    """Initiators, then terminators, then supporting; stable within role."""
    return (
        list(definition.by_role("initiator"))
        + list(definition.by_role("terminator"))
        + list(definition.by_role("supporting"))
    )


def compile_definition(
    definition: ComplexEventDefinition,
    palette: Optional[Palette] = None,
    class_mapping: Optional[dict[str, str]] = None,
) -> LogicFragment:
    """Compile to the deterministic canonical rule set.

    One body atom per constituent slot (a spec with minCount m fills m
    slots, fresh variables each), temporal clauses anchored on the first
    initiator and first terminator slot, and a distance clause tying every
    non-initiator slot back to the initiator. Concept matchers multiply
    out into one rule per ground-class combination.
    """
    violations = validate(definition)
    if violations:
        raise InvalidDefinitionError(violations)

    ordered = canonical_order(definition)
    slot_classes: list[list[str]] = []
    for spec in ordered:
        classes = matcher_classes(spec, palette, class_mapping)
        slot_classes.extend([classes] * spec.min_count)

    total = 1
    for classes in slot_classes:
        total *= len(classes)
    if total > MAX_RULES:
        raise InvalidDefinitionError(
            [f"matcher expansion produces {total} rules (limit {MAX_RULES})"]
        )

    initiator_slots = sum(
        spec.min_count for spec in ordered if spec.role == "initiator"
    )
    terminator_index = initiator_slots + 1  # 1-based slot of the first terminator
    name = definition.name.lower()

    rules = []
    for combo in itertools.product(*slot_classes):
        atoms = tuple(
            EventAtom(label, f"T{slot}", f"L{slot}")
            for slot, label in enumerate(combo, start=1)
        )
        t_start = Var("T1")
        t_end = Var(f"T{terminator_index}")
        clauses: list[Comparison] = [
            Comparison(t_end, ">=", t_start),
            Comparison(Diff(t_end, t_start), "=<", Num(definition.window_seconds)),
        ]
        for slot in range(1, len(combo) + 1):
            if slot in (1, terminator_index):
                continue
            clauses.append(Comparison(t_start, "=<", Var(f"T{slot}")))
            clauses.append(Comparison(Var(f"T{slot}"), "=<", t_end))
        for slot in range(2, len(combo) + 1):
            clauses.append(
                Comparison(
                    Dist(Var("L1"), Var(f"L{slot}")),
                    "=<",
                    Num(definition.radius_meters),
                )
            )
        rules.append(
            Rule(name, t_start.name, t_end.name, atoms + tuple(clauses))
        )

    text = render(rules)
    return LogicFragment(text=text, source_definition=definition.name)


# --------------------------------------------------------------------------
# Fragment files
# --------------------------------------------------------------------------


def write_fragment(fragment: LogicFragment, path: Path) -> None:
    """Fragment file: comment header with source + checksum, one rule per line."""
    header = (
        f"% source: {fragment.source_definition}\n"
        f"% checksum: {fragment.checksum}\n"
    )
    atomic_write_text(path, header + fragment.text + "\n")


def read_fragment(path: Path) -> LogicFragment:
    source = ""
    checksum = ""
    rule_lines = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.startswith("% source:"):
            source = line.split(":", 1)[1].strip()
        elif line.startswith("% checksum:"):
            checksum = line.split(":", 1)[1].strip()
        elif line.strip() and not line.startswith("%"):
            rule_lines.append(line)
    text = "\n".join(rule_lines)
    if checksum and checksum != checksum_of(text):
        raise StoreCorruptError(str(path), "fragment checksum mismatch")
    parse(text)  # must be well-formed
    return LogicFragment(text=text, source_definition=source)
