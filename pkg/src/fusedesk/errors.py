"""Exception hierarchy shared by all fusedesk modules.

Every error carries enough structure (offending names, paths, values) for a
caller to render a precise message or map it onto an HTTP status.
"""

from __future__ import annotations


class FusedeskError(Exception):
    """Base class for all fusedesk errors."""


class UnknownConceptError(FusedeskError):
    def __init__(self, concept: str):
        self.concept = concept
        super().__init__(f"unknown concept: {concept!r}")


class UnknownRelationError(FusedeskError):
    def __init__(self, relation: str):
        self.relation = relation
        super().__init__(f"unknown relation: {relation!r}")


class DuplicateIdError(FusedeskError):
    def __init__(self, element_id: str):
        self.element_id = element_id
        super().__init__(f"duplicate id: {element_id!r}")


class SchemaViolationError(FusedeskError):
    """A node/edge/property violates the palette schema.

    ``offending`` names the key or relation that failed the check.
    """

    def __init__(self, message: str, offending: str):
        self.offending = offending
        super().__init__(message)


class DanglingEndpointError(FusedeskError):
    def __init__(self, edge_id: str, endpoint: str):
        self.edge_id = edge_id
        self.endpoint = endpoint
        super().__init__(f"edge {edge_id!r} references missing node {endpoint!r}")


class PaletteConflictError(FusedeskError):
    """Same-name concepts with different parents across two palettes."""

    def __init__(self, clashing: list[str]):
        self.clashing = sorted(clashing)
        super().__init__(f"palette conflict on concepts: {', '.join(self.clashing)}")


class GraphParseError(FusedeskError):
    """Malformed JSON; carries the source line/column."""

    def __init__(self, message: str, line: int, column: int):
        self.line = line
        self.column = column
        super().__init__(f"{message} (line {line}, column {column})")


class GraphSchemaError(FusedeskError):
    """Well-formed JSON that does not match the graph schema."""

    def __init__(self, message: str, path: str):
        self.path = path
        super().__init__(f"{message} at {path}")


class OutOfOrderTimestampError(FusedeskError):
    def __init__(self, feed_id: str, last: float, offered: float):
        self.feed_id = feed_id
        self.last = last
        self.offered = offered
        super().__init__(
            f"feed {feed_id!r}: timestamp {offered} is older than current clock {last}"
        )


class UnknownFeedError(FusedeskError):
    def __init__(self, feed_id: str):
        self.feed_id = feed_id
        super().__init__(f"unknown feed: {feed_id!r}")


class NoSuchMarkingError(FusedeskError):
    def __init__(self, feed_id: str, class_label: str, context: str):
        self.feed_id = feed_id
        self.class_label = class_label
        self.context = context
        super().__init__(
            f"no marking for ({feed_id!r}, {class_label!r}, {context!r})"
        )


class InvalidDefinitionError(FusedeskError):
    """Wraps the violation list produced by definition validation."""

    def __init__(self, violations: list[str]):
        self.violations = violations
        super().__init__("invalid definition: " + "; ".join(violations))


class UnmappedConceptError(FusedeskError):
    def __init__(self, concept: str):
        self.concept = concept
        super().__init__(f"unmapped concept: {concept!r}")


class FragmentSyntaxError(FusedeskError):
    """Rule-text syntax error with position and the expected-token set."""

    def __init__(self, message: str, line: int, column: int, expected: list[str]):
        self.line = line
        self.column = column
        self.expected = sorted(expected)
        super().__init__(
            f"{message} (line {line}, column {column}; expected one of: "
            f"{', '.join(self.expected)})"
        )


class TooManyFactsError(FusedeskError):
    def __init__(self, count: int, limit: int):
        self.count = count
        self.limit = limit
        super().__init__(f"{count} facts exceeds the exact-evaluation limit of {limit}")


class LogTooLargeError(FusedeskError):
    def __init__(self, count: int, limit: int):
        self.count = count
        self.limit = limit
        super().__init__(f"{count} events exceeds the brute-force limit of {limit}")


class VersionMismatchError(FusedeskError):
    def __init__(self, expected: str, found: str):
        self.expected = expected
        self.found = found
        super().__init__(f"snapshot version {found!r} does not match {expected!r}")


class UnknownEventError(FusedeskError):
    def __init__(self, event_id: str):
        self.event_id = event_id
        super().__init__(f"unknown event: {event_id!r}")


class DanglingConstituentError(FusedeskError):
    def __init__(self, event_id: str):
        self.event_id = event_id
        super().__init__(f"constituent event {event_id!r} is not in the log")


class InvalidScenarioError(FusedeskError):
    def __init__(self, violations: list[str]):
        self.violations = violations
        super().__init__("invalid scenario: " + "; ".join(violations))


class StoreCorruptError(FusedeskError):
    def __init__(self, path: str, reason: str):
        self.path = path
        self.reason = reason
        super().__init__(f"corrupt store file {path}: {reason}")
