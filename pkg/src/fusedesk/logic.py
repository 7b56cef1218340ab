"""Rule-text grammar and exact probabilistic evaluation.

The rule language is the smallest ProbLog-compatible subset needed for
spatio-temporal event patterns::

    rule       := head ':-' body '.'
    head       := 'complex_event' '(' name ',' var ',' var ')'
    body       := clause (',' clause)*
    clause     := 'simple_event' '(' name ',' var ',' var ')' | comparison
    comparison := expr ('>=' | '=<') expr
    expr       := var | number | var '-' var | 'dist' '(' var ',' var ')'

Whitespace is insignificant; ``%`` starts a comment that runs to the end
of the line. ``render`` produces the one canonical spelling, so
``render(parse(text)) == text`` for canonical text and
``parse(render(ast)) == ast`` always.

Probabilities follow the possible-worlds reading: each fact is an
independent Bernoulli, and the query probability is the total mass of
worlds in which some rule body can be grounded in the true facts.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .errors import FragmentSyntaxError, TooManyFactsError
from .jsonutil import fmt_number

MAX_EXACT_FACTS = 20


# --------------------------------------------------------------------------
# AST
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Diff:
    left: Var
    right: Var


@dataclass(frozen=True)
class Dist:
    left: Var
    right: Var


Expr = Union[Var, Num, Diff, Dist]


@dataclass(frozen=True)
class EventAtom:
    class_label: str
    time_var: str
    loc_var: str


@dataclass(frozen=True)
class Comparison:
    left: Expr
    op: str  # '>=' or '=<'
    right: Expr


Clause = Union[EventAtom, Comparison]


@dataclass(frozen=True)
class Rule:
    name: str
    start_var: str
    end_var: str
    body: tuple[Clause, ...]

    @property
    def atoms(self) -> tuple[EventAtom, ...]:
        return tuple(c for c in self.body if isinstance(c, EventAtom))

    @property
    def comparisons(self) -> tuple[Comparison, ...]:
        return tuple(c for c in self.body if isinstance(c, Comparison))


# --------------------------------------------------------------------------
# Rendering
# --------------------------------------------------------------------------


def _render_expr(expr: Expr) -> str:
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, Num):
        return fmt_number(expr.value)
    if isinstance(expr, Diff):
        return f"{expr.left.name} - {expr.right.name}"
    if isinstance(expr, Dist):
        return f"dist({expr.left.name}, {expr.right.name})"
    raise TypeError(f"not an expression: {expr!r}")


def _render_clause(clause: Clause) -> str:
    if isinstance(clause, EventAtom):
        return f"simple_event({clause.class_label}, {clause.time_var}, {clause.loc_var})"
    return f"{_render_expr(clause.left)} {clause.op} {_render_expr(clause.right)}"


def render_rule(rule: Rule) -> str:
    body = ", ".join(_render_clause(c) for c in rule.body)
    return f"complex_event({rule.name}, {rule.start_var}, {rule.end_var}) :- {body}."


def render(rules: Sequence[Rule]) -> str:
    """Canonical fragment text, one rule per line."""
    return "\n".join(render_rule(rule) for rule in rules)


# --------------------------------------------------------------------------
# Parsing
# --------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>%[^\n]*)
  | (?P<newline>\n)
  | (?P<number>\d+(?:\.\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<neck>:-)
  | (?P<geq>>=)
  | (?P<leq>=<)
  | (?P<sym>[(),.\-])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    line: int
    column: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    line, line_start = 1, 0
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            raise FragmentSyntaxError(
                f"unexpected character {text[pos]!r}",
                line,
                pos - line_start + 1,
                ["identifier", "number", "punctuation"],
            )
        kind = match.lastgroup or ""
        if kind == "newline":
            line += 1
            line_start = match.end()
        elif kind not in ("ws", "comment"):
            token_kind = {"sym": match.group(), "neck": ":-", "geq": ">=", "leq": "=<"}.get(
                kind, kind
            )
            tokens.append(
                _Token(token_kind, match.group(), line, match.start() - line_start + 1)
            )
        pos = match.end()
    tokens.append(_Token("eof", "", line, len(text) - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.index = 0

    @property
    def current(self) -> _Token:
        return self.tokens[self.index]

    def error(self, expected: list[str]) -> FragmentSyntaxError:
        token = self.current
        found = token.text or "end of input"
        return FragmentSyntaxError(
            f"unexpected {found!r}", token.line, token.column, expected
        )

    def expect(self, kind: str, description: Optional[str] = None) -> _Token:
        token = self.current
        if token.kind != kind:
            raise self.error([description or kind])
        self.index += 1
        return token

    def expect_ident(self, name: Optional[str] = None) -> str:
        token = self.current
        if token.kind != "ident" or (name is not None and token.text != name):
            raise self.error([name or "identifier"])
        self.index += 1
        return token.text

    def parse_fragment(self) -> tuple[Rule, ...]:
        rules = []
        while self.current.kind != "eof":
            rules.append(self.parse_rule())
        if not rules:
            raise self.error(["complex_event"])
        return tuple(rules)

    def parse_rule(self) -> Rule:
        self.expect_ident("complex_event")
        self.expect("(")
        name = self.expect_ident()
        self.expect(",")
        start_var = self.parse_var()
        self.expect(",")
        end_var = self.parse_var()
        self.expect(")")
        self.expect(":-")
        body = [self.parse_clause()]
        while self.current.kind == ",":
            self.index += 1
            body.append(self.parse_clause())
        self.expect(".", "'.'")
        return Rule(name, start_var.name, end_var.name, tuple(body))

    def parse_var(self) -> Var:
        token = self.current
        if token.kind != "ident" or not token.text[0].isupper():
            raise self.error(["variable"])
        self.index += 1
        return Var(token.text)

    def parse_clause(self) -> Clause:
        token = self.current
        if token.kind == "ident" and token.text == "simple_event":
            self.index += 1
            self.expect("(")
            label = self.expect_ident()
            self.expect(",")
            time_var = self.parse_var()
            self.expect(",")
            loc_var = self.parse_var()
            self.expect(")")
            return EventAtom(label, time_var.name, loc_var.name)
        left = self.parse_expr()
        op_token = self.current
        if op_token.kind not in (">=", "=<"):
            raise self.error(["'>='", "'=<'"])
        self.index += 1
        right = self.parse_expr()
        return Comparison(left, op_token.kind, right)

    def parse_expr(self) -> Expr:
        token = self.current
        if token.kind == "number":
            self.index += 1
            return Num(float(token.text))
        if token.kind == "ident" and token.text == "dist":
            self.index += 1
            self.expect("(")
            left = self.parse_var()
            self.expect(",")
            right = self.parse_var()
            self.expect(")")
            return Dist(left, right)
        if token.kind == "ident" and token.text[0].isupper():
            var = self.parse_var()
            if self.current.kind == "-":
                self.index += 1
                return Diff(var, self.parse_var())
            return var
        raise self.error(["variable", "number", "dist"])


def parse(text: str) -> tuple[Rule, ...]:
    """Parse fragment text into its rule set."""
    return _Parser(text).parse_fragment()


# --------------------------------------------------------------------------
# Exact evaluation
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ProbFact:
    """An independent probabilistic ground fact
    ``probability::simple_event(class, t, loc(x, y))``."""

    probability: float
    class_label: str
    timestamp: float
    location: tuple[float, float]

    def __post_init__(self) -> None:
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError(f"probability {self.probability} outside [0, 1]")
        object.__setattr__(
            self, "location", (float(self.location[0]), float(self.location[1]))
        )

    @property
    def atom(self) -> tuple[str, float, tuple[float, float]]:
        return (self.class_label, self.timestamp, self.location)


def _euclidean(a: tuple[float, float], b: tuple[float, float]) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def _eval_expr(expr: Expr, times: dict[str, float], locs: dict[str, tuple[float, float]]) -> float:
    if isinstance(expr, Num):
        return expr.value
    if isinstance(expr, Var):
        return times[expr.name]
    if isinstance(expr, Diff):
        return times[expr.left.name] - times[expr.right.name]
    if isinstance(expr, Dist):
        return _euclidean(locs[expr.left.name], locs[expr.right.name])
    raise TypeError(f"not an expression: {expr!r}")


def _comparison_holds(
    cmp: Comparison, times: dict[str, float], locs: dict[str, tuple[float, float]]
) -> bool:
    left = _eval_expr(cmp.left, times, locs)
    right = _eval_expr(cmp.right, times, locs)
    return left >= right if cmp.op == ">=" else left <= right


def _rule_witnesses(rule: Rule, facts: Sequence[ProbFact]) -> set[frozenset[int]]:
    """All fact subsets that ground the rule body (atoms may share facts)."""
    atoms = rule.atoms
    comparisons = rule.comparisons
    candidates = [
        [i for i, fact in enumerate(facts) if fact.class_label == atom.class_label]
        for atom in atoms
    ]
    witnesses: set[frozenset[int]] = set()

    def backtrack(
        position: int, times: dict[str, float], locs: dict[str, tuple[float, float]],
        used: tuple[int, ...],
    ) -> None:
        if position == len(atoms):
            if all(_comparison_holds(c, times, locs) for c in comparisons):
                witnesses.add(frozenset(used))
            return
        atom = atoms[position]
        for index in candidates[position]:
            fact = facts[index]
            times[atom.time_var] = fact.timestamp
            locs[atom.loc_var] = fact.location
            backtrack(position + 1, times, locs, used + (index,))
            del times[atom.time_var]
            del locs[atom.loc_var]

    backtrack(0, {}, {}, ())
    return witnesses


def derivable(rules: Iterable[Rule], facts: Sequence[ProbFact], query: str) -> bool:
    """Boolean derivability: can the query be grounded in these facts?"""
    return any(
        _rule_witnesses(rule, facts) for rule in rules if rule.name == query
    )


def evaluate_exact(
    fragment: Union[str, Sequence[Rule], "object"],
    facts: Sequence[ProbFact],
    query: str,
) -> float:
    """Query probability by enumerating all 2^n fact worlds.

    ``fragment`` may be canonical text, a parsed rule sequence, or any
    object with a ``text`` attribute holding canonical text.
    """
    if hasattr(fragment, "text"):
        rules: Sequence[Rule] = parse(fragment.text)  # type: ignore[union-attr]
    elif isinstance(fragment, str):
        rules = parse(fragment)
    else:
        rules = tuple(fragment)  # type: ignore[arg-type]

    count = len(facts)
    if count > MAX_EXACT_FACTS:
        raise TooManyFactsError(count, MAX_EXACT_FACTS)
    atoms = [fact.atom for fact in facts]
    if len(set(atoms)) != len(atoms):
        raise ValueError("facts must have distinct atoms")

    witnesses: set[frozenset[int]] = set()
    for rule in rules:
        if rule.name == query:
            witnesses |= _rule_witnesses(rule, facts)
    if not witnesses:
        return 0.0
    # Keep only minimal witnesses; supersets add no new worlds.
    minimal = [
        w for w in witnesses if not any(other < w for other in witnesses)
    ]
    if frozenset() in minimal:
        return 1.0

    worlds = np.arange(1 << count, dtype=np.uint32)
    covered = np.zeros(1 << count, dtype=bool)
    for witness in minimal:
        mask = np.uint32(sum(1 << i for i in witness))
        covered |= (worlds & mask) == mask
    weights = np.ones(1 << count, dtype=np.float64)
    for i, fact in enumerate(facts):
        bit = ((worlds >> np.uint32(i)) & np.uint32(1)).astype(bool)
        weights *= np.where(bit, fact.probability, 1.0 - fact.probability)
    return float(weights[covered].sum())
