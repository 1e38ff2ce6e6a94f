"""Criterion queries over classified annotations.

A query is a disjunction of named criteria; a criterion is a conjunction of
signed concept literals.  A literal holds against a classification through
descendant expansion: an asserted concept requires at least one of its final
descendants in the classification, a denied concept requires none.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import ontology as onto
from .errors import ParseError, ValidationError
from .model import Annotation
from .ontology import Concept, Ontology


@dataclass(frozen=True)
class Literal:
    asserted: bool
    concept: str  # concept id


@dataclass
class Criterion:
    name: str  # may be empty (anonymous)
    literals: list[Literal] = field(default_factory=list)


@dataclass
class Query:
    criteria: list[Criterion] = field(default_factory=list)


@dataclass
class BasicFilter:
    """Concept picks from the tree view; shorthand for one all-asserted criterion."""

    concepts: list[str] = field(default_factory=list)


def validate_query(q: Query) -> None:
    if not q.criteria:
        raise ValidationError("query requires at least one criterion")
    names = [c.name for c in q.criteria if c.name]
    if len(set(names)) != len(names):
        raise ValidationError("criterion names must be unique")
    for criterion in q.criteria:
        if not criterion.literals:
            raise ValidationError("criterion requires at least one literal")
        seen = set()
        for lit in criterion.literals:
            key = (lit.asserted, lit.concept)
            if key in seen:
                raise ValidationError("duplicate literal in criterion")
            seen.add(key)


def basic_to_query(f: BasicFilter) -> Query:
    """One anonymous criterion asserting every picked concept."""
    if not f.concepts:
        raise ValidationError("basic filter requires at least one concept")
    deduped: list[str] = []
    for cid in f.concepts:
        if cid not in deduped:
            deduped.append(cid)
    return Query([Criterion(name="", literals=[Literal(True, c) for c in deduped])])


# --- evaluation ---------------------------------------------------------------


def literal_holds(lit: Literal, classification: frozenset[str], o: Ontology) -> bool:
    """Definitional check: expansion intersects (asserted) or avoids (denied)."""
    expansion = onto.final_descendants(o, lit.concept)
    hit = bool(expansion & classification)
    return hit if lit.asserted else not hit


def matches(q: Query, classification: frozenset[str], o: Ontology) -> bool:
    return any(
        all(literal_holds(lit, classification, o) for lit in criterion.literals)
        for criterion in q.criteria
    )


def filter_annotations(
    annotations: list[Annotation], q: Query, o: Ontology
) -> list[Annotation]:
    """Annotations matching the query, input order preserved."""
    expansions: dict[str, frozenset[str]] = {}
    for criterion in q.criteria:
        for lit in criterion.literals:
            if lit.concept not in expansions:
                expansions[lit.concept] = onto.final_descendants(o, lit.concept)
    out = []
    for a in annotations:
        for criterion in q.criteria:
            ok = True
            for lit in criterion.literals:
                hit = bool(expansions[lit.concept] & a.classification)
                if hit != lit.asserted:
                    ok = False
                    break
            if ok:
                out.append(a)
                break
    return out


def _collect_finals(c: Concept, out: set[str]) -> None:
    if not c.children and not c.extensible:
        out.add(c.id)
    for ch in c.children:
        _collect_finals(ch, out)


def brute_force_filter(
    annotations: list[Annotation], q: Query, o: Ontology
) -> list[Annotation]:
    """Reference evaluator: re-walks the tree per literal per annotation.

    Deliberately does no caching; used as the equivalence oracle for
    ``filter_annotations``.
    """

    def expansion(concept_id: str) -> set[str]:
        def find(c: Concept) -> Concept | None:
            if c.id == concept_id:
                return c
            for ch in c.children:
                hit = find(ch)
                if hit is not None:
                    return hit
            return None

        node = find(o.root)
        if node is None:
            raise onto.UnknownConcept(f"no concept with id {concept_id!r}")
        finals: set[str] = set()
        _collect_finals(node, finals)
        return finals

    out = []
    for a in annotations:
        for criterion in q.criteria:
            ok = True
            for lit in criterion.literals:
                hit = bool(expansion(lit.concept) & a.classification)
                if hit != lit.asserted:
                    ok = False
                    break
            if ok:
                out.append(a)
                break
    return out


# --- query text ---------------------------------------------------------------

_RESERVED = set('+-;:/",')


def _is_bare_char(ch: str) -> bool:
    return ch not in _RESERVED and not ch.isspace()


class _QueryScanner:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def fail(self, reason: str, pos: int | None = None) -> None:
        at = self.pos if pos is None else pos
        line = self.text.count("\n", 0, at) + 1
        column = at - (self.text.rfind("\n", 0, at) + 1) + 1
        raise ParseError(reason, line, column)

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def at_end(self) -> bool:
        return self.pos >= len(self.text)

    def read_name(self) -> str:
        self.skip_ws()
        start = self.pos
        if self.peek() == '"':
            self.pos += 1
            chars = []
            while True:
                if self.at_end():
                    self.fail("unterminated quoted name", start)
                ch = self.text[self.pos]
                if ch == '"':
                    if self.text[self.pos + 1 : self.pos + 2] == '"':
                        chars.append('"')
                        self.pos += 2
                        continue
                    self.pos += 1
                    break
                chars.append(ch)
                self.pos += 1
            name = "".join(chars).strip()
        else:
            chars = []
            while not self.at_end() and _is_bare_char(self.text[self.pos]):
                chars.append(self.text[self.pos])
                self.pos += 1
            name = "".join(chars)
        if not name:
            self.fail("expected a name", start)
        return name


def _read_path(scan: _QueryScanner) -> list[str]:
    components = [scan.read_name()]
    while scan.peek() == "/":
        scan.pos += 1
        components.append(scan.read_name())
    return components


def _parse_criterion(scan: _QueryScanner, o: Ontology) -> Criterion:
    scan.skip_ws()
    name = ""
    if scan.peek() not in ("+", "-"):
        name_start = scan.pos
        name = scan.read_name()
        scan.skip_ws()
        if scan.peek() != ":":
            scan.fail("expected ':' after criterion name", name_start)
        scan.pos += 1
    literals: list[Literal] = []
    seen: set[tuple[bool, str]] = set()
    while True:
        scan.skip_ws()
        sign = scan.peek()
        if sign not in ("+", "-"):
            break
        literal_start = scan.pos
        scan.pos += 1
        concept_id = onto.resolve_reference(o, _read_path(scan))
        lit = Literal(asserted=sign == "+", concept=concept_id)
        if (lit.asserted, lit.concept) in seen:
            scan.fail("duplicate literal in criterion", literal_start)
        seen.add((lit.asserted, lit.concept))
        literals.append(lit)
    if not literals:
        scan.fail("criterion requires at least one literal")
    return Criterion(name=name, literals=literals)


def parse_query(text: str, o: Ontology) -> Query:
    """Parse query text, resolving every concept path against the ontology."""
    scan = _QueryScanner(text)
    scan.skip_ws()
    if scan.at_end():
        scan.fail("empty query")
    criteria = [_parse_criterion(scan, o)]
    names: dict[str, int] = {}
    while True:
        scan.skip_ws()
        if scan.at_end():
            break
        if scan.peek() != ";":
            scan.fail("expected ';' between criteria")
        scan.pos += 1
        criteria.append(_parse_criterion(scan, o))
    for criterion in criteria:
        if criterion.name:
            names[criterion.name] = names.get(criterion.name, 0) + 1
            if names[criterion.name] > 1:
                raise ParseError(f"duplicate criterion name {criterion.name!r}", 1, 1)
    return Query(criteria)


def parse_concept_list(text: str, o: Ontology) -> list[str]:
    """Comma-separated concept paths (tree picks) resolved to ids."""
    scan = _QueryScanner(text)
    scan.skip_ws()
    if scan.at_end():
        scan.fail("empty concept list")
    ids = [onto.resolve_reference(o, _read_path(scan))]
    while True:
        scan.skip_ws()
        if scan.at_end():
            break
        if scan.peek() != ",":
            scan.fail("expected ',' between concepts")
        scan.pos += 1
        ids.append(onto.resolve_reference(o, _read_path(scan)))
    return ids


_QUOTE_FORCING = set('[],*+-;:/"') | {" ", "\t", "\n", "\r"}


def format_name(name: str) -> str:
    """Quote a name for query text when it contains reserved characters."""
    if any(ch in _QUOTE_FORCING or ch.isspace() for ch in name):
        return '"' + name.replace('"', '""') + '"'
    return name


def concept_path_text(o: Ontology, concept_id: str) -> str:
    return "/".join(format_name(n) for n in onto.path_components(o, concept_id))


def serialize_query(q: Query, o: Ontology) -> str:
    """Canonical text: full root paths, single spaces, '; ' separators."""
    validate_query(q)
    parts = []
    for criterion in q.criteria:
        body = " ".join(
            ("+" if lit.asserted else "-") + concept_path_text(o, lit.concept)
            for lit in criterion.literals
        )
        if criterion.name:
            parts.append(f"{format_name(criterion.name)}: {body}")
        else:
            parts.append(body)
    return "; ".join(parts)


def query_to_dict(q: Query, o: Ontology) -> dict:
    """Structured echo of a parsed query, including its canonical text."""
    return {
        "text": serialize_query(q, o),
        "criteria": [
            {
                "name": criterion.name,
                "literals": [
                    {
                        "sign": "+" if lit.asserted else "-",
                        "concept": lit.concept,
                        "path": concept_path_text(o, lit.concept),
                    }
                    for lit in criterion.literals
                ],
            }
            for criterion in q.criteria
        ],
    }
