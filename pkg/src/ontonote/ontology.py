"""Concept taxonomies: bracket notation, structural edits, and metrics.

A taxonomy is a single-rooted ordered tree of named concepts.  Leaves are
*final* and are the only concepts annotations may be classified with; any
concept with children is *intermediate*.  An intermediate may be flagged
*extensible* (spelled ``*`` in bracket notation), which keeps it intermediate
even while childless and lets students attach their own final concepts to it.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from datetime import datetime, timezone
from fractions import Fraction

from .errors import (
    AmbiguousConcept,
    CycleError,
    DeleteRoot,
    DuplicateSibling,
    InUseError,
    NotExtensible,
    ParseError,
    UnknownConcept,
    ValidationError,
)

VISIBILITIES = ("private", "public")


def utc_now_iso() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass
class Concept:
    """One node of a taxonomy.

    ``proposed_by`` is set only on student-proposed concepts; instructor
    concepts leave it None.
    """

    id: str
    name: str
    children: list["Concept"] = field(default_factory=list)
    extensible: bool = False
    proposed_by: str | None = None
    proposed_at: str | None = None

    @property
    def is_final(self) -> bool:
        return not self.children and not self.extensible

    @property
    def kind(self) -> str:
        return "final" if self.is_final else "intermediate"


@dataclass
class Ontology:
    """A concept tree plus ownership and revision bookkeeping.

    ``next_ordinal`` feeds fresh concept ids; it only grows, so ids are never
    reused even after deletions.
    """

    root: Concept
    id: str = ""
    owner: str = ""
    visibility: str = "private"
    revision: int = 0
    next_ordinal: int = 1


@dataclass
class OntologyMetrics:
    concepts: int
    intermediates: int
    finals: int
    depth: int
    avg_branching: Fraction | None


# --- edit operations ---------------------------------------------------------


@dataclass(frozen=True)
class Rename:
    target: str
    name: str


@dataclass(frozen=True)
class AddChild:
    parent: str
    name: str
    extensible: bool = False


@dataclass(frozen=True)
class Delete:
    target: str


@dataclass(frozen=True)
class Move:
    target: str
    parent: str
    position: int = 0


@dataclass(frozen=True)
class SetExtensible:
    target: str
    extensible: bool


EditOp = Rename | AddChild | Delete | Move | SetExtensible


# --- bracket notation --------------------------------------------------------

_BARE_STOP = set("[],*\n\r")
_QUOTE_FORCING = set('[],*\n\r')


class _Scanner:
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

    def read_name(self) -> tuple[str, int]:
        """Read a (possibly quoted) concept name; returns (name, start_pos)."""
        self.skip_ws()
        start = self.pos
        if self.peek() == '"':
            return self._read_quoted(), start
        chars = []
        while self.pos < len(self.text) and self.text[self.pos] not in _BARE_STOP:
            chars.append(self.text[self.pos])
            self.pos += 1
        name = "".join(chars).strip()
        if not name:
            self.fail("empty concept name", start)
        return name, start

    def _read_quoted(self) -> str:
        self.pos += 1
        chars = []
        while True:
            if self.pos >= len(self.text):
                self.fail("unterminated quoted name")
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
        if not name:
            self.fail("empty concept name")
        return name


def _parse_concept(scan: _Scanner) -> Concept:
    name, _ = scan.read_name()
    node = Concept(id="", name=name)
    scan.skip_ws()
    if scan.peek() == "*":
        scan.pos += 1
        node.extensible = True
        scan.skip_ws()
    if scan.peek() == "[":
        scan.pos += 1
        seen: set[str] = set()
        while True:
            scan.skip_ws()
            child_start = scan.pos
            child = _parse_concept(scan)
            if child.name in seen:
                scan.fail(f"duplicate sibling name {child.name!r}", child_start)
            seen.add(child.name)
            node.children.append(child)
            scan.skip_ws()
            ch = scan.peek()
            if ch == ",":
                scan.pos += 1
                continue
            if ch == "]":
                scan.pos += 1
                break
            if not ch:
                scan.fail("unbalanced bracket: expected ',' or ']'")
            scan.fail(f"expected ',' or ']', found {ch!r}")
    return node


def parse_bracket(
    text: str,
    *,
    ontology_id: str = "",
    owner: str = "",
    visibility: str = "private",
) -> Ontology:
    """Parse bracket notation into a fresh ontology at revision 0.

    Concept ids are assigned in document order (c1, c2, ...).
    """
    scan = _Scanner(text)
    scan.skip_ws()
    if scan.at_end():
        scan.fail("empty ontology text")
    root = _parse_concept(scan)
    scan.skip_ws()
    if not scan.at_end():
        scan.fail("trailing text after the root concept")
    counter = 0

    def assign(c: Concept) -> None:
        nonlocal counter
        counter += 1
        c.id = f"c{counter}"
        for ch in c.children:
            assign(ch)

    assign(root)
    if visibility not in VISIBILITIES:
        raise ValidationError(f"unknown visibility {visibility!r}")
    return Ontology(
        root=root,
        id=ontology_id,
        owner=owner,
        visibility=visibility,
        revision=0,
        next_ordinal=counter + 1,
    )


def _format_name(name: str) -> str:
    if name.startswith('"') or any(ch in _QUOTE_FORCING for ch in name):
        return '"' + name.replace('"', '""') + '"'
    return name


def serialize_bracket(subject: Ontology | Concept) -> str:
    """Canonical bracket text: no whitespace, quoting only when required."""
    root = subject.root if isinstance(subject, Ontology) else subject
    parts: list[str] = []

    def emit(c: Concept) -> None:
        parts.append(_format_name(c.name))
        if c.extensible:
            parts.append("*")
        if c.children:
            parts.append("[")
            for i, ch in enumerate(c.children):
                if i:
                    parts.append(",")
                emit(ch)
            parts.append("]")

    emit(root)
    return "".join(parts)


def structurally_equal(a: Concept, b: Concept) -> bool:
    """Equality of shape, names, and flags, ignoring ids and provenance."""
    if a.name != b.name or a.extensible != b.extensible:
        return False
    if len(a.children) != len(b.children):
        return False
    return all(structurally_equal(x, y) for x, y in zip(a.children, b.children))


# --- traversal helpers -------------------------------------------------------


def iter_concepts(o: Ontology) -> list[Concept]:
    """All concepts in document (preorder) order."""
    out: list[Concept] = []

    def walk(c: Concept) -> None:
        out.append(c)
        for ch in c.children:
            walk(ch)

    walk(o.root)
    return out


def _index(o: Ontology) -> dict[str, tuple[Concept, Concept | None]]:
    out: dict[str, tuple[Concept, Concept | None]] = {}

    def walk(c: Concept, parent: Concept | None) -> None:
        out[c.id] = (c, parent)
        for ch in c.children:
            walk(ch, c)

    walk(o.root, None)
    return out


def _lookup(o: Ontology, concept_id: str) -> tuple[Concept, Concept | None]:
    idx = _index(o)
    if concept_id not in idx:
        raise UnknownConcept(f"no concept with id {concept_id!r}")
    return idx[concept_id]


def get_concept(o: Ontology, concept_id: str) -> Concept:
    return _lookup(o, concept_id)[0]


def final_descendants(o: Ontology, concept_id: str) -> frozenset[str]:
    """Ids of all final concepts at or below the given concept.

    A final concept expands to itself; a childless extensible intermediate
    expands to the empty set.
    """
    c, _ = _lookup(o, concept_id)
    out: set[str] = set()

    def walk(n: Concept) -> None:
        if n.is_final:
            out.add(n.id)
        for ch in n.children:
            walk(ch)

    walk(c)
    return frozenset(out)


def final_ids(o: Ontology) -> list[str]:
    """Ids of all final concepts in document order."""
    return [c.id for c in iter_concepts(o) if c.is_final]


def path_components(o: Ontology, concept_id: str) -> list[str]:
    """Names from the root down to the concept, inclusive."""
    target, _ = _lookup(o, concept_id)

    def walk(c: Concept, trail: list[str]) -> list[str] | None:
        trail = trail + [c.name]
        if c.id == concept_id:
            return trail
        for ch in c.children:
            found = walk(ch, trail)
            if found:
                return found
        return None

    found = walk(o.root, [])
    assert found is not None
    return found


def find_named(o: Ontology, name: str) -> list[str]:
    """Ids of every concept with the given name, in document order."""
    return [c.id for c in iter_concepts(o) if c.name == name]


def resolve_reference(o: Ontology, components: list[str]) -> str:
    """Resolve a concept reference to an id.

    Longer references are root-relative paths whose first component names the
    root.  A single component naming the root is that degenerate path; any
    other single component is bare-name shorthand and must be unique.
    """
    if not components:
        raise UnknownConcept("empty concept reference")
    if len(components) == 1:
        if components[0] == o.root.name:
            return o.root.id
        matches = find_named(o, components[0])
        if not matches:
            raise UnknownConcept(f"no concept named {components[0]!r}")
        if len(matches) > 1:
            raise AmbiguousConcept(
                f"name {components[0]!r} matches {len(matches)} concepts; use a full path"
            )
        return matches[0]
    if components[0] != o.root.name:
        raise UnknownConcept(
            f"path must start at the root {o.root.name!r}, got {components[0]!r}"
        )
    cur = o.root
    for name in components[1:]:
        nxt = next((ch for ch in cur.children if ch.name == name), None)
        if nxt is None:
            raise UnknownConcept(f"no concept {name!r} under {cur.name!r}")
        cur = nxt
    return cur.id


# --- structural edits --------------------------------------------------------


def _fresh_id(o: Ontology, idx: dict) -> str:
    # defensive skip: stored trees may carry hand-written ids
    n = o.next_ordinal
    while f"c{n}" in idx:
        n += 1
    o.next_ordinal = n + 1
    return f"c{n}"


def _clean_name(name: str) -> str:
    name = name.strip()
    if not name:
        raise ValidationError("concept name is empty")
    return name


def _subtree_ids(c: Concept) -> set[str]:
    out = {c.id}
    for ch in c.children:
        out |= _subtree_ids(ch)
    return out


def apply_edit(o: Ontology, op: EditOp, usage: frozenset[str] = frozenset()) -> Ontology:
    """Apply one edit and return a new ontology at revision + 1.

    ``usage`` is the set of concept ids referenced by existing annotations;
    edits that would orphan or definalize a used concept fail and leave the
    input untouched.
    """
    new = copy.deepcopy(o)
    new.revision = o.revision + 1
    idx = _index(new)

    def lookup(cid: str) -> tuple[Concept, Concept | None]:
        if cid not in idx:
            raise UnknownConcept(f"no concept with id {cid!r}")
        return idx[cid]

    if isinstance(op, Rename):
        c, parent = lookup(op.target)
        name = _clean_name(op.name)
        siblings = parent.children if parent else []
        if any(s is not c and s.name == name for s in siblings):
            raise DuplicateSibling(f"sibling named {name!r} already exists")
        c.name = name
    elif isinstance(op, AddChild):
        parent, _ = lookup(op.parent)
        if parent.is_final and parent.id in usage:
            raise InUseError(
                f"{parent.name!r} is used by annotations and must stay final"
            )
        name = _clean_name(op.name)
        if any(s.name == name for s in parent.children):
            raise DuplicateSibling(f"sibling named {name!r} already exists")
        parent.children.append(
            Concept(id=_fresh_id(new, idx), name=name, extensible=op.extensible)
        )
    elif isinstance(op, Delete):
        c, parent = lookup(op.target)
        if parent is None:
            raise DeleteRoot("the root concept cannot be deleted")
        used = final_descendants(new, c.id) & usage
        if used:
            raise InUseError(
                f"cannot delete {c.name!r}: concepts in use: {sorted(used)}"
            )
        parent.children.remove(c)
    elif isinstance(op, Move):
        c, cur_parent = lookup(op.target)
        dest, _ = lookup(op.parent)
        if cur_parent is None:
            raise CycleError("the root concept cannot be moved")
        if dest.id in _subtree_ids(c):
            raise CycleError(
                f"cannot move {c.name!r} under its own descendant {dest.name!r}"
            )
        # a move can convert the destination from final to intermediate
        if dest.is_final and dest.id in usage:
            raise InUseError(
                f"{dest.name!r} is used by annotations and must stay final"
            )
        if any(s is not c and s.name == c.name for s in dest.children):
            raise DuplicateSibling(f"sibling named {c.name!r} already exists")
        cur_parent.children.remove(c)
        position = max(0, min(op.position, len(dest.children)))
        dest.children.insert(position, c)
    elif isinstance(op, SetExtensible):
        c, _ = lookup(op.target)
        if op.extensible and c.is_final and c.id in usage:
            raise InUseError(f"{c.name!r} is used by annotations and must stay final")
        c.extensible = op.extensible
    else:  # pragma: no cover
        raise ValidationError(f"unknown edit op {op!r}")
    return new


def propose_final(
    o: Ontology,
    parent_id: str,
    name: str,
    author: str,
    timestamp: str | None = None,
) -> Ontology:
    """Append a student-proposed final concept under an extensible parent."""
    new = copy.deepcopy(o)
    new.revision = o.revision + 1
    idx = _index(new)
    if parent_id not in idx:
        raise UnknownConcept(f"no concept with id {parent_id!r}")
    parent, _ = idx[parent_id]
    if not parent.extensible:
        raise NotExtensible(f"{parent.name!r} does not accept student proposals")
    name = _clean_name(name)
    if any(s.name == name for s in parent.children):
        raise DuplicateSibling(f"sibling named {name!r} already exists")
    parent.children.append(
        Concept(
            id=_fresh_id(new, idx),
            name=name,
            proposed_by=author,
            proposed_at=timestamp or utc_now_iso(),
        )
    )
    return new


def metrics(o: Ontology) -> OntologyMetrics:
    """Structural counts; branching is averaged over intermediates only."""
    concepts = iter_concepts(o)
    intermediates = [c for c in concepts if not c.is_final]
    finals = len(concepts) - len(intermediates)

    def depth_of(c: Concept) -> int:
        if not c.children:
            return 0
        return 1 + max(depth_of(ch) for ch in c.children)

    avg = None
    if intermediates:
        avg = Fraction(sum(len(c.children) for c in intermediates), len(intermediates))
    return OntologyMetrics(
        concepts=len(concepts),
        intermediates=len(intermediates),
        finals=finals,
        depth=depth_of(o.root),
        avg_branching=avg,
    )


# --- wire formats -------------------------------------------------------------


def concept_to_dict(c: Concept) -> dict:
    out: dict = {"id": c.id, "name": c.name, "extensible": c.extensible}
    if c.proposed_by is not None:
        out["proposed_by"] = c.proposed_by
        out["proposed_at"] = c.proposed_at
    out["children"] = [concept_to_dict(ch) for ch in c.children]
    return out


def ontology_to_dict(o: Ontology) -> dict:
    return {
        "id": o.id,
        "owner": o.owner,
        "visibility": o.visibility,
        "revision": o.revision,
        "next_ordinal": o.next_ordinal,
        "root": concept_to_dict(o.root),
    }


def _concept_from_dict(d: object, seen_ids: set[str]) -> Concept:
    if not isinstance(d, dict):
        raise ValidationError("concept must be an object")
    cid = d.get("id")
    name = d.get("name")
    if not isinstance(cid, str) or not cid:
        raise ValidationError("concept id must be a non-empty string")
    if cid in seen_ids:
        raise ValidationError(f"duplicate concept id {cid!r}")
    seen_ids.add(cid)
    if not isinstance(name, str) or not name.strip():
        raise ValidationError("concept name must be a non-empty string")
    if name != name.strip():
        raise ValidationError(f"concept name {name!r} has surrounding whitespace")
    extensible = d.get("extensible", False)
    if not isinstance(extensible, bool):
        raise ValidationError("extensible must be a boolean")
    proposed_by = d.get("proposed_by")
    proposed_at = d.get("proposed_at")
    if proposed_by is not None and not isinstance(proposed_by, str):
        raise ValidationError("proposed_by must be a string")
    if proposed_at is not None and not isinstance(proposed_at, str):
        raise ValidationError("proposed_at must be a string")
    children_raw = d.get("children", [])
    if not isinstance(children_raw, list):
        raise ValidationError("children must be a list")
    node = Concept(
        id=cid,
        name=name,
        extensible=extensible,
        proposed_by=proposed_by,
        proposed_at=proposed_at,
    )
    names: set[str] = set()
    for raw in children_raw:
        child = _concept_from_dict(raw, seen_ids)
        if child.name in names:
            raise ValidationError(f"duplicate sibling name {child.name!r}")
        names.add(child.name)
        node.children.append(child)
    return node


def ontology_from_dict(d: object) -> Ontology:
    if not isinstance(d, dict):
        raise ValidationError("ontology must be an object")
    if "root" not in d:
        raise ValidationError("ontology requires a root concept")
    seen: set[str] = set()
    root = _concept_from_dict(d["root"], seen)
    visibility = d.get("visibility", "private")
    if visibility not in VISIBILITIES:
        raise ValidationError(f"unknown visibility {visibility!r}")
    revision = d.get("revision", 0)
    if not isinstance(revision, int) or revision < 0:
        raise ValidationError("revision must be a non-negative integer")
    next_ordinal = d.get("next_ordinal")
    if next_ordinal is None:
        numeric = [int(i[1:]) for i in seen if i.startswith("c") and i[1:].isdigit()]
        next_ordinal = max(numeric, default=0) + 1
    if not isinstance(next_ordinal, int) or next_ordinal < 1:
        raise ValidationError("next_ordinal must be a positive integer")
    return Ontology(
        root=root,
        id=d.get("id", ""),
        owner=d.get("owner", ""),
        visibility=visibility,
        revision=revision,
        next_ordinal=next_ordinal,
    )


_OP_TAGS: dict[type, str] = {
    Rename: "rename",
    AddChild: "add_child",
    Delete: "delete",
    Move: "move",
    SetExtensible: "set_extensible",
}


def editop_to_dict(op: EditOp) -> dict:
    out: dict = {"op": _OP_TAGS[type(op)]}
    if isinstance(op, Rename):
        out.update(target=op.target, name=op.name)
    elif isinstance(op, AddChild):
        out.update(parent=op.parent, name=op.name, extensible=op.extensible)
    elif isinstance(op, Delete):
        out.update(target=op.target)
    elif isinstance(op, Move):
        out.update(target=op.target, parent=op.parent, position=op.position)
    elif isinstance(op, SetExtensible):
        out.update(target=op.target, extensible=op.extensible)
    return out


def editop_from_dict(d: object) -> EditOp:
    if not isinstance(d, dict):
        raise ValidationError("edit op must be an object")
    tag = d.get("op")

    def need(key: str, kind: type) -> object:
        value = d.get(key)
        if not isinstance(value, kind):
            raise ValidationError(f"edit op {tag!r} requires {key!r}")
        return value

    if tag == "rename":
        return Rename(target=need("target", str), name=need("name", str))
    if tag == "add_child":
        extensible = d.get("extensible", False)
        if not isinstance(extensible, bool):
            raise ValidationError("extensible must be a boolean")
        return AddChild(parent=need("parent", str), name=need("name", str), extensible=extensible)
    if tag == "delete":
        return Delete(target=need("target", str))
    if tag == "move":
        position = d.get("position", 0)
        if not isinstance(position, int):
            raise ValidationError("position must be an integer")
        return Move(target=need("target", str), parent=need("parent", str), position=position)
    if tag == "set_extensible":
        return SetExtensible(target=need("target", str), extensible=need("extensible", bool))
    raise ValidationError(f"unknown edit op {tag!r}")
