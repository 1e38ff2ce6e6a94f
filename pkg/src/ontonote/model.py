"""Domain records for annotation activities.

Users, groups, documents (plain text or paged facsimile), anchors, rich
annotation content, classifications, activities with their ontology
snapshots, and grade records.
"""

from __future__ import annotations

import copy
import uuid
from dataclasses import dataclass, field
from html import escape
from html.parser import HTMLParser
from typing import Protocol
from urllib.parse import urlsplit

from . import ontology as onto
from .errors import (
    ActivityNotOpen,
    AnchorOutOfBounds,
    AuthorNotInGroup,
    EmptyClassification,
    NonFinalConcept,
    UnknownConcept,
    ValidationError,
)
from .ontology import Ontology, utc_now_iso

ROLES = ("instructor", "student")
ACTIVITY_STATES = ("draft", "open", "closed")
MEDIA_KINDS = ("image", "audio", "video")
URI_SCHEMES = ("http", "https")


def new_id() -> str:
    return uuid.uuid4().hex[:16]


# --- users and groups ---------------------------------------------------------


@dataclass
class User:
    id: str
    name: str
    role: str
    token: str | None = None


@dataclass
class Group:
    id: str
    name: str
    members: list[str] = field(default_factory=list)


# --- documents -----------------------------------------------------------------


@dataclass
class TextBody:
    text: str


@dataclass
class Page:
    width: int
    height: int
    image: str


@dataclass
class PagedBody:
    pages: list[Page]


@dataclass
class Document:
    id: str
    title: str
    body: TextBody | PagedBody
    source_kind: str = "local-upload"  # or "remote-ref"
    source_uri: str | None = None


def document_from_text(title: str, text: str, *, doc_id: str | None = None) -> Document:
    if not text:
        raise ValidationError("document text is empty")
    return Document(id=doc_id or new_id(), title=title or "Untitled", body=TextBody(text))


def document_from_manifest(manifest: object, *, doc_id: str | None = None) -> Document:
    if not isinstance(manifest, dict):
        raise ValidationError("document manifest must be an object")
    title = manifest.get("title", "Untitled")
    if not isinstance(title, str):
        raise ValidationError("title must be a string")
    pages_raw = manifest.get("pages")
    if not isinstance(pages_raw, list) or not pages_raw:
        raise ValidationError("manifest requires a non-empty pages list")
    pages = []
    for raw in pages_raw:
        if not isinstance(raw, dict):
            raise ValidationError("page must be an object")
        width, height = raw.get("width"), raw.get("height")
        image = raw.get("image", "")
        if not isinstance(width, int) or not isinstance(height, int) or width <= 0 or height <= 0:
            raise ValidationError("page width and height must be positive integers")
        if not isinstance(image, str):
            raise ValidationError("page image must be a string")
        pages.append(Page(width=width, height=height, image=image))
    return Document(id=doc_id or new_id(), title=title, body=PagedBody(pages))


class RemoteSource(Protocol):
    """Pluggable fetcher for documents referenced by URI."""

    def fetch(self, uri: str) -> Document: ...


class StubRemoteSource:
    """Stand-in remote fetcher: yields a placeholder instead of dereferencing."""

    def fetch(self, uri: str) -> Document:
        _check_uri(uri)
        doc = document_from_text(f"Remote document {uri}", f"[remote content of {uri}]")
        doc.source_kind = "remote-ref"
        doc.source_uri = uri
        return doc


def fetch_remote_document(uri: str, source: RemoteSource | None = None) -> Document:
    return (source or StubRemoteSource()).fetch(uri)


# --- anchors -------------------------------------------------------------------


@dataclass(frozen=True)
class TextSpan:
    """Half-open codepoint span [start, end) into a text body."""

    start: int
    end: int


@dataclass(frozen=True)
class PageRegion:
    """Rectangle on one page, in page-normalized [0, 1] coordinates."""

    page: int
    x: float
    y: float
    w: float
    h: float


Anchor = TextSpan | PageRegion


def check_anchor(document: Document, anchor: Anchor) -> None:
    body = document.body
    if isinstance(anchor, TextSpan):
        if not isinstance(body, TextBody):
            raise AnchorOutOfBounds("text span anchor on a non-text document")
        if not (0 <= anchor.start < anchor.end <= len(body.text)):
            raise AnchorOutOfBounds(
                f"span [{anchor.start}, {anchor.end}) outside document of length {len(body.text)}"
            )
    elif isinstance(anchor, PageRegion):
        if not isinstance(body, PagedBody):
            raise AnchorOutOfBounds("page region anchor on a non-paged document")
        if not (0 <= anchor.page < len(body.pages)):
            raise AnchorOutOfBounds(
                f"page {anchor.page} outside document of {len(body.pages)} pages"
            )
        if anchor.w <= 0 or anchor.h <= 0:
            raise AnchorOutOfBounds("region width and height must be positive")
        if anchor.x < 0 or anchor.y < 0 or anchor.x + anchor.w > 1 or anchor.y + anchor.h > 1:
            raise AnchorOutOfBounds("region exceeds the normalized page bounds")
    else:
        raise ValidationError(f"unknown anchor {anchor!r}")


# --- rich content --------------------------------------------------------------

_ALLOWED_TAGS = {"p", "br", "em", "strong", "ul", "ol", "li", "blockquote", "a", "img", "code", "span"}
_URI_ATTRS = {("a", "href"), ("img", "src")}
_TEXT_ATTRS = {("img", "alt")}
_VOID_TAGS = {"br", "img"}


def _safe_uri(uri: str) -> bool:
    try:
        return urlsplit(uri).scheme in URI_SCHEMES
    except ValueError:
        return False


def _check_uri(uri: str) -> None:
    if not isinstance(uri, str) or not _safe_uri(uri):
        raise ValidationError(f"URI must use one of {URI_SCHEMES}: {uri!r}")


class _Sanitizer(HTMLParser):
    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.out: list[str] = []
        self.open_tags: list[str] = []
        self._suppress = 0  # inside script/style: drop text too

    def handle_starttag(self, tag: str, attrs: list[tuple[str, str | None]]) -> None:
        if tag in ("script", "style"):
            self._suppress += 1
            return
        if tag not in _ALLOWED_TAGS:
            return
        kept = []
        for key, value in attrs:
            if value is None:
                continue
            if (tag, key) in _URI_ATTRS and _safe_uri(value):
                kept.append((key, value))
            elif (tag, key) in _TEXT_ATTRS:
                kept.append((key, value))
        rendered = "".join(f' {k}="{escape(v, quote=True)}"' for k, v in kept)
        if tag in _VOID_TAGS:
            self.out.append(f"<{tag}{rendered}/>")
        else:
            self.out.append(f"<{tag}{rendered}>")
            self.open_tags.append(tag)

    def handle_startendtag(self, tag: str, attrs: list[tuple[str, str | None]]) -> None:
        if tag in _VOID_TAGS:
            self.handle_starttag(tag, attrs)
        elif tag in _ALLOWED_TAGS:
            self.handle_starttag(tag, attrs)
            self.handle_endtag(tag)

    def handle_endtag(self, tag: str) -> None:
        if tag in ("script", "style"):
            if self._suppress:
                self._suppress -= 1
            return
        if tag not in _ALLOWED_TAGS or tag in _VOID_TAGS:
            return
        if tag in self.open_tags:
            # close intermediates left dangling by malformed input
            while self.open_tags:
                top = self.open_tags.pop()
                self.out.append(f"</{top}>")
                if top == tag:
                    break

    def handle_data(self, data: str) -> None:
        if not self._suppress:
            self.out.append(escape(data))

    def result(self) -> str:
        while self.open_tags:
            self.out.append(f"</{self.open_tags.pop()}>")
        return "".join(self.out)


def sanitize_html(html: str) -> str:
    """Reduce HTML to the allowed fragment vocabulary.

    Disallowed tags are dropped (keeping their text, except script/style);
    attributes other than a[href], img[src], img[alt] are dropped; href/src
    must be absolute http(s) URIs.
    """
    s = _Sanitizer()
    s.feed(html)
    s.close()
    return s.result()


@dataclass
class RichText:
    html: str


@dataclass
class MediaRef:
    kind: str
    uri: str


@dataclass
class Link:
    uri: str
    label: str


ContentBlock = RichText | MediaRef | Link


def clean_content(blocks: list[ContentBlock]) -> list[ContentBlock]:
    """Validate a content list and return it with rich text sanitized."""
    if not blocks:
        raise ValidationError("annotation content is empty")
    out: list[ContentBlock] = []
    for block in blocks:
        if isinstance(block, RichText):
            out.append(RichText(sanitize_html(block.html)))
        elif isinstance(block, MediaRef):
            if block.kind not in MEDIA_KINDS:
                raise ValidationError(f"unknown media kind {block.kind!r}")
            _check_uri(block.uri)
            out.append(block)
        elif isinstance(block, Link):
            _check_uri(block.uri)
            out.append(block)
        else:
            raise ValidationError(f"unknown content block {block!r}")
    return out


# --- classifications -----------------------------------------------------------


def check_classification(snapshot: Ontology, concept_ids: object) -> frozenset[str]:
    """Validate a classification against an ontology; returns the frozen set."""
    ids = list(concept_ids) if concept_ids is not None else []
    if not ids:
        raise EmptyClassification("classification requires at least one concept")
    idx = {c.id: c for c in onto.iter_concepts(snapshot)}
    for cid in ids:
        if not isinstance(cid, str) or cid not in idx:
            raise UnknownConcept(f"no concept with id {cid!r}")
        if not idx[cid].is_final:
            raise NonFinalConcept(
                f"{idx[cid].name!r} is intermediate; classify with final concepts only"
            )
    return frozenset(ids)


def classification_usage(annotations: list["Annotation"]) -> frozenset[str]:
    """Union of concept ids referenced by the given annotations."""
    out: set[str] = set()
    for a in annotations:
        out |= a.classification
    return frozenset(out)


# --- annotations -----------------------------------------------------------------


@dataclass
class Annotation:
    id: str
    activity_id: str
    author: str
    anchor: Anchor
    content: list[ContentBlock]
    classification: frozenset[str]
    created: str
    updated: str


def annotation_sort_key(a: Annotation) -> tuple:
    """Reading order: anchor position, then creation time, then id."""
    anchor = a.anchor
    if isinstance(anchor, TextSpan):
        pos: tuple = (anchor.start,)
    else:
        pos = (anchor.page, anchor.x, anchor.y, anchor.w, anchor.h)
    return (pos, a.created, a.id)


# --- activities ------------------------------------------------------------------


@dataclass
class Activity:
    id: str
    title: str
    document_id: str
    group_id: str
    owner: str
    state: str
    snapshot: Ontology
    group_visible: bool = True


def create_activity(
    title: str,
    document: Document,
    group: Group,
    source: Ontology,
    owner: str,
    *,
    activity_id: str | None = None,
    group_visible: bool = True,
) -> Activity:
    """Start a draft activity over a deep snapshot of the source ontology.

    The snapshot begins its own revision history at 0; later edits and
    student proposals touch only the snapshot, never the source.
    """
    if not title or not title.strip():
        raise ValidationError("activity title is empty")
    aid = activity_id or new_id()
    snapshot = copy.deepcopy(source)
    snapshot.id = f"{aid}-snapshot"
    snapshot.owner = owner
    snapshot.revision = 0
    return Activity(
        id=aid,
        title=title.strip(),
        document_id=document.id,
        group_id=group.id,
        owner=owner,
        state="draft",
        snapshot=snapshot,
        group_visible=group_visible,
    )


def set_state(activity: Activity, new_state: str, group: Group) -> Activity:
    """Advance the lifecycle: draft -> open -> closed."""
    if new_state not in ACTIVITY_STATES:
        raise ValidationError(f"unknown state {new_state!r}")
    allowed = {("draft", "open"), ("open", "closed")}
    if (activity.state, new_state) not in allowed:
        raise ValidationError(f"cannot go from {activity.state!r} to {new_state!r}")
    if new_state == "open" and not group.members:
        raise ValidationError("cannot open an activity for an empty group")
    out = copy.deepcopy(activity)
    out.state = new_state
    return out


def add_annotation(
    activity: Activity,
    document: Document,
    group: Group,
    author: str,
    anchor: Anchor,
    content: list[ContentBlock],
    classification: object,
    *,
    annotation_id: str | None = None,
    now: str | None = None,
) -> Annotation:
    """Validate and build a new annotation for an open activity."""
    if activity.state != "open":
        raise ActivityNotOpen(f"activity is {activity.state!r}")
    if author not in group.members:
        raise AuthorNotInGroup(f"{author!r} is not a member of group {group.id!r}")
    check_anchor(document, anchor)
    stamp = now or utc_now_iso()
    return Annotation(
        id=annotation_id or new_id(),
        activity_id=activity.id,
        author=author,
        anchor=anchor,
        content=clean_content(content),
        classification=check_classification(activity.snapshot, classification),
        created=stamp,
        updated=stamp,
    )


def validate_annotation(
    activity: Activity,
    document: Document,
    group: Group,
    annotation: Annotation,
) -> list[str]:
    """Violation codes for an existing annotation; empty when consistent."""
    out: list[str] = []
    if annotation.activity_id != activity.id:
        out.append("VALIDATION")
    if annotation.author not in group.members:
        out.append("AUTHOR_NOT_IN_GROUP")
    try:
        check_anchor(document, annotation.anchor)
    except AnchorOutOfBounds:
        out.append("ANCHOR_OUT_OF_BOUNDS")
    if not annotation.content:
        out.append("VALIDATION")
    try:
        check_classification(activity.snapshot, annotation.classification)
    except (EmptyClassification, UnknownConcept, NonFinalConcept) as exc:
        out.append(exc.code)
    return out


# --- grades ----------------------------------------------------------------------


@dataclass(frozen=True)
class LetterScale:
    """Descending numeric thresholds for letter grades."""

    thresholds: tuple[tuple[str, float], ...] = (
        ("A", 9.0),
        ("B", 7.0),
        ("C", 5.0),
        ("D", 3.0),
        ("E", float("-inf")),
    )

    def letter_for(self, numeric: float) -> str:
        for letter, lo in self.thresholds:
            if numeric >= lo:
                return letter
        return self.thresholds[-1][0]


DEFAULT_SCALE = LetterScale()


@dataclass
class GradeRecord:
    activity_id: str
    student_id: str
    numeric: float
    letter: str | None = None


def check_grade(grade: GradeRecord, scale: LetterScale = DEFAULT_SCALE) -> None:
    if not 0 <= grade.numeric <= 10:
        raise ValidationError(f"numeric grade {grade.numeric!r} outside [0, 10]")
    if grade.letter is not None and grade.letter != scale.letter_for(grade.numeric):
        raise ValidationError(
            f"letter {grade.letter!r} disagrees with scale for {grade.numeric!r}"
        )


# --- wire formats -----------------------------------------------------------------


def user_to_dict(u: User) -> dict:
    out: dict = {"id": u.id, "name": u.name, "role": u.role}
    if u.token is not None:
        out["token"] = u.token
    return out


def user_from_dict(d: object) -> User:
    if not isinstance(d, dict):
        raise ValidationError("user must be an object")
    uid, name, role = d.get("id"), d.get("name"), d.get("role")
    if not isinstance(uid, str) or not uid:
        raise ValidationError("user id must be a non-empty string")
    if not isinstance(name, str) or not name:
        raise ValidationError("user name must be a non-empty string")
    if role not in ROLES:
        raise ValidationError(f"unknown role {role!r}")
    token = d.get("token")
    if token is not None and not isinstance(token, str):
        raise ValidationError("token must be a string")
    return User(id=uid, name=name, role=role, token=token)


def group_to_dict(g: Group) -> dict:
    return {"id": g.id, "name": g.name, "members": list(g.members)}


def group_from_dict(d: object) -> Group:
    if not isinstance(d, dict):
        raise ValidationError("group must be an object")
    gid, name = d.get("id"), d.get("name")
    if not isinstance(gid, str) or not gid:
        raise ValidationError("group id must be a non-empty string")
    if not isinstance(name, str) or not name:
        raise ValidationError("group name must be a non-empty string")
    members = d.get("members", [])
    if not isinstance(members, list) or not all(isinstance(m, str) for m in members):
        raise ValidationError("members must be a list of user ids")
    if len(set(members)) != len(members):
        raise ValidationError("group members must be unique")
    return Group(id=gid, name=name, members=list(members))


def document_to_dict(doc: Document) -> dict:
    source: dict = {"kind": doc.source_kind}
    if doc.source_uri is not None:
        source["uri"] = doc.source_uri
    if isinstance(doc.body, TextBody):
        body: dict = {"type": "text", "text": doc.body.text}
    else:
        body = {
            "type": "paged",
            "pages": [
                {"width": p.width, "height": p.height, "image": p.image}
                for p in doc.body.pages
            ],
        }
    return {"id": doc.id, "title": doc.title, "source": source, "body": body}


def document_from_dict(d: object) -> Document:
    if not isinstance(d, dict):
        raise ValidationError("document must be an object")
    doc_id, title = d.get("id"), d.get("title")
    if not isinstance(doc_id, str) or not doc_id:
        raise ValidationError("document id must be a non-empty string")
    if not isinstance(title, str) or not title:
        raise ValidationError("document title must be a non-empty string")
    body_raw = d.get("body")
    if not isinstance(body_raw, dict):
        raise ValidationError("document body must be an object")
    if body_raw.get("type") == "text":
        text = body_raw.get("text")
        if not isinstance(text, str) or not text:
            raise ValidationError("text body must be a non-empty string")
        body: TextBody | PagedBody = TextBody(text)
    elif body_raw.get("type") == "paged":
        parsed = document_from_manifest(
            {"title": title, "pages": body_raw.get("pages")}, doc_id=doc_id
        )
        body = parsed.body
    else:
        raise ValidationError(f"unknown body type {body_raw.get('type')!r}")
    source = d.get("source", {"kind": "local-upload"})
    if not isinstance(source, dict) or source.get("kind") not in ("local-upload", "remote-ref"):
        raise ValidationError("unknown document source")
    return Document(
        id=doc_id,
        title=title,
        body=body,
        source_kind=source["kind"],
        source_uri=source.get("uri"),
    )


def anchor_to_dict(anchor: Anchor) -> dict:
    if isinstance(anchor, TextSpan):
        return {"type": "text_span", "start": anchor.start, "end": anchor.end}
    return {
        "type": "page_region",
        "page": anchor.page,
        "x": anchor.x,
        "y": anchor.y,
        "w": anchor.w,
        "h": anchor.h,
    }


def anchor_from_dict(d: object) -> Anchor:
    if not isinstance(d, dict):
        raise ValidationError("anchor must be an object")
    kind = d.get("type")
    if kind == "text_span":
        start, end = d.get("start"), d.get("end")
        if not isinstance(start, int) or not isinstance(end, int):
            raise ValidationError("text span start and end must be integers")
        return TextSpan(start=start, end=end)
    if kind == "page_region":
        page = d.get("page")
        if not isinstance(page, int):
            raise ValidationError("page must be an integer")
        coords = {}
        for key in ("x", "y", "w", "h"):
            value = d.get(key)
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ValidationError(f"region {key!r} must be a number")
            coords[key] = float(value)
        return PageRegion(page=page, **coords)
    raise ValidationError(f"unknown anchor type {kind!r}")


def content_block_to_dict(block: ContentBlock) -> dict:
    if isinstance(block, RichText):
        return {"type": "rich_text", "html": block.html}
    if isinstance(block, MediaRef):
        return {"type": "media", "kind": block.kind, "uri": block.uri}
    return {"type": "link", "uri": block.uri, "label": block.label}


def content_block_from_dict(d: object) -> ContentBlock:
    if not isinstance(d, dict):
        raise ValidationError("content block must be an object")
    kind = d.get("type")
    if kind == "rich_text":
        html = d.get("html")
        if not isinstance(html, str):
            raise ValidationError("rich text requires an html string")
        return RichText(html=html)
    if kind == "media":
        media_kind, uri = d.get("kind"), d.get("uri")
        if not isinstance(media_kind, str) or not isinstance(uri, str):
            raise ValidationError("media block requires kind and uri")
        return MediaRef(kind=media_kind, uri=uri)
    if kind == "link":
        uri, label = d.get("uri"), d.get("label", "")
        if not isinstance(uri, str) or not isinstance(label, str):
            raise ValidationError("link block requires uri and label")
        return Link(uri=uri, label=label)
    raise ValidationError(f"unknown content block type {kind!r}")


def annotation_to_dict(a: Annotation) -> dict:
    return {
        "id": a.id,
        "activity_id": a.activity_id,
        "author": a.author,
        "anchor": anchor_to_dict(a.anchor),
        "content": [content_block_to_dict(b) for b in a.content],
        "classification": sorted(a.classification),
        "created": a.created,
        "updated": a.updated,
    }


def annotation_from_dict(d: object) -> Annotation:
    if not isinstance(d, dict):
        raise ValidationError("annotation must be an object")
    for key in ("id", "activity_id", "author", "created", "updated"):
        if not isinstance(d.get(key), str) or not d[key]:
            raise ValidationError(f"annotation {key} must be a non-empty string")
    content_raw = d.get("content")
    if not isinstance(content_raw, list) or not content_raw:
        raise ValidationError("annotation content must be a non-empty list")
    classification_raw = d.get("classification")
    if not isinstance(classification_raw, list) or not classification_raw:
        raise ValidationError("annotation classification must be a non-empty list")
    if not all(isinstance(c, str) for c in classification_raw):
        raise ValidationError("classification entries must be concept ids")
    return Annotation(
        id=d["id"],
        activity_id=d["activity_id"],
        author=d["author"],
        anchor=anchor_from_dict(d.get("anchor")),
        content=[content_block_from_dict(b) for b in content_raw],
        classification=frozenset(classification_raw),
        created=d["created"],
        updated=d["updated"],
    )


def activity_to_dict(a: Activity) -> dict:
    return {
        "id": a.id,
        "title": a.title,
        "document_id": a.document_id,
        "group_id": a.group_id,
        "owner": a.owner,
        "state": a.state,
        "group_visible": a.group_visible,
        "snapshot": onto.ontology_to_dict(a.snapshot),
    }


def activity_from_dict(d: object) -> Activity:
    if not isinstance(d, dict):
        raise ValidationError("activity must be an object")
    for key in ("id", "title", "document_id", "group_id", "owner"):
        if not isinstance(d.get(key), str) or not d[key]:
            raise ValidationError(f"activity {key} must be a non-empty string")
    state = d.get("state")
    if state not in ACTIVITY_STATES:
        raise ValidationError(f"unknown state {state!r}")
    group_visible = d.get("group_visible", True)
    if not isinstance(group_visible, bool):
        raise ValidationError("group_visible must be a boolean")
    return Activity(
        id=d["id"],
        title=d["title"],
        document_id=d["document_id"],
        group_id=d["group_id"],
        owner=d["owner"],
        state=state,
        snapshot=onto.ontology_from_dict(d.get("snapshot")),
        group_visible=group_visible,
    )


def grade_to_dict(g: GradeRecord) -> dict:
    out: dict = {
        "activity_id": g.activity_id,
        "student_id": g.student_id,
        "numeric": g.numeric,
    }
    if g.letter is not None:
        out["letter"] = g.letter
    return out


def grade_from_dict(d: object) -> GradeRecord:
    if not isinstance(d, dict):
        raise ValidationError("grade must be an object")
    activity_id, student_id = d.get("activity_id"), d.get("student_id")
    if not isinstance(activity_id, str) or not isinstance(student_id, str):
        raise ValidationError("grade requires activity_id and student_id")
    numeric = d.get("numeric")
    if not isinstance(numeric, (int, float)) or isinstance(numeric, bool):
        raise ValidationError("numeric grade must be a number")
    letter = d.get("letter")
    if letter is not None and not isinstance(letter, str):
        raise ValidationError("letter grade must be a string")
    grade = GradeRecord(
        activity_id=activity_id,
        student_id=student_id,
        numeric=float(numeric),
        letter=letter,
    )
    check_grade(grade)
    return grade
