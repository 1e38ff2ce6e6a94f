"""File-backed revisioned entity store with optimistic concurrency.

One JSON envelope per entity at ``<root>/<kind>/<id>.json``.  Writes land in
a temp file in the same directory and are renamed into place after fsync, so
readers only ever see complete documents; a per-entity flock serializes
read-modify-write cycles for compare-and-swap updates.
"""

from __future__ import annotations

import fcntl
import json
import os
import re
import uuid
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterator

from . import model, ontology as onto
from .errors import (
    Conflict,
    CorruptArchive,
    NotFound,
    OntoNoteError,
    StoreCorrupt,
    UnknownActivity,
    ValidationError,
)
from .model import Annotation, GradeRecord, User
from .ontology import utc_now_iso

KINDS = ("users", "groups", "documents", "ontologies", "activities", "annotations", "grades")

ARCHIVE_VERSION = 1

_ID_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]*$")


@dataclass
class Envelope:
    kind: str
    id: str
    revision: int
    updated: str
    payload: dict


def envelope_to_dict(e: Envelope) -> dict:
    return {
        "kind": e.kind,
        "id": e.id,
        "revision": e.revision,
        "updated": e.updated,
        "payload": e.payload,
    }


def envelope_from_dict(d: object) -> Envelope:
    if not isinstance(d, dict):
        raise ValidationError("envelope must be an object")
    kind, entity_id = d.get("kind"), d.get("id")
    revision, updated = d.get("revision"), d.get("updated")
    payload = d.get("payload")
    if kind not in KINDS:
        raise ValidationError(f"unknown kind {kind!r}")
    if not isinstance(entity_id, str) or not _ID_RE.match(entity_id):
        raise ValidationError(f"bad entity id {entity_id!r}")
    if not isinstance(revision, int) or revision < 0:
        raise ValidationError("revision must be a non-negative integer")
    if not isinstance(updated, str):
        raise ValidationError("updated must be a string")
    if not isinstance(payload, dict):
        raise ValidationError("payload must be an object")
    return Envelope(kind=kind, id=entity_id, revision=revision, updated=updated, payload=payload)


class Store:
    def __init__(self, root: str | Path, create: bool = True):
        self.root = Path(root)
        if create:
            self.root.mkdir(parents=True, exist_ok=True)
        elif not self.root.is_dir():
            raise NotFound(f"store root {self.root} does not exist")
        for kind in KINDS:
            (self.root / kind).mkdir(exist_ok=True)
        self._sweep_temp_files()
        self._validators: dict[str, Callable[[dict], object]] = {
            "users": model.user_from_dict,
            "groups": self._check_group,
            "documents": model.document_from_dict,
            "ontologies": onto.ontology_from_dict,
            "activities": model.activity_from_dict,
            "annotations": model.annotation_from_dict,
            "grades": model.grade_from_dict,
        }

    # --- paths and files -----------------------------------------------------

    def _dir(self, kind: str) -> Path:
        if kind not in KINDS:
            raise ValidationError(f"unknown kind {kind!r}")
        return self.root / kind

    def _path(self, kind: str, entity_id: str) -> Path:
        if not _ID_RE.match(entity_id):
            raise ValidationError(f"bad entity id {entity_id!r}")
        return self._dir(kind) / f"{entity_id}.json"

    def _sweep_temp_files(self) -> None:
        # interrupted writes leave temp files; final files are never torn
        for kind in KINDS:
            for leftover in (self.root / kind).glob(".*.tmp-*"):
                try:
                    leftover.unlink()
                except OSError:
                    pass

    @contextmanager
    def _entity_lock(self, kind: str, entity_id: str) -> Iterator[None]:
        lock_path = self._dir(kind) / f".{entity_id}.lock"
        fd = os.open(lock_path, os.O_CREAT | os.O_RDWR, 0o644)
        try:
            fcntl.flock(fd, fcntl.LOCK_EX)
            yield
        finally:
            fcntl.flock(fd, fcntl.LOCK_UN)
            os.close(fd)

    def _write_envelope(self, env: Envelope) -> None:
        final = self._path(env.kind, env.id)
        tmp = final.parent / f".{env.id}.json.tmp-{uuid.uuid4().hex[:8]}"
        data = json.dumps(envelope_to_dict(env), ensure_ascii=False, indent=2)
        fd = os.open(tmp, os.O_WRONLY | os.O_CREAT | os.O_EXCL, 0o644)
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as f:
                f.write(data)
                f.flush()
                os.fsync(f.fileno())
            os.replace(tmp, final)
        except BaseException:
            try:
                os.unlink(tmp)
            except OSError:
                pass
            raise
        dir_fd = os.open(final.parent, os.O_RDONLY)
        try:
            os.fsync(dir_fd)
        finally:
            os.close(dir_fd)

    def _read_envelope(self, kind: str, entity_id: str) -> Envelope:
        path = self._path(kind, entity_id)
        try:
            raw = path.read_text(encoding="utf-8")
        except FileNotFoundError:
            raise NotFound(f"{kind[:-1]} {entity_id!r} does not exist") from None
        try:
            return envelope_from_dict(json.loads(raw))
        except (json.JSONDecodeError, ValidationError) as exc:
            raise StoreCorrupt(f"{path} failed to parse: {exc}") from exc

    # --- validation ------------------------------------------------------------

    def _check_group(self, payload: dict) -> model.Group:
        group = model.group_from_dict(payload)
        for member in group.members:
            user = self.load_user(member)
            if user.role != "student":
                raise ValidationError(f"group member {member!r} is not a student")
        return group

    def _validate_payload(self, kind: str, payload: dict) -> None:
        if kind not in self._validators:
            raise ValidationError(f"unknown entity kind {kind!r}")
        if not isinstance(payload, dict):
            raise ValidationError("payload must be an object")
        self._validators[kind](payload)

    # --- CRUD --------------------------------------------------------------------

    def put_new(self, kind: str, payload: dict, *, entity_id: str | None = None) -> Envelope:
        """Create an entity at revision 0; fails if the id already exists."""
        entity_id = entity_id or payload.get("id") or model.new_id()
        self._validate_payload(kind, payload)
        with self._entity_lock(kind, entity_id):
            if self._path(kind, entity_id).exists():
                raise ValidationError(f"{kind[:-1]} {entity_id!r} already exists")
            env = Envelope(
                kind=kind, id=entity_id, revision=0, updated=utc_now_iso(), payload=payload
            )
            self._write_envelope(env)
        return env

    def get(self, kind: str, entity_id: str) -> Envelope:
        return self._read_envelope(kind, entity_id)

    def exists(self, kind: str, entity_id: str) -> bool:
        return self._path(kind, entity_id).exists()

    def cas_update(
        self, kind: str, entity_id: str, expected_revision: int, payload: dict
    ) -> Envelope:
        """Replace the payload iff the stored revision matches."""
        self._validate_payload(kind, payload)
        with self._entity_lock(kind, entity_id):
            current = self._read_envelope(kind, entity_id)
            if current.revision != expected_revision:
                raise Conflict(
                    f"expected revision {expected_revision}, found {current.revision}",
                    current_revision=current.revision,
                )
            env = Envelope(
                kind=kind,
                id=entity_id,
                revision=expected_revision + 1,
                updated=utc_now_iso(),
                payload=payload,
            )
            self._write_envelope(env)
        return env

    def list_ids(self, kind: str) -> list[str]:
        return sorted(p.stem for p in self._dir(kind).glob("*.json"))

    def list_envelopes(self, kind: str) -> list[Envelope]:
        return [self._read_envelope(kind, i) for i in self.list_ids(kind)]

    # --- edit logs -----------------------------------------------------------------

    def _log_path(self, ontology_id: str) -> Path:
        if not _ID_RE.match(ontology_id):
            raise ValidationError(f"bad ontology id {ontology_id!r}")
        return self.root / "ontologies" / f"{ontology_id}.log.jsonl"

    def append_edit_log(self, ontology_id: str, entry: dict) -> None:
        line = json.dumps(entry, ensure_ascii=False)
        fd = os.open(self._log_path(ontology_id), os.O_WRONLY | os.O_CREAT | os.O_APPEND, 0o644)
        try:
            os.write(fd, (line + "\n").encode("utf-8"))
            os.fsync(fd)
        finally:
            os.close(fd)

    def read_edit_log(self, ontology_id: str) -> list[dict]:
        path = self._log_path(ontology_id)
        if not path.exists():
            return []
        out = []
        for line in path.read_text(encoding="utf-8").splitlines():
            if line.strip():
                out.append(json.loads(line))
        return out

    # --- typed accessors --------------------------------------------------------------

    def load_user(self, user_id: str) -> User:
        return model.user_from_dict(self.get("users", user_id).payload)

    def load_group(self, group_id: str) -> model.Group:
        return model.group_from_dict(self.get("groups", group_id).payload)

    def load_document(self, document_id: str) -> model.Document:
        return model.document_from_dict(self.get("documents", document_id).payload)

    def load_ontology(self, ontology_id: str) -> onto.Ontology:
        return onto.ontology_from_dict(self.get("ontologies", ontology_id).payload)

    def load_activity(self, activity_id: str) -> tuple[Envelope, model.Activity]:
        try:
            env = self.get("activities", activity_id)
        except NotFound:
            raise UnknownActivity(f"no activity {activity_id!r}") from None
        return env, model.activity_from_dict(env.payload)

    def find_user_by_token(self, token: str) -> User | None:
        if not token:
            return None
        for env in self.list_envelopes("users"):
            user = model.user_from_dict(env.payload)
            if user.token == token:
                return user
        return None

    def annotations_for_activity(
        self, activity_id: str, author: str | None = None
    ) -> list[Annotation]:
        """Annotations of one activity in reading order."""
        self.load_activity(activity_id)
        out = []
        for env in self.list_envelopes("annotations"):
            a = model.annotation_from_dict(env.payload)
            if a.activity_id == activity_id and (author is None or a.author == author):
                out.append(a)
        out.sort(key=model.annotation_sort_key)
        return out

    def grades_for_activity(self, activity_id: str) -> list[GradeRecord]:
        out = []
        for env in self.list_envelopes("grades"):
            g = model.grade_from_dict(env.payload)
            if g.activity_id == activity_id:
                out.append(g)
        out.sort(key=lambda g: g.student_id)
        return out

    def usage_for_activity(self, activity_id: str) -> frozenset[str]:
        return model.classification_usage(self.annotations_for_activity(activity_id))

    # --- archives ------------------------------------------------------------------------

    def export_archive(self, activity_id: str) -> bytes:
        """Self-contained JSON archive of one activity and its satellites."""
        env, activity = self.load_activity(activity_id)
        doc_env = self.get("documents", activity.document_id)
        group_env = self.get("groups", activity.group_id)
        group = model.group_from_dict(group_env.payload)
        user_ids = list(group.members)
        if activity.owner not in user_ids:
            user_ids.append(activity.owner)
        user_envs = [self.get("users", uid) for uid in user_ids if self.exists("users", uid)]
        ann_envs = []
        order = {a.id: i for i, a in enumerate(self.annotations_for_activity(activity_id))}
        for ann_env in self.list_envelopes("annotations"):
            if ann_env.payload.get("activity_id") == activity_id:
                ann_envs.append(ann_env)
        ann_envs.sort(key=lambda e: order.get(e.id, len(order)))
        grade_envs = [
            e
            for e in self.list_envelopes("grades")
            if e.payload.get("activity_id") == activity_id
        ]
        grade_envs.sort(key=lambda e: e.payload.get("student_id", ""))
        archive = {
            "archive_version": ARCHIVE_VERSION,
            "activity": envelope_to_dict(env),
            "document": envelope_to_dict(doc_env),
            "group": envelope_to_dict(group_env),
            "users": [envelope_to_dict(e) for e in user_envs],
            "annotations": [envelope_to_dict(e) for e in ann_envs],
            "grades": [envelope_to_dict(e) for e in grade_envs],
        }
        return (json.dumps(archive, ensure_ascii=False, indent=2) + "\n").encode("utf-8")

    def import_archive(self, data: bytes) -> model.Activity:
        """Restore an exported archive into this store, ids and revisions intact."""
        try:
            obj = json.loads(data.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise CorruptArchive(f"archive failed to parse: {exc}") from exc
        if not isinstance(obj, dict) or obj.get("archive_version") != ARCHIVE_VERSION:
            raise CorruptArchive(
                f"expected archive_version {ARCHIVE_VERSION}, got "
                f"{obj.get('archive_version') if isinstance(obj, dict) else obj!r}"
            )
        # cross-checks run against the archive itself, not the target store
        structural: dict[str, Callable[[dict], object]] = {
            "users": model.user_from_dict,
            "groups": model.group_from_dict,
            "documents": model.document_from_dict,
            "activities": model.activity_from_dict,
            "annotations": model.annotation_from_dict,
            "grades": model.grade_from_dict,
        }
        expected_kind = {
            "activity": "activities",
            "document": "documents",
            "group": "groups",
            "users": "users",
            "annotations": "annotations",
            "grades": "grades",
        }
        try:
            singles = {key: envelope_from_dict(obj[key]) for key in ("activity", "document", "group")}
            lists = {
                key: [envelope_from_dict(raw) for raw in obj.get(key, [])]
                for key in ("users", "annotations", "grades")
            }
            ordered = (
                lists["users"]
                + [singles["group"], singles["document"], singles["activity"]]
                + lists["annotations"]
                + lists["grades"]
            )
            for key, env in list(singles.items()) + [
                (key, env) for key in ("users", "annotations", "grades") for env in lists[key]
            ]:
                if env.kind != expected_kind[key]:
                    raise ValidationError(f"{key} entry has kind {env.kind!r}")
            for env in ordered:
                structural[env.kind](env.payload)
            users_by_id = {env.id: model.user_from_dict(env.payload) for env in lists["users"]}
            group = model.group_from_dict(singles["group"].payload)
            for member in group.members:
                user = users_by_id.get(member)
                if user is None:
                    raise ValidationError(f"group member {member!r} missing from archive")
                if user.role != "student":
                    raise ValidationError(f"group member {member!r} is not a student")
        except KeyError as exc:
            raise CorruptArchive(f"archive is missing {exc}") from exc
        except OntoNoteError as exc:
            raise CorruptArchive(f"archive entity is invalid: {exc}") from exc
        for env in ordered:
            if self.exists(env.kind, env.id):
                raise ValidationError(f"{env.kind[:-1]} {env.id!r} already exists")
        for env in ordered:
            with self._entity_lock(env.kind, env.id):
                self._write_envelope(env)
        return model.activity_from_dict(singles["activity"].payload)
