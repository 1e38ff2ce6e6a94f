"""HTTP facade over the store.

Bearer tokens come from stored user records.  All JSON responses go through
the canonical encoder so CLI and HTTP output stay byte-identical, and every
domain error surfaces as its stable code.  POST/PATCH requests may carry an
X-Idempotency-Key; replays with the same key return the recorded response.
"""

from __future__ import annotations

import threading
from pathlib import Path

from fastapi import FastAPI, Request, Response

from . import model, ontology as onto, query as qmod, reports, wire
from .errors import (
    ActivityNotOpen,
    Conflict,
    Forbidden,
    InvalidOntology,
    NotFound,
    OntoNoteError,
    ParseError,
    Unauthorized,
    UnknownDocument,
    UnknownGroup,
    ValidationError,
    error_catalog,
)
from .store import Store

IDEMPOTENCY_HEADER = "x-idempotency-key"
EXPECTED_REVISION_HEADER = "expected-revision"


def _json_response(obj: object, status: int = 200) -> Response:
    return Response(
        content=wire.dump_bytes(obj), status_code=status, media_type="application/json"
    )


def create_app(root: str | Path) -> FastAPI:
    store = Store(root)
    app = FastAPI(title="ontonote", docs_url=None, redoc_url=None)
    idempotency_cache: dict[tuple[str, str, str], tuple[int, bytes]] = {}
    idempotency_lock = threading.Lock()
    app.state.store = store

    # --- plumbing -------------------------------------------------------------

    @app.exception_handler(OntoNoteError)
    async def _domain_error(request: Request, exc: OntoNoteError) -> Response:
        return _json_response(exc.payload(), exc.http_status)

    @app.middleware("http")
    async def _idempotency(request: Request, call_next):
        key = request.headers.get(IDEMPOTENCY_HEADER)
        if not key or request.method not in ("POST", "PATCH"):
            return await call_next(request)
        cache_key = (request.method, request.url.path, key)
        with idempotency_lock:
            hit = idempotency_cache.get(cache_key)
        if hit is not None:
            status, body = hit
            return Response(
                content=body,
                status_code=status,
                media_type="application/json",
                headers={"x-idempotent-replay": "true"},
            )
        response = await call_next(request)
        chunks = [chunk async for chunk in response.body_iterator]
        body = b"".join(chunks)
        if response.status_code < 500:
            with idempotency_lock:
                idempotency_cache[cache_key] = (response.status_code, body)
        return Response(
            content=body,
            status_code=response.status_code,
            media_type=response.headers.get("content-type"),
        )

    def current_user(request: Request) -> model.User:
        header = request.headers.get("authorization", "")
        if not header.startswith("Bearer "):
            raise Unauthorized("missing bearer token")
        user = store.find_user_by_token(header[len("Bearer ") :].strip())
        if user is None:
            raise Unauthorized("unknown token")
        return user

    def require_instructor(user: model.User) -> None:
        if user.role != "instructor":
            raise Forbidden("instructor role required")

    async def json_body(request: Request) -> dict:
        try:
            body = await request.json()
        except Exception:
            raise ValidationError("request body must be JSON") from None
        if not isinstance(body, dict):
            raise ValidationError("request body must be a JSON object")
        return body

    def activity_context(activity_id: str):
        env, activity = store.load_activity(activity_id)
        document = store.load_document(activity.document_id)
        group = store.load_group(activity.group_id)
        return env, activity, document, group

    def check_read_access(user: model.User, activity: model.Activity, group: model.Group) -> str | None:
        """Returns an author id the listing must be restricted to, or None."""
        if user.role == "instructor":
            return None
        if user.id not in group.members:
            raise Forbidden("not a member of the activity group")
        return None if activity.group_visible else user.id

    # --- meta ---------------------------------------------------------------------

    @app.get("/meta/errors")
    def meta_errors() -> Response:
        return _json_response({"errors": error_catalog()})

    # --- ontologies ------------------------------------------------------------------

    @app.post("/ontologies")
    async def post_ontology(request: Request) -> Response:
        user = current_user(request)
        require_instructor(user)
        visibility = request.query_params.get("visibility", "private")
        text = (await request.body()).decode("utf-8")
        ontology = onto.parse_bracket(
            text, ontology_id=model.new_id(), owner=user.id, visibility=visibility
        )
        env = store.put_new("ontologies", onto.ontology_to_dict(ontology), entity_id=ontology.id)
        return _json_response(
            {
                "id": ontology.id,
                "owner": ontology.owner,
                "visibility": ontology.visibility,
                "revision": env.revision,
                "bracket": onto.serialize_bracket(ontology),
            },
            201,
        )

    @app.get("/ontologies/{ident}")
    def get_ontology(ident: str, request: Request) -> Response:
        current_user(request)
        fmt = "json"
        if ident.endswith(".bracket"):
            ident, fmt = ident[: -len(".bracket")], "bracket"
        elif ident.endswith(".json"):
            ident = ident[: -len(".json")]
        ontology = store.load_ontology(ident)
        if fmt == "bracket":
            return Response(
                content=onto.serialize_bracket(ontology) + "\n",
                media_type="text/plain; charset=utf-8",
            )
        return _json_response(onto.ontology_to_dict(ontology))

    # --- documents ----------------------------------------------------------------------

    @app.post("/documents")
    async def post_document(request: Request) -> Response:
        user = current_user(request)
        require_instructor(user)
        content_type = request.headers.get("content-type", "")
        if content_type.startswith("application/json"):
            body = await json_body(request)
            if "pages" in body:
                document = model.document_from_manifest(body)
            else:
                title = body.get("title", "Untitled")
                text = body.get("text")
                if not isinstance(text, str):
                    raise ValidationError("JSON document requires pages or text")
                document = model.document_from_text(title, text)
        else:
            title = request.query_params.get("title", "Untitled")
            document = model.document_from_text(title, (await request.body()).decode("utf-8"))
        store.put_new("documents", model.document_to_dict(document), entity_id=document.id)
        return _json_response(model.document_to_dict(document), 201)

    @app.get("/documents/{document_id}")
    def get_document(document_id: str, request: Request) -> Response:
        current_user(request)
        return _json_response(model.document_to_dict(store.load_document(document_id)))

    # --- activities -----------------------------------------------------------------------

    @app.post("/activities")
    async def post_activity(request: Request) -> Response:
        user = current_user(request)
        require_instructor(user)
        body = await json_body(request)
        title = body.get("title", "")
        try:
            document = store.load_document(str(body.get("document_id")))
        except NotFound:
            raise UnknownDocument(f"no document {body.get('document_id')!r}") from None
        try:
            group = store.load_group(str(body.get("group_id")))
        except NotFound:
            raise UnknownGroup(f"no group {body.get('group_id')!r}") from None
        try:
            source = store.load_ontology(str(body.get("ontology_id")))
        except NotFound:
            raise InvalidOntology(f"no ontology {body.get('ontology_id')!r}") from None
        if source.visibility == "private" and source.owner != user.id:
            raise Forbidden("the source ontology is private to its owner")
        group_visible = body.get("group_visible", True)
        if not isinstance(group_visible, bool):
            raise ValidationError("group_visible must be a boolean")
        activity = model.create_activity(
            title, document, group, source, user.id, group_visible=group_visible
        )
        store.put_new("activities", model.activity_to_dict(activity), entity_id=activity.id)
        return _json_response(model.activity_to_dict(activity), 201)

    @app.get("/activities/{activity_id}")
    def get_activity(activity_id: str, request: Request) -> Response:
        user = current_user(request)
        _, activity, _, group = activity_context(activity_id)
        check_read_access(user, activity, group)
        return _json_response(model.activity_to_dict(activity))

    @app.post("/activities/{activity_id}/state")
    async def post_state(activity_id: str, request: Request) -> Response:
        user = current_user(request)
        require_instructor(user)
        body = await json_body(request)
        env, activity, _, group = activity_context(activity_id)
        updated = model.set_state(activity, str(body.get("state")), group)
        store.cas_update("activities", activity_id, env.revision, model.activity_to_dict(updated))
        return _json_response({"id": activity_id, "state": updated.state})

    @app.post("/activities/{activity_id}/ontology-ops")
    async def post_ontology_ops(activity_id: str, request: Request) -> Response:
        user = current_user(request)
        require_instructor(user)
        header = request.headers.get(EXPECTED_REVISION_HEADER)
        if header is None:
            raise ValidationError(f"{EXPECTED_REVISION_HEADER} header is required")
        try:
            expected = int(header)
        except ValueError:
            raise ValidationError(f"{EXPECTED_REVISION_HEADER} must be an integer") from None
        try:
            raw_ops = await request.json()
        except Exception:
            raise ValidationError("request body must be JSON") from None
        if not isinstance(raw_ops, list) or not raw_ops:
            raise ValidationError("request body must be a non-empty list of edit ops")
        ops = [onto.editop_from_dict(raw) for raw in raw_ops]
        env, activity, _, _ = activity_context(activity_id)
        if activity.snapshot.revision != expected:
            raise Conflict(
                f"expected snapshot revision {expected}, found {activity.snapshot.revision}",
                current_revision=activity.snapshot.revision,
            )
        usage = store.usage_for_activity(activity_id)
        snapshot = activity.snapshot
        for op in ops:
            snapshot = onto.apply_edit(snapshot, op, usage)
        activity.snapshot = snapshot
        store.cas_update("activities", activity_id, env.revision, model.activity_to_dict(activity))
        for op in ops:
            store.append_edit_log(
                snapshot.id,
                {"at": onto.utc_now_iso(), "author": user.id, **onto.editop_to_dict(op)},
            )
        return _json_response(
            {
                "id": activity_id,
                "snapshot_revision": snapshot.revision,
                "bracket": onto.serialize_bracket(snapshot),
            }
        )

    @app.post("/activities/{activity_id}/proposals")
    async def post_proposal(activity_id: str, request: Request) -> Response:
        user = current_user(request)
        body = await json_body(request)
        env, activity, _, group = activity_context(activity_id)
        if user.id not in group.members and user.id != activity.owner:
            raise Forbidden("proposals are open to group members and the owner")
        if activity.state != "open":
            raise ActivityNotOpen(f"activity is {activity.state!r}")
        parent_path = body.get("parent")
        name = body.get("name")
        if not isinstance(parent_path, str) or not isinstance(name, str):
            raise ValidationError("proposal requires parent and name strings")
        parent_id = onto.resolve_reference(
            activity.snapshot, _path_components_from_text(parent_path, activity.snapshot)
        )
        snapshot = onto.propose_final(activity.snapshot, parent_id, name, user.id)
        activity.snapshot = snapshot
        store.cas_update("activities", activity_id, env.revision, model.activity_to_dict(activity))
        new_concept = onto.get_concept(snapshot, _latest_child_id(snapshot, parent_id))
        store.append_edit_log(
            snapshot.id,
            {
                "at": onto.utc_now_iso(),
                "author": user.id,
                "op": "propose",
                "parent": parent_id,
                "name": new_concept.name,
                "concept": new_concept.id,
            },
        )
        return _json_response(
            {
                "id": activity_id,
                "snapshot_revision": snapshot.revision,
                "concept": {
                    "id": new_concept.id,
                    "name": new_concept.name,
                    "parent": parent_id,
                },
            },
            201,
        )

    # --- annotations ---------------------------------------------------------------------

    @app.post("/activities/{activity_id}/annotations")
    async def post_annotation(activity_id: str, request: Request) -> Response:
        user = current_user(request)
        body = await json_body(request)
        _, activity, document, group = activity_context(activity_id)
        anchor = model.anchor_from_dict(body.get("anchor"))
        content_raw = body.get("content")
        if not isinstance(content_raw, list):
            raise ValidationError("content must be a list of blocks")
        content = [model.content_block_from_dict(b) for b in content_raw]
        classification = body.get("classification")
        if classification is not None and not isinstance(classification, list):
            raise ValidationError("classification must be a list of concept ids")
        annotation = model.add_annotation(
            activity, document, group, user.id, anchor, content, classification
        )
        store.put_new(
            "annotations", model.annotation_to_dict(annotation), entity_id=annotation.id
        )
        return _json_response(model.annotation_to_dict(annotation), 201)

    @app.patch("/annotations/{annotation_id}")
    async def patch_annotation(annotation_id: str, request: Request) -> Response:
        user = current_user(request)
        body = await json_body(request)
        env = store.get("annotations", annotation_id)
        annotation = model.annotation_from_dict(env.payload)
        if annotation.author != user.id:
            raise Forbidden("only the author may edit an annotation")
        header = request.headers.get(EXPECTED_REVISION_HEADER)
        if header is not None and header != str(env.revision):
            raise Conflict(
                f"annotation is at revision {env.revision}, not {header}",
                current_revision=env.revision,
            )
        _, activity, document, group = activity_context(annotation.activity_id)
        if activity.state != "open":
            raise ActivityNotOpen(f"activity is {activity.state!r}")
        anchor = annotation.anchor
        if "anchor" in body:
            anchor = model.anchor_from_dict(body["anchor"])
            model.check_anchor(document, anchor)
        content = annotation.content
        if "content" in body:
            if not isinstance(body["content"], list):
                raise ValidationError("content must be a list of blocks")
            content = model.clean_content(
                [model.content_block_from_dict(b) for b in body["content"]]
            )
        classification = annotation.classification
        if "classification" in body:
            if not isinstance(body["classification"], list):
                raise ValidationError("classification must be a list of concept ids")
            classification = model.check_classification(
                activity.snapshot, body["classification"]
            )
        updated = model.Annotation(
            id=annotation.id,
            activity_id=annotation.activity_id,
            author=annotation.author,
            anchor=anchor,
            content=content,
            classification=classification,
            created=annotation.created,
            updated=onto.utc_now_iso(),
        )
        store.cas_update(
            "annotations", annotation_id, env.revision, model.annotation_to_dict(updated)
        )
        return _json_response(model.annotation_to_dict(updated))

    @app.get("/activities/{activity_id}/annotations")
    def get_annotations(activity_id: str, request: Request) -> Response:
        user = current_user(request)
        _, activity, _, group = activity_context(activity_id)
        forced_author = check_read_access(user, activity, group)
        params = request.query_params
        author = params.get("author") or None
        if forced_author is not None:
            author = forced_author
        q_text = params.get("q")
        concepts_text = params.get("concepts")
        if q_text is not None and concepts_text is not None:
            raise ValidationError("q and concepts are mutually exclusive")
        annotations = store.annotations_for_activity(activity_id, author=author)
        if q_text is not None:
            q = qmod.parse_query(q_text, activity.snapshot)
        elif concepts_text is not None:
            picks = qmod.parse_concept_list(concepts_text, activity.snapshot)
            q = qmod.basic_to_query(qmod.BasicFilter(picks))
        else:
            return _json_response(wire.listing_document(annotations))
        matched = qmod.filter_annotations(annotations, q, activity.snapshot)
        return _json_response(wire.query_result_document(q, activity.snapshot, matched))

    # --- reports ---------------------------------------------------------------------------

    @app.get("/activities/{activity_id}/report")
    def get_report(activity_id: str, request: Request) -> Response:
        user = current_user(request)
        require_instructor(user)
        width = _float_param(request, "width", 10.0)
        level = _float_param(request, "level", 0.95)
        return _json_response(
            reports.activity_report(store, activity_id, width=width, level=level)
        )

    @app.post("/reports/compare")
    async def post_compare(request: Request) -> Response:
        user = current_user(request)
        require_instructor(user)
        body = await json_body(request)
        before = _number_map(body.get("before"), "before")
        after = _number_map(body.get("after"), "after")
        width = body.get("width", 10.0)
        if not isinstance(width, (int, float)) or isinstance(width, bool):
            raise ValidationError("width must be a number")
        return _json_response(reports.compare_report(before, after, width=float(width)))

    # --- activity archives -------------------------------------------------------------------

    @app.get("/activities/{activity_id}/archive")
    def get_archive(activity_id: str, request: Request) -> Response:
        user = current_user(request)
        require_instructor(user)
        return Response(
            content=store.export_archive(activity_id), media_type="application/json"
        )

    return app


def _path_components_from_text(text: str, snapshot: onto.Ontology) -> list[str]:
    from .query import _QueryScanner, _read_path

    scan = _QueryScanner(text)
    scan.skip_ws()
    components = _read_path(scan)
    scan.skip_ws()
    if not scan.at_end():
        raise ParseError("trailing text after concept path", 1, scan.pos + 1)
    return components


def _latest_child_id(snapshot: onto.Ontology, parent_id: str) -> str:
    parent = onto.get_concept(snapshot, parent_id)
    return parent.children[-1].id


def _float_param(request: Request, name: str, default: float) -> float:
    raw = request.query_params.get(name)
    if raw is None:
        return default
    try:
        return float(raw)
    except ValueError:
        raise ValidationError(f"{name} must be a number") from None


def _number_map(raw: object, label: str) -> dict[str, float]:
    if not isinstance(raw, dict) or not raw:
        raise ValidationError(f"{label} must be a non-empty object of numbers")
    out = {}
    for key, value in raw.items():
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ValidationError(f"{label}[{key!r}] must be a number")
        out[str(key)] = float(value)
    return out
