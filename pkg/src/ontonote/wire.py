"""Canonical JSON encoding shared by the CLI and the HTTP service.

Both surfaces must emit byte-identical documents for the same request, so
they funnel through one encoder and one set of response builders.
"""

from __future__ import annotations

import json

from .model import Annotation, annotation_to_dict
from .ontology import Ontology
from .query import Query, query_to_dict


def dumps_canonical(obj: object) -> str:
    return json.dumps(obj, ensure_ascii=False, allow_nan=False, separators=(",", ":"))


def dump_bytes(obj: object) -> bytes:
    return dumps_canonical(obj).encode("utf-8")


def query_result_document(q: Query, snapshot: Ontology, annotations: list[Annotation]) -> dict:
    return {
        "query": query_to_dict(q, snapshot),
        "annotations": [annotation_to_dict(a) for a in annotations],
    }


def listing_document(annotations: list[Annotation]) -> dict:
    return {"annotations": [annotation_to_dict(a) for a in annotations]}
