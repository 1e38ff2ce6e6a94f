"""Shared fixtures: the reference taxonomy, a seeded store, a service client."""

from __future__ import annotations

import pytest
from fastapi.testclient import TestClient

from ontonote.demo import make_demo_store
from ontonote.ontology import parse_bracket
from ontonote.service import create_app

FIG1C = (
    "Analysis[Structure[Structure_type[Narration,Use_Of_frames],Plot,Setting],"
    "Criticism[Bibliographical,Psychological,Cultural]]"
)

PROF = {"Authorization": "Bearer tok-prof"}
S1 = {"Authorization": "Bearer tok-s1"}
S2 = {"Authorization": "Bearer tok-s2"}
S3 = {"Authorization": "Bearer tok-s3"}


@pytest.fixture
def fig1c():
    return parse_bracket(FIG1C, ontology_id="fig1c", owner="prof")


@pytest.fixture
def demo_root(tmp_path):
    root = tmp_path / "store"
    ids = make_demo_store(root)
    return root, ids


@pytest.fixture
def client(demo_root):
    root, ids = demo_root
    with TestClient(create_app(str(root))) as c:
        c.ids = ids
        yield c
