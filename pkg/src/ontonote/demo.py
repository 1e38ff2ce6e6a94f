"""Seed a small, fully deterministic demo store.

Used by the test suites (Python and frontend) and handy for trying the CLI
and the web UI against realistic data: one instructor, three students, a
literary-analysis taxonomy with an extensible branch, six classified
annotations, and grades.
"""

from __future__ import annotations

from pathlib import Path

from . import model, ontology as onto
from .store import Store

DEMO_BRACKET = (
    "Analysis[Structure[Structure_type[Narration,Use_Of_frames],Plot,Setting],"
    "Criticism[Bibliographical,Psychological,Cultural],Autre*]"
)

DEMO_TEXT = (
    "Premiere partie. La lettre ouvre le recit et fixe le cadre du roman.\n"
    "Le narrateur change de voix au fil des lettres et brouille la chronologie.\n"
    "Deuxieme partie. Les personnages commentent leurs propres manoeuvres.\n"
    "La correspondance devient un instrument du recit et de la critique.\n"
)

# (id, author, span, concept names, note)
_ANNOTATIONS = [
    ("a1", "s1", (0, 16), ["Narration", "Psychological"], "Ouverture du recit."),
    ("a2", "s1", (17, 68), ["Plot", "Cultural"], "Cadre et intrigue."),
    ("a3", "s2", (69, 143), ["Cultural", "Use_Of_frames"], "Jeu des cadres."),
    ("a4", "s2", (144, 160), ["Bibliographical"], "Reference d'edition."),
    ("a5", "s3", (161, 213), ["Narration", "Plot"], "Voix et action."),
    ("a6", "s3", (214, 281), ["Cultural", "Narration"], "Lecture d'epoque."),
]

_GRADES = [("s1", 8.5), ("s2", 6.0), ("s3", 9.25)]

_BASE_STAMP = "2026-08-01T10:{minute:02d}:00+00:00"


def make_demo_store(root: str | Path) -> dict[str, str]:
    """Build the demo store; returns the ids of the seeded entities."""
    store = Store(root)
    instructor = model.User(id="prof", name="P. Moreau", role="instructor", token="tok-prof")
    students = [
        model.User(id=f"s{i}", name=f"Student {i}", role="student", token=f"tok-s{i}")
        for i in (1, 2, 3)
    ]
    for user in [instructor] + students:
        store.put_new("users", model.user_to_dict(user), entity_id=user.id)
    group = model.Group(id="g1", name="Seminar group", members=[u.id for u in students])
    store.put_new("groups", model.group_to_dict(group), entity_id=group.id)
    document = model.document_from_text("Roman epistolaire", DEMO_TEXT, doc_id="doc1")
    store.put_new("documents", model.document_to_dict(document), entity_id=document.id)
    source = onto.parse_bracket(
        DEMO_BRACKET, ontology_id="ont1", owner=instructor.id, visibility="public"
    )
    store.put_new("ontologies", onto.ontology_to_dict(source), entity_id=source.id)
    activity = model.create_activity(
        "Lecture critique",
        document,
        group,
        source,
        instructor.id,
        activity_id="act1",
    )
    activity = model.set_state(activity, "open", group)
    store.put_new("activities", model.activity_to_dict(activity), entity_id=activity.id)
    names = {c.name: c.id for c in onto.iter_concepts(activity.snapshot)}
    for minute, (ann_id, author, (start, end), concepts, note) in enumerate(_ANNOTATIONS):
        annotation = model.add_annotation(
            activity,
            document,
            group,
            author,
            model.TextSpan(start, end),
            [model.RichText(f"<p>{note}</p>")],
            [names[c] for c in concepts],
            annotation_id=ann_id,
            now=_BASE_STAMP.format(minute=minute),
        )
        store.put_new("annotations", model.annotation_to_dict(annotation), entity_id=ann_id)
    for student_id, numeric in _GRADES:
        grade = model.GradeRecord(activity_id=activity.id, student_id=student_id, numeric=numeric)
        store.put_new(
            "grades", model.grade_to_dict(grade), entity_id=f"{activity.id}-{student_id}"
        )
    return {
        "instructor": instructor.id,
        "group": group.id,
        "document": document.id,
        "ontology": source.id,
        "activity": activity.id,
    }


if __name__ == "__main__":
    import json
    import sys

    print(json.dumps(make_demo_store(sys.argv[1])))
