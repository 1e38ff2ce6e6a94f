"""Report documents assembled from store entities and statistics.

The CLI and the HTTP service both serve these dicts, so their JSON output
stays identical; CSV row builders live here too.
"""

from __future__ import annotations

from . import analytics as an
from .model import Annotation
from .store import Store


def per_student_counts(annotations: list[Annotation], student_ids: list[str]) -> dict[str, int]:
    """Annotation counts per group member, zero included, key-sorted."""
    counts = {sid: 0 for sid in sorted(student_ids)}
    for a in annotations:
        if a.author in counts:
            counts[a.author] += 1
    return counts


def activity_report(
    store: Store, activity_id: str, *, width: float = 10.0, level: float = 0.95
) -> dict:
    """Production report for one activity: counts, spread, coverage, proposals."""
    env, activity = store.load_activity(activity_id)
    group = store.load_group(activity.group_id)
    annotations = store.annotations_for_activity(activity_id)
    counts = per_student_counts(annotations, group.members)
    values = [float(v) for v in counts.values()]
    report: dict = {
        "activity_id": activity_id,
        "title": activity.title,
        "state": activity.state,
        "group_id": activity.group_id,
        "students": len(group.members),
        "annotations": len(annotations),
        "counts_per_student": counts,
    }
    if values:
        report["histogram"] = an.histogram_to_dict(an.histogram(values, width))
        report["mean_ci"] = an.mean_ci_to_dict(an.mean_ci(values, level))
    report["coverage"] = an.coverage_to_dict(
        an.coverage(activity.snapshot, annotations, group.members)
    )
    report["proposals"] = an.proposal_report_to_dict(
        an.proposal_report(activity.snapshot, annotations)
    )
    grades = store.grades_for_activity(activity_id)
    if grades:
        grade_values = [g.numeric for g in grades]
        report["grades"] = {
            "n": len(grades),
            "mean_ci": an.mean_ci_to_dict(an.mean_ci(grade_values, level)),
            "per_student": {g.student_id: an.round4(g.numeric) for g in grades},
        }
    return report


def compare_report(
    before: dict[str, float], after: dict[str, float], *, width: float = 10.0
) -> dict:
    """Two-cohort comparison: rank-sum on the raw samples, signed-rank on pairs."""
    a = [float(v) for v in before.values()]
    b = [float(v) for v in after.values()]
    diffs = an.paired_differences(before, after)
    out = {
        "n_before": len(a),
        "n_after": len(b),
        "pairs": len(diffs),
        "mann_whitney": an.test_result_to_dict(an.mann_whitney_u(a, b)),
        "wilcoxon": an.test_result_to_dict(an.wilcoxon_signed_rank(diffs)),
        "differences": {
            "mean_ci": an.mean_ci_to_dict(an.mean_ci(diffs)),
            "histogram": an.histogram_to_dict(an.histogram(diffs, width)),
        },
    }
    return out


# --- CSV rows -------------------------------------------------------------------


def histogram_rows(hist: dict) -> list[list[str]]:
    rows = [["bin_lo", "bin_hi", "count", "pct"]]
    for b in hist["bins"]:
        rows.append([an.fmt4(b["lo"]), an.fmt4(b["hi"]), str(b["count"]), an.fmt4(b["pct"])])
    return rows


def coverage_student_rows(cov: dict) -> list[list[str]]:
    rows = [["student", "used", "unused"]]
    for s in cov["students"]:
        rows.append([s["student"], " ".join(s["used"]), " ".join(s["unused"])])
    return rows


def coverage_concept_rows(cov: dict) -> list[list[str]]:
    rows = [["concept", "name", "count"]]
    for c in cov["concepts"]:
        rows.append([c["concept"], c["name"], str(c["count"])])
    return rows


def proposal_rows(props: dict) -> list[list[str]]:
    rows = [["concept", "name", "proposer", "parent", "parent_name", "count"]]
    for e in props["entries"]:
        rows.append(
            [e["concept"], e["name"], e["proposer"], e["parent"], e["parent_name"], str(e["count"])]
        )
    return rows


def counts_rows(counts: dict[str, int]) -> list[list[str]]:
    rows = [["student", "annotations"]]
    for sid, count in counts.items():
        rows.append([sid, str(count)])
    return rows


def differences_rows(before: dict[str, float], after: dict[str, float]) -> list[list[str]]:
    rows = [["key", "before", "after", "difference"]]
    for key in sorted(set(before) & set(after)):
        rows.append(
            [key, an.fmt4(before[key]), an.fmt4(after[key]), an.fmt4(after[key] - before[key])]
        )
    return rows
