"""Descriptive and nonparametric statistics over activity data.

Everything here is pure data-in/data-out: histograms, t-based confidence
intervals, rank-sum and signed-rank tests (exact where tractable, normal
approximation with tie and continuity corrections otherwise), per-student
concept coverage, and vocabulary-extension summaries.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

from . import ontology as onto
from .errors import (
    AllZeroDifferences,
    EmptyIntersection,
    EmptySample,
    NonpositiveWidth,
    ValidationError,
)
from .model import Annotation
from .ontology import Ontology

# Exact p-values are computed when the labeling count stays enumerable.
MW_EXACT_MAX_COMBINATIONS = 200_000
WILCOXON_EXACT_MAX_N = 25

METHOD_EXACT = "exact"
METHOD_NORMAL = "normal-approximation"


# --- histograms ----------------------------------------------------------------


@dataclass
class HistogramBin:
    lo: float
    hi: float
    count: int
    pct: float


@dataclass
class Histogram:
    width: float
    n: int
    bins: list[HistogramBin]


def histogram(samples: list[float], width: float = 10.0) -> Histogram:
    """Left-closed fixed-width bins [k*width, (k+1)*width); edge values go up.

    Interior empty bins are kept so bars line up across reports.
    """
    if not samples:
        raise EmptySample("histogram requires at least one sample")
    if width <= 0:
        raise NonpositiveWidth(f"bin width must be positive, got {width!r}")
    ks = [math.floor(x / width) for x in samples]
    counts = Counter(ks)
    n = len(samples)
    bins = [
        HistogramBin(
            lo=k * width,
            hi=(k + 1) * width,
            count=counts.get(k, 0),
            pct=100.0 * counts.get(k, 0) / n,
        )
        for k in range(min(ks), max(ks) + 1)
    ]
    return Histogram(width=width, n=n, bins=bins)


# --- confidence intervals --------------------------------------------------------


@dataclass
class MeanCI:
    n: int
    mean: float
    level: float
    stddev: float | None
    lo: float | None
    hi: float | None


def _t_quantile(p: float, df: int) -> float:
    from scipy.stats import t  # deferred: keeps non-statistical commands fast

    return float(t.ppf(p, df))


def mean_ci(samples: list[float], level: float = 0.95) -> MeanCI:
    """Mean with a two-sided Student-t interval; degenerate for n = 1."""
    n = len(samples)
    if n == 0:
        raise EmptySample("mean requires at least one sample")
    if not 0 < level < 1:
        raise ValidationError(f"confidence level must be in (0, 1), got {level!r}")
    mean = math.fsum(samples) / n
    if n == 1:
        return MeanCI(n=1, mean=mean, level=level, stddev=None, lo=None, hi=None)
    variance = math.fsum((x - mean) ** 2 for x in samples) / (n - 1)
    stddev = math.sqrt(variance)
    half = _t_quantile(1 - (1 - level) / 2, n - 1) * stddev / math.sqrt(n)
    return MeanCI(n=n, mean=mean, level=level, stddev=stddev, lo=mean - half, hi=mean + half)


# --- rank machinery ----------------------------------------------------------------


def _midranks(values: list[float]) -> list[float]:
    """Ascending 1-based ranks; tied runs share the average rank."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        shared = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = shared
        i = j + 1
    return ranks


def _tie_term(values: list[float]) -> int:
    """Sum of t^3 - t over tied groups."""
    return sum(t**3 - t for t in Counter(values).values())


def _two_sided_from_counts(c_le: int, c_ge: int, total: int) -> float:
    return min(1.0, (2 * min(c_le, c_ge)) / total)


def _normal_sf_two_sided(z: float) -> float:
    return min(1.0, math.erfc(abs(z) / math.sqrt(2)))


@dataclass
class TestResult:
    test: str
    statistics: dict[str, float]
    sample_sizes: dict[str, int]
    p_value: float
    method: str
    ties: bool
    z_value: float | None = None


# --- Mann-Whitney U -------------------------------------------------------------


def _mw_exact_two_sided(doubled: list[int], m: int, u_doubled: int) -> tuple[int, int, int]:
    """Tail counts of the doubled-U distribution for the size-m group.

    Counts size-m subsets of the doubled midranks by sum; U relates to a
    subset sum s by u = s - m(m+1).
    """
    max_sum = sum(sorted(doubled)[-m:])
    # ways[k][s]: subsets of size k with doubled-rank sum s
    ways = [[0] * (max_sum + 1) for _ in range(m + 1)]
    ways[0][0] = 1
    for r in doubled:
        for k in range(m, 0, -1):
            row, prev = ways[k], ways[k - 1]
            for s in range(max_sum, r - 1, -1):
                if prev[s - r]:
                    row[s] += prev[s - r]
    offset = m * (m + 1)
    c_le = c_ge = 0
    total = 0
    for s, count in enumerate(ways[m]):
        if not count:
            continue
        total += count
        u2 = s - offset
        if u2 <= u_doubled:
            c_le += count
        if u2 >= u_doubled:
            c_ge += count
    return c_le, c_ge, total


def mann_whitney_u(a: list[float], b: list[float], method: str = "auto") -> TestResult:
    """Two-sided Mann-Whitney U; U1 counts (a > b) pairs with ties as 1/2.

    Exact when C(n1+n2, n1) stays enumerable, otherwise a normal
    approximation with tie and continuity corrections.
    """
    n1, n2 = len(a), len(b)
    if n1 == 0 or n2 == 0:
        raise EmptySample("both samples must be non-empty")
    pooled = list(a) + list(b)
    ranks = _midranks(pooled)
    r1 = math.fsum(ranks[:n1])
    u1 = r1 - n1 * (n1 + 1) / 2
    u2 = n1 * n2 - u1
    ties = len(set(pooled)) < len(pooled)
    total = math.comb(n1 + n2, n1)
    if method == "auto":
        method = METHOD_EXACT if total <= MW_EXACT_MAX_COMBINATIONS else METHOD_NORMAL
    if method not in (METHOD_EXACT, METHOD_NORMAL):
        raise ValidationError(f"unknown method {method!r}")
    if method == METHOD_EXACT:
        doubled = [round(2 * r) for r in ranks]
        # count over the smaller group; two-sided tails are label-symmetric
        if n1 <= n2:
            m, u_small = n1, u1
        else:
            m, u_small = n2, u2
        c_le, c_ge, counted = _mw_exact_two_sided(doubled, m, round(2 * u_small))
        assert counted == math.comb(n1 + n2, m)
        p = _two_sided_from_counts(c_le, c_ge, counted)
        z = None
    else:
        n = n1 + n2
        mu = n1 * n2 / 2
        var = n1 * n2 / 12 * ((n + 1) - _tie_term(pooled) / (n * (n - 1)))
        if var <= 0:
            z = 0.0
            p = 1.0
        else:
            diff = u1 - mu
            shrunk = max(abs(diff) - 0.5, 0.0)  # continuity correction
            z = math.copysign(shrunk, diff) / math.sqrt(var) if diff else 0.0
            p = _normal_sf_two_sided(z)
    return TestResult(
        test="mann-whitney-u",
        statistics={"u1": u1, "u2": u2},
        sample_sizes={"n1": n1, "n2": n2},
        p_value=p,
        method=method,
        ties=ties,
        z_value=z,
    )


# --- Wilcoxon signed-rank ---------------------------------------------------------


def wilcoxon_signed_rank(diffs: list[float], method: str = "auto") -> TestResult:
    """Two-sided signed-rank test on paired differences; zeros are dropped.

    W+ sums the |d| midranks of positive differences.  Exact sign-assignment
    distribution up to WILCOXON_EXACT_MAX_N nonzero pairs, else normal
    approximation with tie and continuity corrections.
    """
    nonzero = [d for d in diffs if d != 0]
    zeros_dropped = len(diffs) - len(nonzero)
    if not nonzero:
        raise AllZeroDifferences("every paired difference is zero")
    m = len(nonzero)
    magnitudes = [abs(d) for d in nonzero]
    ranks = _midranks(magnitudes)
    w_plus = math.fsum(r for r, d in zip(ranks, nonzero) if d > 0)
    w_minus = m * (m + 1) / 2 - w_plus
    ties = len(set(magnitudes)) < len(magnitudes)
    if method == "auto":
        method = METHOD_EXACT if m <= WILCOXON_EXACT_MAX_N else METHOD_NORMAL
    if method not in (METHOD_EXACT, METHOD_NORMAL):
        raise ValidationError(f"unknown method {method!r}")
    if method == METHOD_EXACT:
        doubled = [round(2 * r) for r in ranks]
        # distribution of doubled W+ over all 2^m sign assignments
        dist = [1] + [0] * sum(doubled)
        for r in doubled:
            for s in range(len(dist) - 1, r - 1, -1):
                if dist[s - r]:
                    dist[s] += dist[s - r]
        w_doubled = round(2 * w_plus)
        c_le = sum(dist[: w_doubled + 1])
        c_ge = sum(dist[w_doubled:])
        p = _two_sided_from_counts(c_le, c_ge, 2**m)
        z = None
    else:
        mu = m * (m + 1) / 4
        var = m * (m + 1) * (2 * m + 1) / 24 - _tie_term(magnitudes) / 48
        if var <= 0:
            z = 0.0
            p = 1.0
        else:
            diff = w_plus - mu
            shrunk = max(abs(diff) - 0.5, 0.0)
            z = math.copysign(shrunk, diff) / math.sqrt(var) if diff else 0.0
            p = _normal_sf_two_sided(z)
    return TestResult(
        test="wilcoxon-signed-rank",
        statistics={"w_plus": w_plus, "w_minus": w_minus},
        sample_sizes={"m": m, "zeros_dropped": zeros_dropped},
        p_value=p,
        method=method,
        ties=ties,
        z_value=z,
    )


def paired_differences(before: dict[str, float], after: dict[str, float]) -> list[float]:
    """after - before over the keys present in both maps, key-sorted."""
    common = sorted(set(before) & set(after))
    if not common:
        raise EmptyIntersection("the maps share no keys")
    return [after[k] - before[k] for k in common]


# --- coverage and proposals ---------------------------------------------------------


@dataclass
class StudentCoverage:
    student: str
    used: list[str]
    unused: list[str]


@dataclass
class ConceptCount:
    concept: str
    name: str
    count: int


@dataclass
class CoverageReport:
    students: list[StudentCoverage]
    concepts: list[ConceptCount]


def coverage(
    snapshot: Ontology, annotations: list[Annotation], student_ids: list[str]
) -> CoverageReport:
    """Which final concepts each student used, and how often each was used."""
    finals = onto.final_ids(snapshot)
    final_set = set(finals)
    names = {c.id: c.name for c in onto.iter_concepts(snapshot)}
    used_by: dict[str, set[str]] = {sid: set() for sid in student_ids}
    counts: dict[str, int] = {fid: 0 for fid in finals}
    for a in annotations:
        tagged = a.classification & final_set
        for cid in tagged:
            counts[cid] += 1
        if a.author in used_by:
            used_by[a.author] |= tagged
    students = [
        StudentCoverage(
            student=sid,
            used=[f for f in finals if f in used_by[sid]],
            unused=[f for f in finals if f not in used_by[sid]],
        )
        for sid in sorted(student_ids)
    ]
    concepts = [ConceptCount(concept=f, name=names[f], count=counts[f]) for f in finals]
    return CoverageReport(students=students, concepts=concepts)


@dataclass
class ProposalEntry:
    concept: str
    name: str
    proposer: str
    proposed_at: str | None
    parent: str
    parent_name: str
    count: int


@dataclass
class ProposalReport:
    entries: list[ProposalEntry]
    annotations_using: int


def proposal_report(snapshot: Ontology, annotations: list[Annotation]) -> ProposalReport:
    """Student-proposed concepts with usage counts, in tree order."""
    entries: list[ProposalEntry] = []
    proposed: set[str] = set()

    def walk(c: onto.Concept, parent: onto.Concept | None) -> None:
        if c.proposed_by is not None and parent is not None:
            proposed.add(c.id)
            entries.append(
                ProposalEntry(
                    concept=c.id,
                    name=c.name,
                    proposer=c.proposed_by,
                    proposed_at=c.proposed_at,
                    parent=parent.id,
                    parent_name=parent.name,
                    count=0,
                )
            )
        for ch in c.children:
            walk(ch, c)

    walk(snapshot.root, None)
    by_id = {e.concept: e for e in entries}
    using = 0
    for a in annotations:
        hits = a.classification & proposed
        if hits:
            using += 1
            for cid in hits:
                by_id[cid].count += 1
    return ProposalReport(entries=entries, annotations_using=using)


# --- wire formats ---------------------------------------------------------------------


def round4(x: float) -> float:
    return round(x, 4)


def fmt4(x: float) -> str:
    return f"{x:.4f}"


def histogram_to_dict(h: Histogram) -> dict:
    return {
        "width": round4(h.width),
        "n": h.n,
        "bins": [
            {"lo": round4(b.lo), "hi": round4(b.hi), "count": b.count, "pct": round4(b.pct)}
            for b in h.bins
        ],
    }


def mean_ci_to_dict(ci: MeanCI) -> dict:
    out: dict = {"n": ci.n, "mean": round4(ci.mean), "level": ci.level}
    if ci.stddev is not None:
        out["stddev"] = round4(ci.stddev)
    if ci.lo is not None and ci.hi is not None:
        out["lo"] = round4(ci.lo)
        out["hi"] = round4(ci.hi)
    return out


def test_result_to_dict(r: TestResult) -> dict:
    out: dict = {
        "test": r.test,
        "statistics": {k: round4(v) for k, v in r.statistics.items()},
        "sample_sizes": dict(r.sample_sizes),
        "p_value": round4(r.p_value),
        "method": r.method,
        "ties": r.ties,
    }
    if r.z_value is not None:
        out["z_value"] = round4(r.z_value)
    return out


def coverage_to_dict(c: CoverageReport) -> dict:
    return {
        "students": [
            {"student": s.student, "used": s.used, "unused": s.unused} for s in c.students
        ],
        "concepts": [
            {"concept": e.concept, "name": e.name, "count": e.count} for e in c.concepts
        ],
    }


def proposal_report_to_dict(p: ProposalReport) -> dict:
    return {
        "entries": [
            {
                "concept": e.concept,
                "name": e.name,
                "proposer": e.proposer,
                "proposed_at": e.proposed_at,
                "parent": e.parent,
                "parent_name": e.parent_name,
                "count": e.count,
            }
            for e in p.entries
        ],
        "annotations_using": p.annotations_using,
    }
