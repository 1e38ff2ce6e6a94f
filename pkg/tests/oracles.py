"""Reference implementations and random-instance generators for the tests.

Everything here is deliberately naive: full enumeration instead of the
library's dynamic programming, direct definitions instead of precomputed
sets.  Agreement between these and the library is what the statistical and
query tests check, so nothing in this module may import the code paths it
is used to verify (the generators build plain values only).
"""

from __future__ import annotations

import itertools
import random

from ontonote.ontology import Concept, Ontology, parse_bracket, serialize_bracket
from ontonote.query import Criterion, Literal, Query


# ---------------------------------------------------------------------------
# Mann-Whitney by full enumeration.

def mw_u1(a: list[float], b: list[float]) -> float:
    # Pair counting straight from the definition; ties count one half.
    u = 0.0
    for x in a:
        for y in b:
            if x > y:
                u += 1.0
            elif x == y:
                u += 0.5
    return u


def mw_enumeration_p(a: list[float], b: list[float]) -> float:
    # Two-sided p over every relabeling of the pooled values.  All U values
    # are multiples of 0.5, exactly representable, so comparisons are exact.
    pooled = list(a) + list(b)
    n1 = len(a)
    observed = mw_u1(a, b)
    total = c_le = c_ge = 0
    indices = range(len(pooled))
    for chosen in itertools.combinations(indices, n1):
        chosen_set = set(chosen)
        ga = [pooled[i] for i in chosen]
        gb = [pooled[i] for i in indices if i not in chosen_set]
        u = mw_u1(ga, gb)
        total += 1
        if u <= observed:
            c_le += 1
        if u >= observed:
            c_ge += 1
    return min(1.0, 2.0 * min(c_le, c_ge) / total)


# ---------------------------------------------------------------------------
# Wilcoxon signed-rank by sign enumeration.

def wilcoxon_ranks(diffs: list[float]) -> tuple[float, list[float], list[float]]:
    """Return (W+, mid-ranks, nonzero diffs) with zeros dropped."""
    nz = [d for d in diffs if d != 0]
    m = len(nz)
    order = sorted(range(m), key=lambda i: abs(nz[i]))
    ranks = [0.0] * m
    i = 0
    while i < m:
        j = i
        while j + 1 < m and abs(nz[order[j + 1]]) == abs(nz[order[i]]):
            j += 1
        mid = (i + j + 2) / 2.0
        for k in range(i, j + 1):
            ranks[order[k]] = mid
        i = j + 1
    w_plus = sum(ranks[i] for i in range(m) if nz[i] > 0)
    return w_plus, ranks, nz


def wilcoxon_enumeration_p(diffs: list[float]) -> float:
    # Two-sided p over all 2^m assignments of signs to the observed ranks.
    w_obs, ranks, nz = wilcoxon_ranks(diffs)
    m = len(nz)
    total = c_le = c_ge = 0
    for signs in itertools.product((False, True), repeat=m):
        w = sum(r for positive, r in zip(signs, ranks) if positive)
        total += 1
        if w <= w_obs:
            c_le += 1
        if w >= w_obs:
            c_ge += 1
    return min(1.0, 2.0 * min(c_le, c_ge) / total)


# ---------------------------------------------------------------------------
# Random ontologies, classifications, and queries.

NAME_POOL = [
    "Narration", "Plot", "Setting", "Criticism", "Structure", "Tone",
    "Ironie", "Métaphore", "Socio-économique", "Présentation de l'œuvre",
    "Thème", "Rythme", "註釈", "σχήμα", "cadre [narratif]", "a,b",
    "star*name", 'quo"te', "semi;colon", "plus+minus-", "path/like",
    "  padded  ", "Üb ung", "x:y", "o_0",
]


def random_name(rng: random.Random) -> str:
    base = rng.choice(NAME_POOL)
    if rng.random() < 0.3:
        base = f"{base} {rng.randrange(1000)}"
    return base


def random_concept_tree(rng: random.Random, *, max_concepts: int = 30,
                        max_depth: int = 6, max_fanout: int = 8) -> Concept:
    """Grow a random tree of Concept values (ids in preorder)."""
    budget = rng.randint(1, max_concepts)
    counter = itertools.count(1)

    def grow(depth: int) -> Concept:
        nonlocal budget
        budget -= 1
        node = Concept(
            id=f"c{next(counter)}",
            name="?",
            children=[],
            extensible=rng.random() < 0.15,
        )
        if depth < max_depth and budget > 0:
            fanout = rng.randint(0, min(max_fanout, budget))
            for _ in range(fanout):
                if budget <= 0:
                    break
                node.children.append(grow(depth + 1))
        names_seen = set()
        for child in node.children:
            name = random_name(rng).strip()
            while not name or name in names_seen:
                name = (random_name(rng) + str(rng.randrange(10_000))).strip()
            names_seen.add(name)
            child.name = name
        return node

    root = grow(0)
    root.name = random_name(rng).strip() or "Root"
    return root


def random_ontology(rng: random.Random, *, max_concepts: int = 30) -> Ontology:
    """A parsed ontology (ids assigned by the library) for query tests."""
    tree = random_concept_tree(rng, max_concepts=max_concepts)
    text = serialize_bracket(Ontology(root=tree))
    return parse_bracket(text, ontology_id="rand", owner="prof")


def final_ids(o: Ontology) -> list[str]:
    return [c.id for c in iter_tree(o.root) if c.is_final]


def all_ids(o: Ontology) -> list[str]:
    return [c.id for c in iter_tree(o.root)]


def iter_tree(c: Concept):
    yield c
    for child in c.children:
        yield from iter_tree(child)


def random_classifications(rng: random.Random, o: Ontology,
                           max_annotations: int = 100) -> list[frozenset[str]]:
    finals = final_ids(o)
    if not finals:
        return []
    n = rng.randint(0, max_annotations)
    out = []
    for _ in range(n):
        k = rng.randint(1, min(4, len(finals)))
        out.append(frozenset(rng.sample(finals, k)))
    return out


def random_query(rng: random.Random, o: Ontology, *, max_criteria: int = 4,
                 max_literals: int = 5) -> Query:
    ids = all_ids(o)
    criteria = []
    for index in range(rng.randint(1, max_criteria)):
        literals = []
        seen = set()
        for _ in range(rng.randint(1, max_literals)):
            pair = (rng.random() < 0.6, rng.choice(ids))
            if pair in seen:
                continue
            seen.add(pair)
            literals.append(Literal(asserted=pair[0], concept=pair[1]))
        name = f"crit{index}" if rng.random() < 0.5 else ""
        criteria.append(Criterion(name=name, literals=literals))
    return Query(criteria=criteria)
