"""Histograms, confidence intervals, rank tests, coverage, and proposals."""

from __future__ import annotations

import math
import random

import pytest

from oracles import mw_enumeration_p, mw_u1, wilcoxon_enumeration_p, wilcoxon_ranks
from ontonote.analytics import (
    METHOD_EXACT,
    METHOD_NORMAL,
    coverage,
    histogram,
    mann_whitney_u,
    mean_ci,
    paired_differences,
    proposal_report,
    wilcoxon_signed_rank,
)
from ontonote.errors import (
    AllZeroDifferences,
    EmptyIntersection,
    EmptySample,
    NonpositiveWidth,
)


class TestHistogram:
    def test_hand_binned_example(self):
        h = histogram([5, 12, 15, 19, 25], width=10)
        assert [(b.lo, b.hi, b.count) for b in h.bins] == [
            (0.0, 10.0, 1), (10.0, 20.0, 3), (20.0, 30.0, 1),
        ]
        assert [b.pct for b in h.bins] == [20.0, 60.0, 20.0]

    def test_edge_value_goes_up(self):
        h = histogram([10], width=10)
        assert [(b.lo, b.hi, b.count) for b in h.bins] == [(10.0, 20.0, 1)]

    def test_empty_interior_bins_included(self):
        h = histogram([5, 25], width=10)
        assert [(b.lo, b.count) for b in h.bins] == [(0.0, 1), (10.0, 0), (20.0, 1)]

    def test_negative_values(self):
        h = histogram([-5, 5], width=10)
        assert [(b.lo, b.hi, b.count) for b in h.bins] == [
            (-10.0, 0.0, 1), (0.0, 10.0, 1),
        ]

    def test_counts_sum_and_percentages(self):
        rng = random.Random(1)
        samples = [rng.uniform(-40, 90) for _ in range(137)]
        h = histogram(samples, width=7.5)
        assert sum(b.count for b in h.bins) == len(samples) == h.n
        assert math.isclose(sum(b.pct for b in h.bins), 100.0, abs_tol=1e-9)

    def test_permutation_invariant(self):
        rng = random.Random(2)
        samples = [rng.uniform(0, 50) for _ in range(40)]
        shuffled = samples[:]
        rng.shuffle(shuffled)
        a, b = histogram(samples), histogram(shuffled)
        assert [(x.lo, x.count) for x in a.bins] == [(x.lo, x.count) for x in b.bins]

    def test_errors(self):
        with pytest.raises(EmptySample):
            histogram([])
        with pytest.raises(NonpositiveWidth):
            histogram([1.0], width=0)
        with pytest.raises(NonpositiveWidth):
            histogram([1.0], width=-3)


class TestMeanCI:
    def test_closed_form_example(self):
        ci = mean_ci([10, 12, 14])
        assert ci.n == 3
        assert ci.mean == 12.0
        assert math.isclose(ci.stddev, 2.0, abs_tol=1e-12)
        # t(0.975, 2) = 4.3027: half-width 4.3027 * 2 / sqrt(3) = 4.9683.
        assert math.isclose(ci.lo, 7.03, abs_tol=0.01)
        assert math.isclose(ci.hi, 16.97, abs_tol=0.01)

    def test_zero_variance_degenerate_interval(self):
        ci = mean_ci([5, 5, 5])
        assert (ci.mean, ci.lo, ci.hi) == (5.0, 5.0, 5.0)

    def test_single_sample_has_no_interval(self):
        ci = mean_ci([42.0])
        assert ci.mean == 42.0
        assert ci.lo is None and ci.hi is None and ci.stddev is None

    def test_empty_rejected(self):
        with pytest.raises(EmptySample):
            mean_ci([])

    def test_interval_brackets_mean(self):
        rng = random.Random(3)
        for _ in range(100):
            n = rng.randint(2, 40)
            xs = [rng.gauss(50, 12) for _ in range(n)]
            ci = mean_ci(xs, level=rng.choice([0.8, 0.9, 0.95, 0.99]))
            assert ci.lo <= ci.mean <= ci.hi

    def test_aggregate_forced_means(self):
        rng = random.Random(4)
        # Any 26 values totalling 468 average exactly 18.
        xs = [1.0] * 26
        budget = 468 - 26
        while budget:
            step = min(budget, rng.randint(1, 40))
            xs[rng.randrange(26)] += step
            budget -= step
        assert mean_ci(xs).mean == 18.0
        # Any 27 values totalling 490 average 18.1481 to four places.
        ys = [1.0] * 27
        budget = 490 - 27
        while budget:
            step = min(budget, rng.randint(1, 40))
            ys[rng.randrange(27)] += step
            budget -= step
        assert math.isclose(mean_ci(ys).mean, 18.1481, abs_tol=1e-4)

    def test_half_width_shrinks_with_n(self):
        # Samples built so the sample standard deviation is exactly 1.
        widths = []
        for n in range(3, 101):
            a = math.sqrt((n - 1) / 2)
            xs = [0.0] * (n - 2) + [-a, a]
            ci = mean_ci(xs)
            widths.append(ci.hi - ci.lo)
        assert all(w1 > w2 for w1, w2 in zip(widths, widths[1:]))


class TestMannWhitney:
    def test_identical_samples(self):
        r = mann_whitney_u([1, 2], [1, 2])
        assert r.statistics["u1"] == 2.0
        assert r.p_value == 1.0
        assert r.ties

    def test_disjoint_samples(self):
        r = mann_whitney_u([1, 2, 3], [4, 5, 6])
        assert r.statistics["u1"] == 0.0
        assert r.p_value == 0.1
        assert r.method == METHOD_EXACT
        assert not r.ties

    def test_singletons(self):
        r = mann_whitney_u([5], [3])
        assert r.statistics["u1"] == 1.0
        assert r.p_value == 1.0

    def test_classical_table_n3(self):
        # Tie-free samples of size 3 each, U = 0..4, classical two-sided p.
        cases = {
            0: ([1, 2, 3], [4, 5, 6]),
            1: ([1, 2, 4], [3, 5, 6]),
            2: ([1, 2, 5], [3, 4, 6]),
            3: ([1, 3, 5], [2, 4, 6]),
            4: ([1, 4, 5], [2, 3, 6]),
        }
        expected = {0: 0.1, 1: 0.2, 2: 0.4, 3: 0.7, 4: 1.0}
        for u, (a, b) in cases.items():
            r = mann_whitney_u(a, b)
            assert r.statistics["u1"] == float(u)
            assert r.p_value == expected[u], u

    def test_u_sum_identity_random(self):
        rng = random.Random(5)
        for _ in range(300):
            n1, n2 = rng.randint(1, 12), rng.randint(1, 12)
            a = [rng.randint(0, 8) for _ in range(n1)]
            b = [rng.randint(0, 8) for _ in range(n2)]
            r = mann_whitney_u(a, b)
            assert r.statistics["u1"] + r.statistics["u2"] == n1 * n2

    def test_exchange_symmetry(self):
        rng = random.Random(6)
        for _ in range(100):
            a = [rng.randint(0, 20) for _ in range(rng.randint(1, 8))]
            b = [rng.randint(0, 20) for _ in range(rng.randint(1, 8))]
            r1, r2 = mann_whitney_u(a, b), mann_whitney_u(b, a)
            assert r1.statistics["u1"] == r2.statistics["u2"]
            assert r1.statistics["u2"] == r2.statistics["u1"]
            assert r1.p_value == r2.p_value

    def test_exact_agrees_with_enumeration_with_ties(self):
        rng = random.Random(7)
        for _ in range(150):
            a = [rng.randint(0, 5) for _ in range(rng.randint(1, 6))]
            b = [rng.randint(0, 5) for _ in range(rng.randint(1, 6))]
            r = mann_whitney_u(a, b)
            assert r.method == METHOD_EXACT
            assert r.p_value == mw_enumeration_p(a, b), (a, b)

    def test_exact_agrees_with_frozen_tied_example(self):
        r = mann_whitney_u([1, 3, 3, 7], [2, 3, 8, 9, 10])
        assert r.p_value == 0.2698412698412698

    def test_method_switches_above_threshold(self):
        # C(20,10) = 184756 stays exact; C(22,11) = 705432 does not.
        a10 = list(range(10))
        b10 = list(range(5, 15))
        assert mann_whitney_u(a10, b10).method == METHOD_EXACT
        a11 = list(range(11))
        b11 = list(range(5, 16))
        r = mann_whitney_u(a11, b11, method="auto")
        assert r.method == METHOD_NORMAL
        assert r.z_value is not None

    def test_forced_methods_agree_closely(self):
        rng = random.Random(8)
        for _ in range(60):
            pool = rng.sample(range(1000), 16)
            a, b = pool[:8], pool[8:]
            exact = mann_whitney_u(a, b, method=METHOD_EXACT)
            approx = mann_whitney_u(a, b, method=METHOD_NORMAL)
            assert exact.method == METHOD_EXACT
            assert approx.method == METHOD_NORMAL
            assert abs(exact.p_value - approx.p_value) <= 0.02

    def test_empty_rejected(self):
        with pytest.raises(EmptySample):
            mann_whitney_u([], [1])
        with pytest.raises(EmptySample):
            mann_whitney_u([1], [])

    def test_p_in_unit_interval(self):
        rng = random.Random(9)
        for _ in range(200):
            a = [rng.gauss(0, 1) for _ in range(rng.randint(1, 10))]
            b = [rng.gauss(0.5, 1) for _ in range(rng.randint(1, 10))]
            assert 0.0 <= mann_whitney_u(a, b).p_value <= 1.0


class TestWilcoxon:
    def test_all_positive(self):
        r = wilcoxon_signed_rank([1, 2, 3])
        assert r.statistics["w_plus"] == 6.0
        assert r.p_value == 0.25
        assert r.method == METHOD_EXACT

    def test_mixed_signs(self):
        r = wilcoxon_signed_rank([1, -2, 3])
        assert r.statistics["w_plus"] == 4.0
        assert r.p_value == 0.75

    def test_zeros_dropped(self):
        r = wilcoxon_signed_rank([0, 1, 0, -2, 3, 0])
        assert r.sample_sizes["m"] == 3
        assert r.p_value == wilcoxon_signed_rank([1, -2, 3]).p_value

    def test_all_zero_rejected(self):
        with pytest.raises(AllZeroDifferences):
            wilcoxon_signed_rank([0, 0, 0])
        with pytest.raises(AllZeroDifferences):
            wilcoxon_signed_rank([])

    def test_w_plus_range_and_complement(self):
        rng = random.Random(10)
        for _ in range(200):
            m = rng.randint(1, 12)
            diffs = [rng.choice([-1, 1]) * rng.randint(1, 6) for _ in range(m)]
            r = wilcoxon_signed_rank(diffs)
            w_plus = r.statistics["w_plus"]
            w_minus = r.statistics["w_minus"]
            assert 0 <= w_plus <= m * (m + 1) / 2
            assert w_plus + w_minus == m * (m + 1) / 2

    def test_negation_swaps_and_preserves_p(self):
        rng = random.Random(11)
        for _ in range(100):
            diffs = [rng.choice([-1, 1]) * rng.randint(1, 9)
                     for _ in range(rng.randint(1, 10))]
            r1 = wilcoxon_signed_rank(diffs)
            r2 = wilcoxon_signed_rank([-d for d in diffs])
            assert r1.statistics["w_plus"] == r2.statistics["w_minus"]
            assert r1.p_value == r2.p_value

    def test_exact_agrees_with_sign_enumeration(self):
        rng = random.Random(12)
        for _ in range(150):
            m = rng.randint(1, 12)
            diffs = [rng.choice([-1, 1]) * rng.randint(1, 5) for _ in range(m)]
            r = wilcoxon_signed_rank(diffs)
            assert r.method == METHOD_EXACT
            assert r.p_value == wilcoxon_enumeration_p(diffs), diffs

    def test_ties_flagged(self):
        assert wilcoxon_signed_rank([1, -1, 2]).ties
        assert not wilcoxon_signed_rank([1, -2, 3]).ties

    def test_method_switches_above_threshold(self):
        exact = wilcoxon_signed_rank(list(range(1, 26)))
        assert exact.method == METHOD_EXACT
        approx = wilcoxon_signed_rank(list(range(1, 27)))
        assert approx.method == METHOD_NORMAL
        assert approx.z_value is not None

    def test_forced_methods_agree_closely(self):
        rng = random.Random(13)
        for _ in range(40):
            diffs = rng.sample(range(-60, 60), 12)
            diffs = [d for d in diffs if d != 0][:10]
            exact = wilcoxon_signed_rank(diffs, method=METHOD_EXACT)
            approx = wilcoxon_signed_rank(diffs, method=METHOD_NORMAL)
            assert abs(exact.p_value - approx.p_value) <= 0.05


class TestPairedDifferences:
    def test_intersection_only(self):
        assert paired_differences({"s1": 10, "s2": 20}, {"s1": 12, "s3": 9}) == [2]

    def test_identical_maps_give_zeros(self):
        assert paired_differences({"a": 3, "b": 4}, {"a": 3, "b": 4}) == [0, 0]

    def test_disjoint_rejected(self):
        with pytest.raises(EmptyIntersection):
            paired_differences({"s1": 1}, {"s2": 2})

    def test_order_is_by_student_id(self):
        diffs = paired_differences({"b": 1, "a": 1}, {"b": 3, "a": 2})
        assert diffs == [1, 2]


class TestCoverage:
    def test_hand_counted_example(self, fig1c):
        from test_query import ann

        anns = [ann("a1", {"c6"}), ann("a2", {"c6", "c7"}, start=2)]
        report = coverage(fig1c, anns, ["s1"])
        student = report.students[0]
        assert student.student == "s1"
        assert set(student.used) == {"c6", "c7"}
        assert set(student.unused) == {"c4", "c5", "c9", "c10", "c11"}
        counts = {c.concept: c.count for c in report.concepts}
        assert counts["c6"] == 2
        assert counts["c7"] == 1
        assert counts["c4"] == 0

    def test_no_annotations(self, fig1c):
        report = coverage(fig1c, [], ["s1"])
        assert report.students[0].used == []
        assert len(report.students[0].unused) == 7

    def test_union_is_all_finals(self, fig1c):
        from test_query import ann

        anns = [ann("a1", {"c4", "c11"})]
        report = coverage(fig1c, anns, ["s1", "s2"])
        for student in report.students:
            assert set(student.used) | set(student.unused) == {
                "c4", "c5", "c6", "c7", "c9", "c10", "c11",
            }
            assert not set(student.used) & set(student.unused)

    def test_multi_tag_counts_exceed_annotations(self, fig1c):
        from test_query import ann

        anns = [ann("a1", {"c4", "c6"}), ann("a2", {"c6"}, start=2)]
        report = coverage(fig1c, anns, ["s1"])
        assert sum(c.count for c in report.concepts) == 3 >= len(anns)


class TestProposalReport:
    def test_proposals_reported_with_counts(self):
        from ontonote.ontology import parse_bracket, propose_final
        from test_query import ann

        o = parse_bracket("A[B,Autre*]")
        o = propose_final(o, "c3", "Ironie", "s1")
        o = propose_final(o, "c3", "Métaphore", "s2")
        anns = [ann("a1", {"c4"}), ann("a2", {"c4", "c2"}, 2), ann("a3", {"c2"}, 4)]
        report = proposal_report(o, anns)
        by_name = {e.name: e for e in report.entries}
        assert by_name["Ironie"].proposer == "s1"
        assert by_name["Ironie"].parent_name == "Autre"
        assert by_name["Ironie"].count == 2
        # Never used, still present.
        assert by_name["Métaphore"].count == 0
        assert report.annotations_using == 2

    def test_no_proposals_empty(self, fig1c):
        report = proposal_report(fig1c, [])
        assert report.entries == []
        assert report.annotations_using == 0
