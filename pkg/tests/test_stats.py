import math
import random
from itertools import combinations

import numpy as np
import pytest
from sklearn.metrics import adjusted_rand_score

from wugkit import stats
from wugkit.model import Judgment, ValidationError


def rankdata(values):
    """Independent average-rank oracle for the Spearman tests."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def pearson(x, y):
    mx, my = sum(x) / len(x), sum(y) / len(y)
    num = sum((a - mx) * (b - my) for a, b in zip(x, y))
    den = math.sqrt(sum((a - mx) ** 2 for a in x) * sum((b - my) ** 2 for b in y))
    return num / den


class TestSpearman:
    def test_identical(self):
        assert stats.spearman([1, 2, 3, 4], [1, 2, 3, 4]) == 1.0

    def test_reversed(self):
        assert stats.spearman([1, 2, 3, 4], [4, 3, 2, 1]) == -1.0

    def test_ties_match_rank_oracle(self):
        x, y = [1, 2, 2, 4], [1, 3, 2, 4]
        expected = pearson(rankdata(x), rankdata(y))
        assert stats.spearman(x, y) == pytest.approx(expected, abs=1e-12)

    def test_undefined_cases(self):
        assert stats.spearman([1], [2]) is None
        assert stats.spearman([2, 2, 2], [1, 3, 4]) is None

    def test_monotone_transform_invariance(self):
        x, y = [1, 2, 3, 4, 2], [2, 2, 4, 3, 1]
        transformed = [v * 10 + 1 for v in x]
        assert stats.spearman(x, y) == pytest.approx(stats.spearman(transformed, y))


class TestKrippendorffAlpha:
    def test_perfect_duplicates(self):
        data = {f"i{k}": {"a": (k % 4) + 1, "b": (k % 4) + 1} for k in range(20)}
        assert stats.krippendorff_alpha(data) == 1.0

    def test_single_disagreement_below_one(self):
        data = {f"i{k}": {"a": (k % 4) + 1, "b": (k % 4) + 1} for k in range(20)}
        data["i0"]["b"] = 2
        assert stats.krippendorff_alpha(data) < 1.0

    def test_random_annotators_near_zero(self):
        rng = random.Random(7)
        data = {
            f"i{k}": {"a": rng.randint(1, 4), "b": rng.randint(1, 4)} for k in range(1000)
        }
        assert abs(stats.krippendorff_alpha(data)) < 0.1

    def test_zero_labels_treated_missing(self):
        data = {
            "i1": {"a": 3, "b": 3},
            "i2": {"a": 0, "b": 2},  # only one pairable value: dropped
            "i3": {"a": 1, "b": 1},
        }
        assert stats.krippendorff_alpha(data) == 1.0

    def test_no_pairable_values_undefined(self):
        assert stats.krippendorff_alpha({"i1": {"a": 3}, "i2": {"b": 2}}) is None

    def test_ordinal_weighting_penalizes_distance(self):
        near = {f"i{k}": {"a": [1, 4][k % 2], "b": [2, 4][k % 2]} for k in range(20)}
        far = {f"i{k}": {"a": [1, 4][k % 2], "b": [4, 4][k % 2]} for k in range(20)}
        assert stats.krippendorff_alpha(near) > stats.krippendorff_alpha(far)


class TestMeanLabels:
    def make(self, labels, annotator="a"):
        return [
            Judgment(pair=(f"x{i}", f"y{i}"), annotator=annotator, label=l)
            for i, l in enumerate(labels)
        ]

    def test_all_fours(self):
        means = stats.mean_labels(self.make([4, 4, 4]), key=lambda j: "w")
        assert means == {"w": 4.0}

    def test_mixed(self):
        means = stats.mean_labels(self.make([1, 4]), key=lambda j: "w")
        assert means == {"w": 2.5}

    def test_zero_excluded_and_per_annotator(self):
        judgments = self.make([1, 2, 0], annotator="a") + self.make([4, 4], annotator="b")
        means = stats.mean_labels(judgments, key=lambda j: j.annotator)
        assert means == {"a": 1.5, "b": 4.0}


class TestCompareAnnotators:
    def test_identical(self):
        a = {("x", "y"): 4, ("x", "z"): 2}
        result = stats.compare_annotators(a, dict(a))
        assert result.exact_match == 1.0 and result.binarized_accuracy == 1.0

    def test_binary_model_binarized_accuracy(self):
        pairs = [("a", "b"), ("c", "d"), ("e", "f")]
        human = dict(zip(pairs, [4, 4, 1]))
        model = dict(zip(pairs, [3, 4, 2]))
        result = stats.compare_annotators(human, model)
        assert result.binarized_accuracy == 1.0
        assert result.exact_match == pytest.approx(1 / 3)

    def test_disjoint_sets_rejected(self):
        with pytest.raises(ValidationError, match="overlap"):
            stats.compare_annotators({("a", "b"): 4}, {("c", "d"): 1})


class TestAdjustedRandIndex:
    def test_identical_partitions(self):
        p = {"a": 0, "b": 0, "c": 1, "d": 2}
        assert stats.adjusted_rand_index(p, dict(p)) == 1.0

    def test_split_in_two(self):
        p = {e: 0 for e in "abcd"}
        q = {"a": 0, "b": 0, "c": 1, "d": 1}
        expected = adjusted_rand_score([p[e] for e in "abcd"], [q[e] for e in "abcd"])
        assert stats.adjusted_rand_index(p, q) == pytest.approx(expected, abs=1e-12)

    def test_matches_oracle_on_random_partitions(self):
        rng = random.Random(99)
        for _ in range(100):
            n = rng.randint(2, 12)
            elements = [f"e{i}" for i in range(n)]
            p = {e: rng.randrange(4) for e in elements}
            q = {e: rng.randrange(4) for e in elements}
            mine = stats.adjusted_rand_index(p, q)
            oracle = adjusted_rand_score([p[e] for e in elements], [q[e] for e in elements])
            assert mine == pytest.approx(oracle, abs=1e-12)

    def test_symmetric_and_label_permutation_invariant(self):
        p = {"a": 0, "b": 1, "c": 1, "d": 2}
        q = {"a": 1, "b": 1, "c": 0, "d": 0}
        assert stats.adjusted_rand_index(p, q) == stats.adjusted_rand_index(q, p)
        relabeled = {k: v + 7 for k, v in q.items()}
        assert stats.adjusted_rand_index(p, relabeled) == stats.adjusted_rand_index(p, q)

    def test_mismatched_sets_rejected(self):
        with pytest.raises(ValidationError):
            stats.adjusted_rand_index({"a": 0}, {"b": 0})


class TestSenseFrequency:
    def test_arm_t2(self, arm_clustering, arm_wug):
        dist = stats.sense_frequency(arm_clustering, arm_wug, "t2")
        assert dist.counts == {0: 1, 1: 2, 2: 0}

    def test_unfiltered_counts_all_nodes(self, arm_clustering, arm_wug):
        dist = stats.sense_frequency(arm_clustering, arm_wug)
        assert dist.total == 6

    def test_empty_grouping_has_undefined_probabilities(self, arm_clustering, arm_wug):
        dist = stats.sense_frequency(arm_clustering, arm_wug, "t9")
        assert dist.total == 0 and dist.probabilities is None

    def test_grouping_counts_sum_to_unfiltered(self, arm_clustering, arm_wug):
        t1 = stats.sense_frequency(arm_clustering, arm_wug, "t1")
        t2 = stats.sense_frequency(arm_clustering, arm_wug, "t2")
        full = stats.sense_frequency(arm_clustering, arm_wug)
        for cid in full.counts:
            assert t1.counts[cid] + t2.counts[cid] == full.counts[cid]


class TestChange:
    def jsd_oracle(self, p, q):
        p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
        p, q = p / p.sum(), q / q.sum()
        m = (p + q) / 2

        def kl(a, b):
            mask = a > 0
            return float((a[mask] * np.log2(a[mask] / b[mask])).sum())

        return math.sqrt((kl(p, m) + kl(q, m)) / 2)

    def test_identical_distributions_zero(self, arm_clustering, arm_wug):
        d = stats.sense_frequency(arm_clustering, arm_wug, "t1")
        assert stats.graded_change(d, d) == 0.0

    def test_disjoint_supports_maximal(self):
        d1 = stats.SenseFrequencyDistribution("g1", {0: 3, 1: 0})
        d2 = stats.SenseFrequencyDistribution("g2", {0: 0, 1: 5})
        assert stats.graded_change(d1, d2) == pytest.approx(1.0)

    def test_arm_matches_jsd_oracle(self, arm_clustering, arm_wug):
        d1 = stats.sense_frequency(arm_clustering, arm_wug, "t1")
        d2 = stats.sense_frequency(arm_clustering, arm_wug, "t2")
        cids = sorted(d1.counts)
        expected = self.jsd_oracle([d1.counts[c] for c in cids], [d2.counts[c] for c in cids])
        assert stats.graded_change(d1, d2) == pytest.approx(expected, abs=1e-12)

    def test_symmetric(self, arm_clustering, arm_wug):
        d1 = stats.sense_frequency(arm_clustering, arm_wug, "t1")
        d2 = stats.sense_frequency(arm_clustering, arm_wug, "t2")
        assert stats.graded_change(d1, d2) == pytest.approx(stats.graded_change(d2, d1))

    def test_arm_binary_change(self, arm_clustering, arm_wug):
        d1 = stats.sense_frequency(arm_clustering, arm_wug, "t1")
        d2 = stats.sense_frequency(arm_clustering, arm_wug, "t2")
        gained, lost = stats.binary_change(d1, d2)
        assert gained == {1}  # the {D, E} cluster
        assert lost == {2}  # the {B} cluster

    def test_identity_no_change(self, arm_clustering, arm_wug):
        d = stats.sense_frequency(arm_clustering, arm_wug, "t1")
        gained, lost = stats.binary_change(d, d)
        assert gained == set() and lost == set()

    def test_attestation_threshold(self, arm_clustering, arm_wug):
        d1 = stats.sense_frequency(arm_clustering, arm_wug, "t1")
        d2 = stats.sense_frequency(arm_clustering, arm_wug, "t2")
        gained, _ = stats.binary_change(d1, d2, n=3)
        assert gained == set()  # {D, E} has only 2 uses


class TestVariation:
    def test_arm_attested_clusters(self, arm_clustering, arm_wug):
        result = stats.variation(arm_clustering, arm_wug, ["t1", "t2"])
        assert result["t1"][1] == 2
        assert result["t2"][1] == 2

    def test_single_grouping_equals_sense_frequency(self, arm_clustering, arm_wug):
        result = stats.variation(arm_clustering, arm_wug, ["t1"])
        assert result["t1"][0].counts == stats.sense_frequency(arm_clustering, arm_wug, "t1").counts

    def test_requires_groupings(self, arm_clustering, arm_wug):
        with pytest.raises(ValidationError):
            stats.variation(arm_clustering, arm_wug, [])


class TestAgreementReport:
    def test_duplicate_annotators_perfect(self):
        judgments = []
        for i, label in enumerate([1, 2, 3, 4, 2, 3]):
            for annotator in ("a", "b"):
                judgments.append(
                    Judgment(pair=(f"x{i}", f"y{i}"), annotator=annotator, label=label)
                )
        report = stats.agreement_report(judgments)
        assert report.pairwise[("a", "b")][0] == 1.0
        assert report.alpha == 1.0
        assert report.mean_spearman == 1.0

    def test_cannot_decide_counts(self):
        judgments = [
            Judgment(pair=("x", "y"), annotator="a", label=0),
            Judgment(pair=("x", "z"), annotator="a", label=3),
            Judgment(pair=("x", "y"), annotator="b", label=2),
        ]
        report = stats.agreement_report(judgments)
        assert report.cannot_decide == {"a": 1, "b": 0}
