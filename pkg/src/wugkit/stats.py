"""Agreement, label summaries, cluster evaluation, sense frequency and
variation/change measures over annotated data.

Undefined statistics are reported as None, never coerced to 0.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import jensenshannon
from scipy.stats import rankdata, spearmanr

from .cluster import EXCLUDED_CLUSTER, Clustering
from .graph import WUG
from .model import CANNOT_DECIDE, THRESHOLD, Judgment, ValidationError


def spearman(x: list[float], y: list[float]) -> float | None:
    """Spearman rank correlation with average-rank ties; None when undefined."""
    if len(x) != len(y):
        raise ValidationError("spearman requires equal-length lists")
    if len(x) < 2:
        return None
    if len(set(x)) == 1 or len(set(y)) == 1:
        return None
    rx, ry = rankdata(x), rankdata(y)
    if np.array_equal(rx, ry):
        return 1.0
    if np.array_equal(rx, len(rx) + 1 - ry):
        return -1.0
    rho = spearmanr(x, y).statistic
    if math.isnan(rho):
        return None
    return float(rho)


def krippendorff_alpha(
    data: dict[str, dict[str, int]], treat_zero_missing: bool = True
) -> float | None:
    """Krippendorff's alpha with ordinal difference weights.

    ``data`` maps item -> annotator -> label. Cannot-decide labels count as
    missing. Returns None when no item has two pairable values; returns 1.0
    when there is agreement without any label variation.
    """
    units: list[list[int]] = []
    for labels in data.values():
        values = [l for l in labels.values() if not (treat_zero_missing and l == CANNOT_DECIDE)]
        if len(values) >= 2:
            units.append(values)
    if not units:
        return None

    categories = sorted({v for unit in units for v in unit})
    idx = {c: i for i, c in enumerate(categories)}
    k = len(categories)

    coincidence = np.zeros((k, k))
    for unit in units:
        m = len(unit)
        counts = Counter(unit)
        for c, nc in counts.items():
            for d, nd in counts.items():
                pairs = nc * (nd - 1) if c == d else nc * nd
                coincidence[idx[c], idx[d]] += pairs / (m - 1)
    totals = coincidence.sum(axis=1)
    n = totals.sum()
    if n <= 1:
        return None

    # Ordinal distance: squared difference of cumulative marginal midpoints.
    delta = np.zeros((k, k))
    for a in range(k):
        for b in range(a + 1, k):
            span = totals[a : b + 1].sum() - (totals[a] + totals[b]) / 2
            delta[a, b] = delta[b, a] = span**2

    observed = (coincidence * delta).sum()
    expected = (np.outer(totals, totals) * delta).sum() / (n - 1)
    if expected == 0:
        return 1.0
    return float(1 - observed / expected)


def mean_labels(judgments: list[Judgment], key) -> dict[str, float]:
    """Arithmetic mean of informative labels grouped by ``key(judgment)``.

    Cannot-decide labels are excluded; empty scopes are omitted.
    """
    sums: dict[str, list[int]] = {}
    for j in judgments:
        if j.label == CANNOT_DECIDE:
            continue
        k = key(j)
        if k is None:
            continue
        sums.setdefault(k, []).append(j.label)
    return {k: sum(v) / len(v) for k, v in sums.items()}


def binarize(label: float, threshold: float = THRESHOLD) -> str:
    return "high" if label >= threshold else "low"


@dataclass
class AnnotatorComparison:
    overlap: int
    spearman: float | None
    exact_match: float
    binarized_accuracy: float


def compare_annotators(
    a: dict[tuple[str, str], int], b: dict[tuple[str, str], int]
) -> AnnotatorComparison:
    """Compare two annotators' label maps over their shared, informative pairs.

    Binarized accuracy maps labels to low/high at the scale threshold, which
    supports binary computational annotators emitting only 1 and 4.
    """
    shared = [
        p
        for p in a.keys() & b.keys()
        if a[p] != CANNOT_DECIDE and b[p] != CANNOT_DECIDE
    ]
    if not shared:
        raise ValidationError("no overlapping informative judgments between annotators")
    xs = [a[p] for p in shared]
    ys = [b[p] for p in shared]
    exact = sum(1 for x, y in zip(xs, ys) if x == y) / len(shared)
    binary = sum(1 for x, y in zip(xs, ys) if binarize(x) == binarize(y)) / len(shared)
    return AnnotatorComparison(
        overlap=len(shared),
        spearman=spearman(xs, ys),
        exact_match=exact,
        binarized_accuracy=binary,
    )


@dataclass
class AgreementReport:
    pairwise: dict[tuple[str, str], tuple[float | None, int]]  # (rho, overlap)
    mean_spearman: float | None
    alpha: float | None
    cannot_decide: dict[str, int]


def agreement_report(judgments: list[Judgment]) -> AgreementReport:
    """Pairwise Spearman (overlap-weighted mean) plus ordinal alpha."""
    by_annotator: dict[str, dict[tuple[str, str], int]] = {}
    cannot: dict[str, int] = {}
    for j in judgments:
        by_annotator.setdefault(j.annotator, {})[j.pair] = j.label
        cannot.setdefault(j.annotator, 0)
        if j.label == CANNOT_DECIDE:
            cannot[j.annotator] += 1

    annotators = sorted(by_annotator)
    pairwise: dict[tuple[str, str], tuple[float | None, int]] = {}
    weighted, total_weight = 0.0, 0
    for i, a in enumerate(annotators):
        for b in annotators[i + 1 :]:
            shared = [
                p
                for p in by_annotator[a].keys() & by_annotator[b].keys()
                if by_annotator[a][p] != CANNOT_DECIDE and by_annotator[b][p] != CANNOT_DECIDE
            ]
            rho = spearman([by_annotator[a][p] for p in shared], [by_annotator[b][p] for p in shared])
            pairwise[(a, b)] = (rho, len(shared))
            if rho is not None:
                weighted += rho * len(shared)
                total_weight += len(shared)

    items: dict[str, dict[str, int]] = {}
    for j in judgments:
        items.setdefault("|".join(j.pair), {})[j.annotator] = j.label
    return AgreementReport(
        pairwise=pairwise,
        mean_spearman=weighted / total_weight if total_weight else None,
        alpha=krippendorff_alpha(items),
        cannot_decide=cannot,
    )


def adjusted_rand_index(p: dict[str, int], q: dict[str, int]) -> float:
    """Hubert-Arabie ARI between two partitions of the same element set."""
    if set(p) != set(q):
        raise ValidationError("partitions must cover the same element set")
    if not p:
        raise ValidationError("ARI undefined on an empty element set")
    elements = sorted(p)
    table: dict[tuple[int, int], int] = Counter((p[e], q[e]) for e in elements)
    row = Counter(p[e] for e in elements)
    col = Counter(q[e] for e in elements)
    n = len(elements)

    def comb2(x: int) -> int:
        return x * (x - 1) // 2

    sum_ij = sum(comb2(v) for v in table.values())
    sum_a = sum(comb2(v) for v in row.values())
    sum_b = sum(comb2(v) for v in col.values())
    expected = sum_a * sum_b / comb2(n) if comb2(n) else 0.0
    max_index = (sum_a + sum_b) / 2
    if max_index == expected:
        return 1.0
    return (sum_ij - expected) / (max_index - expected)


@dataclass
class SenseFrequencyDistribution:
    """Per-cluster counts of non-excluded uses, optionally for one grouping."""

    grouping: str | None
    counts: dict[int, int]
    probabilities: dict[int, float] | None = field(default=None)

    @property
    def total(self) -> int:
        return sum(self.counts.values())


def sense_frequency(
    clustering: Clustering, wug: WUG, grouping: str | None = None
) -> SenseFrequencyDistribution:
    """Counts of non-excluded uses per cluster, restricted to ``grouping``."""
    counts = {cid: 0 for cid in clustering.clusters()}
    for use_id, cid in clustering.assignment.items():
        if cid == EXCLUDED_CLUSTER:
            continue
        use = wug.uses.get(use_id)
        if grouping is not None and (use is None or use.grouping != grouping):
            continue
        counts[cid] += 1
    total = sum(counts.values())
    probabilities = {cid: c / total for cid, c in counts.items()} if total else None
    return SenseFrequencyDistribution(grouping=grouping, counts=counts, probabilities=probabilities)


def graded_change(
    d1: SenseFrequencyDistribution, d2: SenseFrequencyDistribution
) -> float:
    """Jensen-Shannon distance (base-2, square root of the divergence)."""
    if set(d1.counts) != set(d2.counts):
        raise ValidationError("distributions cover different cluster id spaces")
    if d1.total == 0 or d2.total == 0:
        raise ValidationError("graded change requires non-empty distributions")
    cids = sorted(d1.counts)
    p = np.array([d1.counts[c] for c in cids], dtype=float) / d1.total
    q = np.array([d2.counts[c] for c in cids], dtype=float) / d2.total
    distance = float(jensenshannon(p, q, base=2))
    if math.isnan(distance):  # scipy returns NaN for identical distributions
        return 0.0
    return min(distance, 1.0)


@dataclass
class ChangeReport:
    grouping_pair: tuple[str, str]
    graded: float
    gained: set[int]
    lost: set[int]


def binary_change(
    d1: SenseFrequencyDistribution,
    d2: SenseFrequencyDistribution,
    k: int = 0,
    n: int = 1,
) -> tuple[set[int], set[int]]:
    """Clusters gained/lost between groupings under attestation thresholds.

    A cluster is gained iff it has at most ``k`` uses in the first grouping
    and at least ``n`` in the second; lost is symmetric.
    """
    if set(d1.counts) != set(d2.counts):
        raise ValidationError("distributions cover different cluster id spaces")
    gained = {c for c in d1.counts if d1.counts[c] <= k and d2.counts[c] >= n}
    lost = {c for c in d1.counts if d1.counts[c] >= n and d2.counts[c] <= k}
    return gained, lost


def change_report(
    clustering: Clustering, wug: WUG, g1: str, g2: str, k: int = 0, n: int = 1
) -> ChangeReport:
    d1 = sense_frequency(clustering, wug, g1)
    d2 = sense_frequency(clustering, wug, g2)
    gained, lost = binary_change(d1, d2, k=k, n=n)
    return ChangeReport(
        grouping_pair=(g1, g2),
        graded=graded_change(d1, d2),
        gained=gained,
        lost=lost,
    )


def variation(
    clustering: Clustering, wug: WUG, groupings: list[str]
) -> dict[str, tuple[SenseFrequencyDistribution, int]]:
    """Per-grouping sense distributions plus attested-cluster counts."""
    if not groupings:
        raise ValidationError("variation requires at least one grouping")
    out = {}
    for g in groupings:
        dist = sense_frequency(clustering, wug, g)
        attested = sum(1 for c in dist.counts.values() if c > 0)
        out[g] = (dist, attested)
    return out
