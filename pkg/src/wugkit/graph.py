"""Word Usage Graphs: median edge aggregation, NaN edges, node exclusion
and metadata-based subgraph extraction."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from statistics import median
from typing import Callable

from .model import CANNOT_DECIDE, Judgment, Use, ValidationError


def aggregate_edge(labels: list[int]) -> float:
    """Median judgment for one edge.

    Cannot-decide labels (0) are dropped first; if every label is 0 the edge
    weight is NaN. Even-count medians average the two middle values.
    """
    if not labels:
        raise ValidationError("cannot aggregate an edge with no judgments")
    informative = [l for l in labels if l != CANNOT_DECIDE]
    if not informative:
        return math.nan
    return float(median(informative))


@dataclass
class WUG:
    """Graph of word uses with median-weighted edges.

    ``edges`` maps canonical pair keys to weights in [1, 4] or NaN;
    ``edge_labels`` keeps the raw judgment labels behind each edge;
    ``excluded`` holds nodes dropped from clustering.
    """

    uses: dict[str, Use]
    edges: dict[tuple[str, str], float] = field(default_factory=dict)
    edge_labels: dict[tuple[str, str], list[int]] = field(default_factory=dict)
    excluded: set[str] = field(default_factory=set)

    @property
    def nodes(self) -> set[str]:
        return set(self.uses)

    def active_nodes(self) -> list[str]:
        """Non-excluded nodes in sorted order."""
        return sorted(self.nodes - self.excluded)


def node_exclusion(
    nodes: set[str], edge_labels: dict[tuple[str, str], list[int]]
) -> set[str]:
    """Nodes with at least half of their incident judgments "Cannot decide".

    Counts raw judgment labels on incident edges, not edges. Nodes with no
    judgments are kept.
    """
    zero: dict[str, int] = {}
    total: dict[str, int] = {}
    for (a, b), labels in edge_labels.items():
        for node in (a, b):
            total[node] = total.get(node, 0) + len(labels)
            zero[node] = zero.get(node, 0) + sum(1 for l in labels if l == CANNOT_DECIDE)
    return {
        node
        for node in nodes
        if total.get(node, 0) > 0 and zero[node] >= total[node] / 2
    }


def build_wug(uses: list[Use], judgments: list[Judgment]) -> WUG:
    """One node per use, one median-weighted edge per judged pair."""
    use_map = {u.use_id: u for u in uses}
    edge_labels: dict[tuple[str, str], list[int]] = {}
    for j in judgments:
        for use_id in j.pair:
            if use_id not in use_map:
                raise ValidationError(f"judgment references unknown use {use_id!r}")
        edge_labels.setdefault(j.pair, []).append(j.label)
    edges = {pair: aggregate_edge(labels) for pair, labels in edge_labels.items()}
    excluded = node_exclusion(set(use_map), edge_labels)
    return WUG(uses=use_map, edges=edges, edge_labels=edge_labels, excluded=excluded)


def subgraph(wug: WUG, predicate: Callable[[Use], bool]) -> WUG:
    """Induced subgraph on the uses matching ``predicate``.

    Keeps parent edge weights and labels for retained endpoint pairs; the
    exclusion set is the parent's, restricted to retained nodes.
    """
    kept = {uid: use for uid, use in wug.uses.items() if predicate(use)}
    edges = {p: w for p, w in wug.edges.items() if p[0] in kept and p[1] in kept}
    labels = {p: list(wug.edge_labels[p]) for p in edges}
    return WUG(
        uses=kept,
        edges=edges,
        edge_labels=labels,
        excluded=wug.excluded & set(kept),
    )


def grouping_predicate(grouping: str) -> Callable[[Use], bool]:
    return lambda use: use.grouping == grouping


def groupings(wug: WUG) -> list[str]:
    """Distinct grouping tags attested on the graph's uses, sorted."""
    return sorted({u.grouping for u in wug.uses.values() if u.grouping is not None})
