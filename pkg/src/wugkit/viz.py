"""Graph views for the UI: seeded spring layout, filtering and a versioned
portable graph document."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .cluster import EXCLUDED_CLUSTER, Clustering
from .graph import WUG, groupings
from .model import THRESHOLD
from .stats import sense_frequency

SCHEMA_VERSION = 1
LAYOUT_METHOD = "spring-threshold"
PALETTE_SIZE = 12


def layout(
    wug: WUG, seed: int = 0, iterations: int = 500, threshold: float = THRESHOLD
) -> dict[str, tuple[float, float]]:
    """Force-directed embedding, deterministic given the seed.

    Attraction on non-NaN edges is proportional to (weight - threshold), so
    low-proximity edges push nodes apart while high-proximity edges pull them
    together. A single node sits at the origin.
    """
    nodes = sorted(wug.nodes)
    n = len(nodes)
    if n == 0:
        return {}
    if n == 1:
        return {nodes[0]: (0.0, 0.0)}
    index = {node: i for i, node in enumerate(nodes)}
    rng = np.random.RandomState(seed)
    pos = rng.uniform(-0.5, 0.5, size=(n, 2))

    spring = np.zeros((n, n))
    for (a, b), w in wug.edges.items():
        if math.isnan(w):
            continue
        i, j = index[a], index[b]
        spring[i, j] = spring[j, i] = w - threshold

    k = math.sqrt(1.0 / n)
    temp = 0.1
    cool = temp / (iterations + 1)
    for _ in range(iterations):
        delta = pos[:, None, :] - pos[None, :, :]
        dist = np.linalg.norm(delta, axis=-1)
        np.fill_diagonal(dist, 1.0)
        dist = np.maximum(dist, 1e-6)
        unit = delta / dist[..., None]
        repulsion = (k * k / dist)[..., None] * unit
        attraction = (spring * dist * dist / k)[..., None] * unit
        disp = (repulsion - attraction).sum(axis=1)
        length = np.maximum(np.linalg.norm(disp, axis=1), 1e-9)
        pos += disp / length[:, None] * np.minimum(length, temp)[:, None]
        temp = max(temp - cool, 1e-4)
    pos -= pos.mean(axis=0)
    return {node: (float(pos[i, 0]), float(pos[i, 1])) for node, i in index.items()}


@dataclass
class NodeView:
    use_id: str
    x: float
    y: float
    cluster: int
    color: int
    grouping: str | None
    date: str | None
    excluded: bool


@dataclass
class EdgeView:
    source: str
    target: str
    weight: float | None  # None encodes NaN
    high: bool | None
    nan: bool
    annotators: list[str]


@dataclass
class GraphView:
    lemma: str
    nodes: list[NodeView]
    edges: list[EdgeView]
    summary: dict
    schema_version: int = SCHEMA_VERSION


def build_view(
    wug: WUG,
    clustering: Clustering,
    lemma: str,
    seed: int = 0,
    judgment_annotators: dict[tuple[str, str], list[str]] | None = None,
    threshold: float = THRESHOLD,
) -> GraphView:
    positions = layout(wug, seed=seed)
    nodes = []
    for use_id in sorted(wug.nodes):
        use = wug.uses[use_id]
        cid = clustering.assignment.get(use_id, EXCLUDED_CLUSTER)
        nodes.append(
            NodeView(
                use_id=use_id,
                x=positions[use_id][0],
                y=positions[use_id][1],
                cluster=cid,
                color=cid % PALETTE_SIZE if cid >= 0 else -1,
                grouping=use.grouping,
                date=use.date.isoformat() if use.date else None,
                excluded=use_id in wug.excluded,
            )
        )
    edges = []
    annotators = judgment_annotators or {}
    for (a, b), w in sorted(wug.edges.items()):
        nan = math.isnan(w)
        edges.append(
            EdgeView(
                source=a,
                target=b,
                weight=None if nan else w,
                high=None if nan else w >= threshold,
                nan=nan,
                annotators=sorted(annotators.get((a, b), [])),
            )
        )
    view = GraphView(lemma=lemma, nodes=nodes, edges=edges, summary={})
    view.summary = _summary(view, wug, clustering, seed, threshold)
    return view


def _summary(view: GraphView, wug: WUG, clustering: Clustering, seed, threshold) -> dict:
    freq = {}
    for g in groupings(wug):
        dist = sense_frequency(clustering, wug, g)
        freq[g] = {
            "counts": {str(c): v for c, v in sorted(dist.counts.items())},
            "probabilities": (
                {str(c): v for c, v in sorted(dist.probabilities.items())}
                if dist.probabilities
                else None
            ),
        }
    return {
        "cluster_sizes": {str(c): len(m) for c, m in clustering.clusters().items()},
        "sense_frequency": freq,
        "clustering_method": clustering.method,
        "layout_method": LAYOUT_METHOD,
        "seed": seed,
        "threshold": threshold,
    }


@dataclass
class FilterCriteria:
    grouping: str | None = None
    date_from: str | None = None
    date_to: str | None = None
    min_weight: float | None = None
    max_weight: float | None = None
    annotator: str | None = None
    hide_nan: bool = False
    hide_excluded: bool = False


def filter_view(view: GraphView, criteria: FilterCriteria) -> GraphView:
    """New view with nodes/edges failing the criteria removed.

    The summary block is recomputed over what remains; the original view is
    untouched. Empty criteria yield an identical view.
    """

    def keep_node(node: NodeView) -> bool:
        if criteria.grouping is not None and node.grouping != criteria.grouping:
            return False
        if criteria.date_from is not None and (node.date is None or node.date < criteria.date_from):
            return False
        if criteria.date_to is not None and (node.date is None or node.date > criteria.date_to):
            return False
        if criteria.hide_excluded and node.excluded:
            return False
        return True

    nodes = [replace(n) for n in view.nodes if keep_node(n)]
    kept = {n.use_id for n in nodes}

    def keep_edge(edge: EdgeView) -> bool:
        if edge.source not in kept or edge.target not in kept:
            return False
        if criteria.annotator is not None and criteria.annotator not in edge.annotators:
            return False
        if edge.nan:
            return not criteria.hide_nan and criteria.min_weight is None and criteria.max_weight is None
        if criteria.min_weight is not None and edge.weight < criteria.min_weight:
            return False
        if criteria.max_weight is not None and edge.weight > criteria.max_weight:
            return False
        return True

    edges = [replace(e, annotators=list(e.annotators)) for e in view.edges if keep_edge(e)]
    filtered = GraphView(lemma=view.lemma, nodes=nodes, edges=edges, summary={})
    filtered.summary = _recompute_summary(view.summary, nodes)
    return filtered


def _recompute_summary(parent_summary: dict, nodes: list[NodeView]) -> dict:
    cluster_ids = sorted({n.cluster for n in nodes if n.cluster >= 0})
    sizes = {str(c): 0 for c in cluster_ids}
    groups = sorted({n.grouping for n in nodes if n.grouping is not None})
    freq = {g: {str(c): 0 for c in cluster_ids} for g in groups}
    for node in nodes:
        if node.cluster < 0:
            continue
        sizes[str(node.cluster)] += 1
        if node.grouping is not None:
            freq[node.grouping][str(node.cluster)] += 1
    sense = {}
    for g in groups:
        counts = freq[g]
        total = sum(counts.values())
        sense[g] = {
            "counts": counts,
            "probabilities": {c: v / total for c, v in counts.items()} if total else None,
        }
    out = dict(parent_summary)
    out["cluster_sizes"] = sizes
    out["sense_frequency"] = sense
    return out


def export_view(view: GraphView) -> dict:
    """Self-contained, schema-versioned document for the UI and archives."""
    return {
        "schema_version": view.schema_version,
        "lemma": view.lemma,
        "nodes": [vars(n) for n in view.nodes],
        "edges": [vars(e) for e in view.edges],
        "summary": view.summary,
    }


def parse_view(document: dict) -> GraphView:
    return GraphView(
        lemma=document["lemma"],
        nodes=[NodeView(**n) for n in document["nodes"]],
        edges=[EdgeView(**e) for e in document["edges"]],
        summary=document["summary"],
        schema_version=document["schema_version"],
    )
