"""Correlation clustering of WUGs.

The objective penalizes within-cluster edges below the scale threshold and
cross-cluster edges above it. ``solve`` runs restarted simulated annealing
with a final greedy descent; ``brute_force`` is the exhaustive oracle for
small graphs.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

import numpy as np

from .graph import WUG
from .model import THRESHOLD, ValidationError

BRUTE_FORCE_LIMIT = 12
EXCLUDED_CLUSTER = -1


@dataclass
class Clustering:
    """Partition of the non-excluded WUG nodes into sense clusters.

    Cluster ids are contiguous 0..k-1, ordered by decreasing cluster size with
    ties broken by smallest member use id; excluded nodes carry id -1.
    """

    assignment: dict[str, int]
    loss: float
    seed: int | None = None
    restarts: int = 0
    iterations: int = 0
    method: str = "correlation-simulated-annealing"

    def clusters(self) -> dict[int, list[str]]:
        out: dict[int, list[str]] = {}
        for use_id, cid in self.assignment.items():
            if cid != EXCLUDED_CLUSTER:
                out.setdefault(cid, []).append(use_id)
        return {cid: sorted(members) for cid, members in sorted(out.items())}

    def num_clusters(self) -> int:
        return len(self.clusters())


def correlation_loss(
    wug: WUG, assignment: dict[str, int], threshold: float = THRESHOLD
) -> float:
    """Sum of max(0, t-w) over within-cluster edges and max(0, w-t) across.

    NaN edges and edges touching excluded nodes contribute nothing.
    """
    for node in wug.nodes - wug.excluded:
        if assignment.get(node, EXCLUDED_CLUSTER) == EXCLUDED_CLUSTER:
            raise ValidationError(f"non-excluded node {node!r} has no cluster assignment")
    loss = 0.0
    for (a, b), w in wug.edges.items():
        if math.isnan(w) or a in wug.excluded or b in wug.excluded:
            continue
        if assignment[a] == assignment[b]:
            loss += max(0.0, threshold - w)
        else:
            loss += max(0.0, w - threshold)
    return loss


def _disagreement_matrices(wug: WUG, nodes: list[str], threshold: float):
    """neg[i][j]: penalty for co-clustering i,j; pos[i][j]: for separating."""
    n = len(nodes)
    index = {node: i for i, node in enumerate(nodes)}
    neg = np.zeros((n, n))
    pos = np.zeros((n, n))
    for (a, b), w in wug.edges.items():
        if math.isnan(w) or a not in index or b not in index:
            continue
        i, j = index[a], index[b]
        neg[i, j] = neg[j, i] = max(0.0, threshold - w)
        pos[i, j] = pos[j, i] = max(0.0, w - threshold)
    return neg, pos


def _normalize(labels: list[int], nodes: list[str]) -> tuple[tuple[int, ...], dict[str, int]]:
    """Canonical ids: decreasing size, ties by smallest member use id.

    ``nodes`` must be sorted; the returned tuple orders labels accordingly and
    serves as the canonical tie-break key.
    """
    members: dict[int, list[str]] = {}
    for node, label in zip(nodes, labels):
        members.setdefault(label, []).append(node)
    order = sorted(members, key=lambda l: (-len(members[l]), min(members[l])))
    remap = {old: new for new, old in enumerate(order)}
    canonical = tuple(remap[l] for l in labels)
    return canonical, {node: remap[l] for node, l in zip(nodes, labels)}


def _partition_labels(n: int):
    """All set partitions of range(n) as restricted-growth label strings."""
    labels = [0] * n

    def rec(i: int, k: int):
        if i == n:
            yield list(labels)
            return
        for c in range(k + 1):
            labels[i] = c
            yield from rec(i + 1, max(k, c + 1))

    yield from rec(0, 0)


def _batch_loss(batch: np.ndarray, neg: np.ndarray, pos: np.ndarray) -> np.ndarray:
    n = neg.shape[0]
    loss = np.zeros(batch.shape[0])
    for i in range(n):
        for j in range(i + 1, n):
            same = batch[:, i] == batch[:, j]
            loss += np.where(same, neg[i, j], pos[i, j])
    return loss


def brute_force(wug: WUG, threshold: float = THRESHOLD) -> Clustering:
    """Exhaustive minimum-loss partition, same tie-break as ``solve``."""
    nodes = wug.active_nodes()
    n = len(nodes)
    if n > BRUTE_FORCE_LIMIT:
        raise ValidationError(
            f"brute force limited to {BRUTE_FORCE_LIMIT} non-excluded nodes, got {n}"
        )
    if n == 0:
        return Clustering(assignment=_excluded_only(wug), loss=0.0, method="brute-force")
    neg, pos = _disagreement_matrices(wug, nodes, threshold)
    batch = np.array(list(_partition_labels(n)), dtype=np.int64)
    losses = _batch_loss(batch, neg, pos)
    best = losses.min()
    best_key = None
    best_map = None
    for idx in np.flatnonzero(losses <= best + 1e-9):
        key, mapping = _normalize(list(batch[idx]), nodes)
        if best_key is None or key < best_key:
            best_key, best_map = key, mapping
    assignment = dict(best_map)
    assignment.update(_excluded_only(wug))
    return Clustering(assignment=assignment, loss=float(best), method="brute-force")


def _excluded_only(wug: WUG) -> dict[str, int]:
    return {node: EXCLUDED_CLUSTER for node in wug.excluded}


def _components_init(wug: WUG, nodes: list[str], threshold: float) -> list[int]:
    """Warm start: connected components of the high-proximity subgraph."""
    index = {node: i for i, node in enumerate(nodes)}
    parent = list(range(len(nodes)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for (a, b), w in wug.edges.items():
        if math.isnan(w) or w < threshold or a not in index or b not in index:
            continue
        ra, rb = find(index[a]), find(index[b])
        if ra != rb:
            parent[ra] = rb
    return [find(i) for i in range(len(nodes))]


class _State:
    """Mutable partition state with O(cluster size) move deltas."""

    def __init__(self, labels: list[int], diff: np.ndarray):
        self.diff = diff  # neg - pos
        self.labels = list(labels)
        self.members: dict[int, set[int]] = {}
        for i, l in enumerate(labels):
            self.members.setdefault(l, set()).add(i)

    def delta(self, v: int, target: int) -> float:
        """Loss change from moving node v into cluster ``target``."""
        row = self.diff[v]
        current = self.labels[v]
        d_new = sum(row[u] for u in self.members.get(target, ())) if target != current else 0.0
        d_old = sum(row[u] for u in self.members[current] if u != v)
        if target == current:
            return 0.0
        return d_new - d_old

    def move(self, v: int, target: int) -> None:
        current = self.labels[v]
        self.members[current].discard(v)
        if not self.members[current]:
            del self.members[current]
        self.members.setdefault(target, set()).add(v)
        self.labels[v] = target

    def fresh_label(self) -> int:
        return max(self.members) + 1

    def loss(self, neg: np.ndarray, pos: np.ndarray) -> float:
        total = 0.0
        n = len(self.labels)
        for i in range(n):
            for j in range(i + 1, n):
                total += neg[i, j] if self.labels[i] == self.labels[j] else pos[i, j]
        return total


def _greedy_descent(state: _State) -> int:
    """Apply best strictly-improving single moves until a local optimum."""
    n = len(state.labels)
    steps = 0
    while True:
        best_delta, best_move = -1e-12, None
        for v in range(n):
            targets = set(state.members) | {state.fresh_label()}
            targets.discard(state.labels[v])
            for t in targets:
                d = state.delta(v, t)
                if d < best_delta:
                    best_delta, best_move = d, (v, t)
        if best_move is None:
            return steps
        state.move(*best_move)
        steps += 1


def solve(
    wug: WUG,
    seed: int = 0,
    restarts: int = 10,
    threshold: float = THRESHOLD,
    cooling: float = 0.9,
    moves_per_temp: int | None = None,
    t_stop: float = 0.01,
) -> Clustering:
    """Restarted simulated annealing over node-reassignment moves.

    Restart 0 starts from connected components of the >= threshold subgraph;
    later restarts from seeded random partitions. Deterministic given the
    seed; among equal-loss candidates the canonically smallest assignment
    (after id normalization) wins.
    """
    nodes = wug.active_nodes()
    n = len(nodes)
    if n == 0:
        return Clustering(assignment=_excluded_only(wug), loss=0.0, seed=seed, restarts=restarts)
    neg, pos = _disagreement_matrices(wug, nodes, threshold)
    diff = neg - pos
    t_start = max(float(np.max(neg)), float(np.max(pos)), t_stop * 10)
    moves = moves_per_temp if moves_per_temp is not None else 10 * n

    best_key = None
    best_map: dict[str, int] = {}
    best_loss = math.inf
    iterations = 0
    for r in range(restarts):
        rng = random.Random(f"{seed}:{r}")
        if r == 0:
            labels = _components_init(wug, nodes, threshold)
        else:
            labels = [rng.randrange(n) for _ in range(n)]
        state = _State(labels, diff)
        temp = t_start
        while temp > t_stop:
            for _ in range(moves):
                v = rng.randrange(n)
                choices = list(state.members)
                choices.append(state.fresh_label())
                t = choices[rng.randrange(len(choices))]
                if t == state.labels[v]:
                    continue
                d = state.delta(v, t)
                if d < 0 or rng.random() < math.exp(-d / temp):
                    state.move(v, t)
                iterations += 1
            temp *= cooling
        iterations += _greedy_descent(state)
        loss = state.loss(neg, pos)
        key, mapping = _normalize(state.labels, nodes)
        if (
            best_key is None
            or loss < best_loss - 1e-9
            or (abs(loss - best_loss) <= 1e-9 and key < best_key)
        ):
            best_key, best_map, best_loss = key, mapping, loss
    assignment = dict(best_map)
    assignment.update(_excluded_only(wug))
    return Clustering(
        assignment=assignment,
        loss=float(best_loss),
        seed=seed,
        restarts=restarts,
        iterations=iterations,
    )
