"""Shared computation and CSV/JSON artifact builders used by both the CLI
pipeline and the service's statistics/export endpoints, so the two surfaces
produce byte-identical output for the same inputs and seed."""

from __future__ import annotations

import csv
import io
import json

from . import stats
from .cluster import Clustering, solve
from .graph import WUG, build_wug, groupings
from .model import Judgment, Use
from .viz import build_view, export_view


def compute_word(
    uses: list[Use], judgments: list[Judgment], seed: int, restarts: int = 10
) -> tuple[WUG, Clustering]:
    wug = build_wug(uses, judgments)
    clustering = solve(wug, seed=seed, restarts=restarts)
    return wug, clustering


def graph_document(
    wug: WUG, clustering: Clustering, lemma: str, judgments: list[Judgment], seed: int
) -> dict:
    annotators: dict[tuple[str, str], list[str]] = {}
    for j in judgments:
        annotators.setdefault(j.pair, [])
        if j.annotator not in annotators[j.pair]:
            annotators[j.pair].append(j.annotator)
    view = build_view(wug, clustering, lemma, seed=seed, judgment_annotators=annotators)
    return export_view(view)


def dump_json(document: dict) -> bytes:
    return (json.dumps(document, indent=2, sort_keys=True) + "\n").encode("utf-8")


def _csv_bytes(header: list[str], rows: list[list]) -> bytes:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return out.getvalue().encode("utf-8")


def clustering_csv(clusterings: dict[str, Clustering]) -> bytes:
    """identifier,cluster_id rows; -1 marks excluded uses."""
    rows = []
    for lemma in sorted(clusterings):
        for use_id, cid in sorted(clusterings[lemma].assignment.items()):
            rows.append([use_id, cid])
    return _csv_bytes(["identifier", "cluster_id"], rows)


def parse_clustering_csv(data: bytes | str) -> dict[str, int]:
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    reader = csv.DictReader(io.StringIO(text))
    return {row["identifier"]: int(row["cluster_id"]) for row in reader}


def agreement_csv(reports: dict[str, stats.AgreementReport]) -> bytes:
    rows = []
    for lemma in sorted(reports):
        report = reports[lemma]
        for (a, b), (rho, overlap) in sorted(report.pairwise.items()):
            rows.append([lemma, a, b, _num(rho), overlap])
        rows.append(
            [lemma, "__overall__", "", _num(report.mean_spearman), ""]
        )
        rows.append([lemma, "__alpha__", "", _num(report.alpha), ""])
    return _csv_bytes(["lemma", "annotator1", "annotator2", "spearman", "overlap"], rows)


def means_csv(per_word: dict[str, list[Judgment]], wugs: dict[str, WUG]) -> bytes:
    rows = []
    for lemma in sorted(per_word):
        judgments = per_word[lemma]
        word_means = stats.mean_labels(judgments, lambda j: lemma)
        for key, value in sorted(word_means.items()):
            rows.append(["word", key, _num(value)])
        use_grouping = {uid: u.grouping for uid, u in wugs[lemma].uses.items()}

        def by_grouping(j: Judgment):
            g1, g2 = use_grouping.get(j.pair[0]), use_grouping.get(j.pair[1])
            return g1 if g1 == g2 else None

        for key, value in sorted(stats.mean_labels(judgments, by_grouping).items()):
            rows.append(["grouping", f"{lemma}:{key}", _num(value)])
        for key, value in sorted(
            stats.mean_labels(judgments, lambda j: j.annotator).items()
        ):
            rows.append(["annotator", f"{lemma}:{key}", _num(value)])
    return _csv_bytes(["scope", "key", "mean"], rows)


def change_csv(
    wugs: dict[str, WUG], clusterings: dict[str, Clustering]
) -> bytes:
    rows = []
    for lemma in sorted(wugs):
        tags = groupings(wugs[lemma])
        for i, g1 in enumerate(tags):
            for g2 in tags[i + 1 :]:
                try:
                    report = stats.change_report(clusterings[lemma], wugs[lemma], g1, g2)
                except Exception:
                    continue
                rows.append(
                    [
                        lemma,
                        g1,
                        g2,
                        _num(report.graded),
                        " ".join(str(c) for c in sorted(report.gained)),
                        " ".join(str(c) for c in sorted(report.lost)),
                    ]
                )
    return _csv_bytes(["lemma", "grouping1", "grouping2", "graded_change", "gained", "lost"], rows)


def variation_csv(
    wugs: dict[str, WUG], clusterings: dict[str, Clustering]
) -> bytes:
    rows = []
    for lemma in sorted(wugs):
        tags = groupings(wugs[lemma])
        if not tags:
            continue
        result = stats.variation(clusterings[lemma], wugs[lemma], tags)
        for g in tags:
            dist, attested = result[g]
            for cid in sorted(dist.counts):
                prob = dist.probabilities[cid] if dist.probabilities else None
                rows.append([lemma, g, cid, dist.counts[cid], _num(prob), attested])
    return _csv_bytes(
        ["lemma", "grouping", "cluster", "count", "probability", "attested_clusters"], rows
    )


def _num(value) -> str:
    if value is None:
        return "undefined"
    return f"{value:.6f}".rstrip("0").rstrip(".") if isinstance(value, float) else str(value)
