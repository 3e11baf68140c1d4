"""Batch driver: ingest -> computational annotation -> clustering ->
statistics -> artifact export, without the server."""

from __future__ import annotations

import datetime as dt
import sys
from pathlib import Path

import click

from . import artifacts, ingest, stats
from .annotators import AnnotatorSpec, build_annotator, AnnotationTask, run_task
from .model import Judgment, ValidationError
from .scheduler import derive_seed, generate_full_pairing


# Batch-mode judgments carry a fixed timestamp so reruns are byte-identical.
_BATCH_TIMESTAMP = dt.datetime(2000, 1, 1, tzinfo=dt.timezone.utc)


@click.group()
def main():
    """Use-pair annotation toolkit."""


@main.command("pipeline")
@click.argument("uses_csv", type=click.Path(exists=True, path_type=Path))
@click.option("--judgments", "judgments_csv", type=click.Path(exists=True, path_type=Path),
              help="Existing judgments CSV to load before annotation.")
@click.option("--annotator", "annotator_spec", default=None,
              help="Computational annotator: 'random' or 'stub:TABLE.csv'.")
@click.option("--seed", required=True, type=int, help="RNG seed for annotation and clustering.")
@click.option("--restarts", default=10, type=int, show_default=True,
              help="Clustering solver restarts.")
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
def cmd_pipeline(uses_csv, judgments_csv, annotator_spec, seed, restarts, out_dir):
    """Run the full batch pipeline over a uses CSV.

    Writes judgments.csv, clustering.csv, statistics CSVs and one graph
    document per word to OUT. Exit codes: 0 success, 1 validation failure,
    2 solver or IO failure.
    """
    uses, report = ingest.parse_uses(uses_csv.read_bytes())
    if not report.ok:
        for error in report.errors:
            click.echo(f"uses: {error}", err=True)
        sys.exit(1)

    judgments: list[Judgment] = []
    if judgments_csv is not None:
        judgments, jreport = ingest.parse_judgments(judgments_csv.read_bytes())
        if not jreport.ok:
            for error in jreport.errors:
                click.echo(f"judgments: {error}", err=True)
            sys.exit(1)

    by_word: dict[str, list] = {}
    for use in uses:
        by_word.setdefault(use.lemma, []).append(use)

    try:
        if annotator_spec is not None:
            judgments = judgments + _run_annotator(annotator_spec, by_word, seed)
    except ValidationError as exc:
        click.echo(f"annotation failed: {exc}", err=True)
        sys.exit(1)

    use_lemma = {u.use_id: u.lemma for u in uses}
    word_judgments: dict[str, list[Judgment]] = {lemma: [] for lemma in by_word}
    for j in judgments:
        lemma = use_lemma.get(j.pair[0])
        if lemma is None or use_lemma.get(j.pair[1]) != lemma:
            click.echo(f"judgment references unknown uses: {j.pair}", err=True)
            sys.exit(1)
        word_judgments[lemma].append(j)

    try:
        wugs, clusterings = {}, {}
        for lemma, word_uses in by_word.items():
            if not word_judgments[lemma]:
                continue
            wugs[lemma], clusterings[lemma] = artifacts.compute_word(
                word_uses, word_judgments[lemma], seed=seed, restarts=restarts
            )

        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "judgments.csv").write_bytes(ingest.serialize_judgments(judgments))
        (out_dir / "clustering.csv").write_bytes(artifacts.clustering_csv(clusterings))
        reports = {lemma: stats.agreement_report(word_judgments[lemma]) for lemma in wugs}
        (out_dir / "stats_agreement.csv").write_bytes(artifacts.agreement_csv(reports))
        (out_dir / "stats_means.csv").write_bytes(
            artifacts.means_csv({l: word_judgments[l] for l in wugs}, wugs)
        )
        (out_dir / "stats_change.csv").write_bytes(artifacts.change_csv(wugs, clusterings))
        (out_dir / "stats_variation.csv").write_bytes(artifacts.variation_csv(wugs, clusterings))
        for lemma in sorted(wugs):
            document = artifacts.graph_document(
                wugs[lemma], clusterings[lemma], lemma, word_judgments[lemma], seed=seed
            )
            (out_dir / f"graph_{lemma}.json").write_bytes(artifacts.dump_json(document))
    except (OSError, ValidationError) as exc:
        click.echo(f"pipeline failed: {exc}", err=True)
        sys.exit(2)
    click.echo(f"wrote artifacts for {len(wugs)} word(s) to {out_dir}")


def _run_annotator(spec_text: str, by_word: dict, seed: int) -> list[Judgment]:
    if spec_text == "random":
        spec = AnnotatorSpec(name="Random", kind="random")
        stub_table = None
    elif spec_text.startswith("stub:"):
        table_path = Path(spec_text.split(":", 1)[1])
        judgments, report = ingest.parse_judgments(table_path.read_bytes())
        if not report.ok:
            raise ValidationError(f"bad stub table: {report.errors[0]}")
        stub_table = {j.pair: j.label for j in judgments}
        name = judgments[0].annotator if judgments else "Stub"
        spec = AnnotatorSpec(name=name, kind="stub")
    else:
        raise ValidationError(f"unknown annotator {spec_text!r} (use 'random' or 'stub:FILE')")

    collected: list[Judgment] = []
    for lemma in sorted(by_word):
        word_uses = {u.use_id: u for u in by_word[lemma]}
        instances = generate_full_pairing(by_word[lemma])
        annotator = build_annotator(
            spec,
            seed=derive_seed(seed, spec.name, lemma),
            stub_table=stub_table,
            fixed_timestamp=_BATCH_TIMESTAMP,
        )
        task = AnnotationTask(task_id=f"cli-{lemma}", project_id="cli", lemma=lemma, spec=spec)
        run_task(task, instances, word_uses, set(), collected.extend, annotator)
        if task.status != "done":
            raise ValidationError(task.error or "annotation task failed")
    return collected


@main.command("eval")
@click.argument("pred_csv", type=click.Path(exists=True, path_type=Path))
@click.argument("gold_csv", type=click.Path(exists=True, path_type=Path))
def cmd_eval(pred_csv, gold_csv):
    """Print the Adjusted Rand Index between two clustering CSVs."""
    pred = artifacts.parse_clustering_csv(pred_csv.read_bytes())
    gold = artifacts.parse_clustering_csv(gold_csv.read_bytes())
    pred = {k: v for k, v in pred.items() if v != -1}
    gold = {k: v for k, v in gold.items() if v != -1}
    if set(pred) != set(gold):
        only_pred = sorted(set(pred) - set(gold))
        only_gold = sorted(set(gold) - set(pred))
        click.echo(
            f"element sets differ: only in predictions {only_pred}, only in gold {only_gold}",
            err=True,
        )
        sys.exit(1)
    try:
        ari = stats.adjusted_rand_index(pred, gold)
    except ValidationError as exc:
        click.echo(str(exc), err=True)
        sys.exit(1)
    click.echo(f"{ari:.3f}")


@main.command("serve")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--port", type=int, default=None)
def cmd_serve(config_path, port):
    """Run the REST service."""
    import uvicorn

    from .config import load_config
    from .service import create_app

    config = load_config(config_path)
    if port is not None:
        config.port = port
    uvicorn.run(create_app(config), host="0.0.0.0", port=config.port)


if __name__ == "__main__":
    main()
