"""End-to-end acceptance suite.

Each test prints one PASS/FAIL line so the whole gate can be read off the
pytest -v output at a glance.
"""

import io
import json
import random
import time
import zipfile
from collections import Counter
from fractions import Fraction

import pytest
from click.testing import CliRunner
from fastapi.testclient import TestClient

from wugkit import artifacts, stats, viz
from wugkit.annotators import RandomAnnotator
from wugkit.cli import main as cli_main
from wugkit.cluster import brute_force, correlation_loss, solve
from wugkit.config import ServiceConfig
from wugkit.graph import aggregate_edge, build_wug, node_exclusion
from wugkit.ingest import parse_judgments, parse_uses
from wugkit.model import Judgment, Use
from wugkit.scheduler import build_sequence, derive_seed, generate_full_pairing
from wugkit.service import create_app, grade_tutorial, load_tutorial


def report(name, ok):
    print(f"{'PASS' if ok else 'FAIL'}: {name}")
    assert ok, name


def make_uses(n, lemma="w", grouping=None):
    return [
        Use(use_id=f"u{i:02d}", lemma=lemma, context=f"the {lemma} here", span=(4, 4 + len(lemma)),
            grouping=grouping)
        for i in range(n)
    ]


def random_wug(n, rng):
    uses = make_uses(n)
    judgments = [
        Judgment(pair=(a.use_id, b.use_id), annotator="r", label=rng.randint(1, 4))
        for i, a in enumerate(uses)
        for b in uses[i + 1 :]
    ]
    return build_wug(uses, judgments)


def test_pair_generation_counts():
    ok = True
    start = time.time()
    for n in range(1, 13):
        instances = generate_full_pairing(make_uses(n))
        ok = ok and len(instances) == n * (n - 1) // 2
        ok = ok and len({i.pair_key for i in instances}) == len(instances)
    ok = ok and len(generate_full_pairing(make_uses(6))) == 15
    ok = ok and time.time() - start < 1.0
    report("pair generation: n(n-1)/2 instances for n in 1..12, n=6 gives 15", ok)


def test_swap_probability():
    start = time.time()
    swapped = total = 0
    instances = generate_full_pairing(make_uses(30))  # 435 pairs per annotator
    for a in range(24):
        name = f"annotator-{a}"
        sequence = build_sequence(instances, name, derive_seed(99, name, "w"))
        for entry in sequence.entries:
            total += 1
            swapped += entry.swapped
    fraction = swapped / total
    ok = total >= 10_000 and 0.48 <= fraction <= 0.52 and time.time() - start < 1.0
    report(f"presentation swap fraction {fraction:.4f} in [0.48, 0.52] over {total} entries", ok)


def test_edge_aggregation_and_exclusion():
    ok = aggregate_edge([2, 3, 4]) == 3.0
    ok = ok and aggregate_edge([0, 0]) != aggregate_edge([0, 0])  # NaN
    ok = ok and aggregate_edge([0, 4]) == 4.0
    ok = ok and aggregate_edge([2, 3]) == 2.5

    nodes = {"u00", "u01", "u02"}
    edge_labels = {
        ("u00", "u01"): [0, 4],
        ("u00", "u02"): [0, 4],
        ("u01", "u02"): [3],
    }
    # u00 has 2 zero labels out of 4 judgments: exactly half, excluded.
    ok = ok and node_exclusion(nodes, edge_labels) == {"u00"}
    edge_labels[("u00", "u01")] = [0, 4, 4]
    ok = ok and node_exclusion(nodes, edge_labels) == set()
    report("edge aggregation: median of non-zero labels, NaN when all zero; "
           "node excluded at >= half zero labels", ok)


def test_clustering_matches_brute_force():
    start = time.time()
    rng = random.Random(2024)
    mismatches = 0
    for trial in range(50):
        wug = random_wug(rng.randint(3, 9), rng)
        heuristic = solve(wug, seed=trial, restarts=20)
        exact = brute_force(wug)
        if heuristic.loss != exact.loss:
            mismatches += 1

    uses = make_uses(6)
    high = build_wug(uses, [
        Judgment(pair=(a.use_id, b.use_id), annotator="x", label=4)
        for i, a in enumerate(uses) for b in uses[i + 1 :]
    ])
    low = build_wug(uses, [
        Judgment(pair=(a.use_id, b.use_id), annotator="x", label=1)
        for i, a in enumerate(uses) for b in uses[i + 1 :]
    ])
    elapsed = time.time() - start
    ok = (
        mismatches == 0
        and solve(high, seed=0).num_clusters() == 1
        and solve(low, seed=0).num_clusters() == 6
        and elapsed < 60.0
    )
    report(f"clustering loss equals brute-force optimum on 50/50 random graphs "
           f"({elapsed:.1f} s); all-high merges, all-low shatters", ok)


def test_arm_end_to_end(arm_uses, arm_judgments):
    start = time.time()
    wug = build_wug(arm_uses, arm_judgments)
    clustering = solve(wug, seed=13, restarts=10)
    clusters = {cid: set(members) for cid, members in clustering.clusters().items()}
    ok = clusters == {
        0: {"arm-A", "arm-C", "arm-F"},
        1: {"arm-D", "arm-E"},
        2: {"arm-B"},
    }
    change = stats.change_report(clustering, wug, "t1", "t2")
    ok = ok and change.gained == {1}  # the {D, E} cluster appears in t2
    ok = ok and change.lost == {2}  # the {B} cluster exists only in t1
    ok = ok and change.graded > 0
    ok = ok and time.time() - start < 5.0
    report("six-use fixture recovers clusters {A,C,F},{D,E},{B}; binary change "
           "t1->t2 gains the {D,E} cluster and loses the {B} cluster; graded > 0", ok)


def oracle_ari(p, q):
    """Contingency-table ARI in exact rational arithmetic."""
    elements = sorted(p)
    n = len(elements)
    table = Counter((p[e], q[e]) for e in elements)
    row = Counter(p[e] for e in elements)
    col = Counter(q[e] for e in elements)
    c2 = lambda x: Fraction(x * (x - 1), 2)
    sum_ij = sum(c2(v) for v in table.values())
    sum_a = sum(c2(v) for v in row.values())
    sum_b = sum(c2(v) for v in col.values())
    expected = sum_a * sum_b / c2(n)
    max_index = Fraction(sum_a + sum_b, 2)
    if max_index == expected:
        return 1.0
    return float((sum_ij - expected) / (max_index - expected))


def test_adjusted_rand_index_oracle():
    rng = random.Random(7)
    ok = True
    for _ in range(100):
        n = rng.randint(2, 12)
        elements = [f"e{i}" for i in range(n)]
        p = {e: rng.randrange(1 + rng.randrange(n)) for e in elements}
        q = {e: rng.randrange(1 + rng.randrange(n)) for e in elements}
        ok = ok and abs(stats.adjusted_rand_index(p, q) - oracle_ari(p, q)) <= 1e-12
        ok = ok and stats.adjusted_rand_index(p, dict(p)) == 1.0
        relabel = {e: p[e] + 100 for e in elements}
        ok = ok and stats.adjusted_rand_index(p, relabel) == 1.0
    report("ARI matches exact contingency-table oracle on 100 random partition "
           "pairs to 1e-12; identity gives 1.0; relabelling invariant", ok)


def test_agreement_limits():
    rng = random.Random(41)
    pairs = [(f"a{i}", f"b{i}") for i in range(200)]
    base = [
        Judgment(pair=p, annotator="anna", label=rng.randint(1, 4)) for p in pairs
    ]
    duplicate = base + [
        Judgment(pair=j.pair, annotator="bert", label=j.label) for j in base
    ]
    dup_report = stats.agreement_report(duplicate)
    ok = dup_report.alpha == 1.0
    ok = ok and dup_report.pairwise[("anna", "bert")][0] == 1.0

    items = {
        f"item{i}": {"x": rng.randint(1, 4), "y": rng.randint(1, 4)}
        for i in range(1000)
    }
    alpha = stats.krippendorff_alpha(items)
    ok = ok and abs(alpha) < 0.1
    report(f"agreement: duplicated annotator gives alpha = rho = 1.0 exactly; "
           f"independent random annotators give |alpha| = {abs(alpha):.3f} < 0.1", ok)


def test_random_annotator_distribution():
    uses = {u.use_id: u for u in make_uses(2)}
    instance = generate_full_pairing(list(uses.values()))[0]
    annotator = RandomAnnotator(seed=3)
    draws = 40_000
    counts = Counter(annotator.annotate(instance, uses).label for _ in range(draws))
    ok = 0 not in counts
    for label in (1, 2, 3, 4):
        ok = ok and 0.24 <= counts[label] / draws <= 0.26
    report("random annotator: 40,000 draws, each of labels 1..4 at frequency in "
           "[0.24, 0.26], label 0 never emitted", ok)


def test_service_round_trip(arm_uses_path):
    client = TestClient(create_app(ServiceConfig()))
    token = client.post("/annotators", json={"name": "owner"}).json()["token"]
    headers = {"x-annotator": "owner", "x-token": token}

    def make_project(project_id, uses_bytes, judgments_bytes=None):
        files = [("uses", ("uses.csv", uses_bytes, "text/csv"))]
        if judgments_bytes:
            files.append(("judgments", ("judgments.csv", judgments_bytes, "text/csv")))
        response = client.post(
            "/projects",
            data={"project_id": project_id, "language": "en", "mode": "full",
                  "seed": "13"},
            files=files, headers=headers,
        )
        assert response.status_code == 201, response.text

    make_project("round-trip", arm_uses_path.read_bytes())
    task_id = client.post(
        "/tasks",
        json={"project_id": "round-trip", "word": "arm",
              "spec": {"name": "Random", "kind": "random"}},
        headers=headers,
    ).json()["task_ids"][0]
    deadline = time.time() + 10
    while time.time() < deadline:
        if client.get(f"/tasks/{task_id}", headers=headers).json()["status"] == "done":
            break
        time.sleep(0.02)

    export1 = client.get("/projects/round-trip/export", headers=headers).content
    archive1 = zipfile.ZipFile(io.BytesIO(export1))
    make_project("reborn", archive1.read("uses.csv"), archive1.read("judgments.csv"))
    archive2 = zipfile.ZipFile(io.BytesIO(
        client.get("/projects/reborn/export", headers=headers).content
    ))

    ok = archive1.read("judgments.csv") == archive2.read("judgments.csv")
    ok = ok and archive1.read("clustering.csv") == archive2.read("clustering.csv")
    graph1 = client.get("/projects/round-trip/words/arm/graph", headers=headers).content
    graph2 = client.get("/projects/reborn/words/arm/graph", headers=headers).content
    ok = ok and graph1 == graph2
    doc1, doc2 = json.loads(graph1), json.loads(graph2)
    ok = ok and doc1["edges"] == doc2["edges"] and doc1["nodes"] == doc2["nodes"]
    report("service round-trip: export then re-import yields identical graph and "
           "clustering, byte-identical judgments CSV", ok)


def test_cli_determinism(tmp_path, arm_uses_path):
    runner = CliRunner()
    outputs = []
    for subdir in ("first", "second"):
        out = tmp_path / subdir
        result = runner.invoke(
            cli_main,
            ["pipeline", str(arm_uses_path), "--annotator", "random",
             "--seed", "42", "--out", str(out)],
        )
        assert result.exit_code == 0, result.output
        outputs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    ok = outputs[0].keys() == outputs[1].keys() and len(outputs[0]) >= 7
    for name in outputs[0]:
        ok = ok and outputs[0][name] == outputs[1][name]
    report("batch pipeline run twice with the same seed writes a byte-identical "
           "artifact set", ok)


def test_tutorial_gate(arm_uses_path):
    gold = [item["gold"] for item in load_tutorial()]
    passed_gold, rho_gold, _ = grade_tutorial(gold, gold, 0.6, 0.5)
    reversed_labels = [5 - g for g in gold]
    passed_rev, _, _ = grade_tutorial(reversed_labels, gold, 0.6, 0.5)
    ok = passed_gold and rho_gold == 1.0 and not passed_rev

    client = TestClient(create_app(ServiceConfig()))
    token = client.post("/annotators", json={"name": "probe"}).json()["token"]
    headers = {"x-annotator": "probe", "x-token": token}
    for route in client.app.routes:
        if getattr(route, "methods", None) and "GET" in route.methods:
            path = route.path.format(project_id="p", lemma="w", task_id="t")
            ok = ok and '"gold"' not in client.get(path, headers=headers).text
    submit = client.post("/tutorial/submit", json={"labels": gold}, headers=headers)
    ok = ok and "gold" not in json.dumps(submit.json())
    report("tutorial gate: gold-identical submission passes, reversed submission "
           "fails, gold labels unreachable from any endpoint", ok)
