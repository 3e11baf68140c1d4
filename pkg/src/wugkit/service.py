"""REST service: registration and tutorial gate, project management, the
annotation flow, computational annotation tasks, statistics and export."""

from __future__ import annotations

import datetime as dt
import io
import json
import secrets
import threading
import uuid
import zipfile
from importlib import resources

from fastapi import Depends, FastAPI, File, Form, Header, HTTPException, UploadFile
from fastapi.responses import JSONResponse, Response

from . import artifacts, ingest, scheduler, stats
from .annotators import (
    AnnotationTask,
    AnnotatorSpec,
    BINARY_RANGE,
    FULL_RANGE,
    build_annotator,
    run_task,
)
from .config import ServiceConfig
from .graph import build_wug
from .model import Judgment, Project, ValidationError, validate_label
from .storage import Store

# Export archives must be byte-stable across runs.
_ZIP_EPOCH = (1980, 1, 1, 0, 0, 0)


def load_tutorial() -> list[dict]:
    text = resources.files("wugkit.data").joinpath("tutorial.json").read_text("utf-8")
    return json.loads(text)["instances"]


def grade_tutorial(
    submitted: list[int], gold: list[int], gate_rho: float, gate_mad: float
) -> tuple[bool, float | None, float]:
    """Pass iff Spearman >= gate_rho and mean absolute difference <= gate_mad."""
    if len(submitted) != len(gold):
        raise ValidationError(f"expected {len(gold)} labels, got {len(submitted)}")
    for label in submitted:
        validate_label(label)
    rho = stats.spearman([float(x) for x in submitted], [float(x) for x in gold])
    mad = sum(abs(s - g) for s, g in zip(submitted, gold)) / len(gold)
    passed = rho is not None and rho >= gate_rho and mad <= gate_mad
    return passed, rho, mad


def create_app(config: ServiceConfig | None = None, store: Store | None = None,
               task_transport=None) -> FastAPI:
    config = config or ServiceConfig()
    store = store or Store(config.database_path)
    app = FastAPI(title="wugkit")
    app.state.store = store
    app.state.config = config
    app.state.cache = {}
    app.state.cache_lock = threading.Lock()
    tutorial = load_tutorial()

    # -- helpers ------------------------------------------------------------

    def auth(
        x_annotator: str = Header(default=""), x_token: str = Header(default="")
    ) -> str:
        if not store.check_token(x_annotator, x_token):
            raise HTTPException(401, "unknown annotator or bad token")
        return x_annotator

    def get_project(project_id: str) -> Project:
        try:
            return store.load_project(project_id)
        except ValidationError as exc:
            raise HTTPException(404, str(exc))

    def require_owner(project_id: str, name: str) -> None:
        if store.project_owner(project_id) != name:
            raise HTTPException(403, "only the project owner may do this")

    def require_annotation_rights(project_id: str, name: str) -> None:
        if not store.passed_tutorial(name):
            raise HTTPException(403, "tutorial not passed")
        if not store.has_access(project_id, name):
            raise HTTPException(403, "no access to this project")

    def compute_cached(project: Project, lemma: str):
        """WUG + clustering for a word, cached against the judgment version."""
        if lemma not in project.words:
            raise HTTPException(404, f"unknown word {lemma!r}")
        version = store.judgment_version(project.project_id, lemma)
        key = (project.project_id, lemma)
        with app.state.cache_lock:
            cached = app.state.cache.get(key)
            if cached and cached[0] == version:
                return cached[1]
        judgments = store.load_judgments(project.project_id, lemma)
        if not judgments:
            raise HTTPException(409, "no edges: word has no judgments yet")
        word = project.words[lemma]
        wug, clustering = artifacts.compute_word(
            list(word.uses.values()), judgments, seed=project.rng_seed,
            restarts=config.solver_restarts,
        )
        result = {"wug": wug, "clustering": clustering, "judgments": judgments}
        with app.state.cache_lock:
            app.state.cache[key] = (version, result)
        return result

    # -- registration and tutorial -----------------------------------------

    @app.post("/annotators", status_code=201)
    def register(body: dict):
        name = (body.get("name") or "").strip()
        if not name:
            raise HTTPException(422, "name required")
        token = secrets.token_hex(16)
        try:
            store.register_annotator(name, token)
        except ValidationError as exc:
            raise HTTPException(409, str(exc))
        return {"name": name, "token": token}

    @app.get("/tutorial")
    def tutorial_instances():
        # Gold labels stay server-side, always.
        return [
            {k: v for k, v in item.items() if k != "gold"} for item in tutorial
        ]

    @app.post("/tutorial/submit")
    def tutorial_submit(body: dict, name: str = Depends(auth)):
        labels = body.get("labels")
        if not isinstance(labels, list):
            raise HTTPException(422, "labels must be a list")
        gold = [item["gold"] for item in tutorial]
        try:
            passed, rho, mad = grade_tutorial(labels, gold, config.gate_rho, config.gate_mad)
        except ValidationError as exc:
            raise HTTPException(422, str(exc))
        store.record_tutorial(name, rho, mad, passed)
        return {"passed": passed, "spearman": rho, "mad": mad}

    # -- projects -----------------------------------------------------------

    @app.post("/projects", status_code=201)
    async def create_project(
        name: str = Depends(auth),
        project_id: str = Form(...),
        language: str = Form(...),
        mode: str = Form("full"),
        seed: int = Form(0),
        public: bool = Form(False),
        uses: list[UploadFile] = File(...),
        pairs: UploadFile | None = File(None),
        judgments: UploadFile | None = File(None),
    ):
        if mode not in ("full", "pairs", "judgments"):
            raise HTTPException(422, f"unknown pairing mode {mode!r}")
        all_uses, errors = [], []
        for upload in uses:
            parsed, report = ingest.parse_uses(await upload.read())
            errors.extend(str(e) for e in report.errors)
            all_uses.extend(parsed)
        parsed_judgments = []
        if judgments is not None:
            parsed_judgments, report = ingest.parse_judgments(await judgments.read())
            errors.extend(str(e) for e in report.errors)
        if errors:
            return JSONResponse({"errors": errors}, status_code=400)

        project = Project(project_id=project_id, language=language, rng_seed=seed, public=public)
        try:
            for use in all_uses:
                project.word(use.lemma).add_use(use)
            if mode == "full":
                for word in project.words.values():
                    word.instances = scheduler.generate_full_pairing(list(word.uses.values()))
            elif mode == "pairs":
                if pairs is None:
                    raise ValidationError("mode 'pairs' requires a pairs file")
                pair_rows = _parse_pairs(await pairs.read())
                use_lemma = {u.use_id: u.lemma for u in all_uses}
                by_word: dict[str, list[tuple[str, str]]] = {}
                for a, b in pair_rows:
                    if a not in use_lemma or b not in use_lemma:
                        raise ValidationError(f"unknown use id in pair ({a!r}, {b!r})")
                    if use_lemma[a] != use_lemma[b]:
                        raise ValidationError(f"pair ({a!r}, {b!r}) crosses lemmas")
                    by_word.setdefault(use_lemma[a], []).append((a, b))
                for lemma, word_pairs in by_word.items():
                    project.words[lemma].instances = scheduler.accept_uploaded_pairs(
                        word_pairs, set(project.words[lemma].uses)
                    )
            else:  # judgments: instances come from the judged pairs
                if not parsed_judgments:
                    raise ValidationError("mode 'judgments' requires a judgments file")
                use_lemma = {u.use_id: u.lemma for u in all_uses}
                by_word = {}
                for j in parsed_judgments:
                    if j.pair[0] not in use_lemma or j.pair[1] not in use_lemma:
                        raise ValidationError(f"judgment references unknown use {j.pair}")
                    by_word.setdefault(use_lemma[j.pair[0]], []).append(j.pair)
                for lemma, word_pairs in by_word.items():
                    project.words[lemma].instances = scheduler.accept_uploaded_pairs(
                        list(word_pairs), set(project.words[lemma].uses)
                    )
            store.save_project(project, owner=name)
            if parsed_judgments:
                use_lemma = {u.use_id: u.lemma for u in all_uses}
                by_word_j: dict[str, list[Judgment]] = {}
                for j in parsed_judgments:
                    if j.pair[0] not in use_lemma:
                        raise ValidationError(f"judgment references unknown use {j.pair}")
                    by_word_j.setdefault(use_lemma[j.pair[0]], []).append(j)
                for lemma, word_judgments in by_word_j.items():
                    store.upsert_judgments(project_id, lemma, word_judgments)
        except ValidationError as exc:
            return JSONResponse({"errors": [str(exc)]}, status_code=400)
        return {"project_id": project_id, "words": sorted(project.words)}

    @app.get("/projects")
    def list_projects(name: str = Depends(auth)):
        return store.list_projects(name)

    @app.get("/projects/{project_id}")
    def project_detail(project_id: str, name: str = Depends(auth)):
        project = get_project(project_id)
        return {
            "project_id": project.project_id,
            "language": project.language,
            "public": project.public,
            "rng_seed": project.rng_seed,
            "words": {
                lemma: {"uses": len(w.uses), "instances": len(w.instances)}
                for lemma, w in sorted(project.words.items())
            },
            "access": sorted(project.access),
        }

    @app.delete("/projects/{project_id}")
    def delete_project(project_id: str, name: str = Depends(auth)):
        get_project(project_id)
        require_owner(project_id, name)
        store.delete_project(project_id)
        return {"deleted": project_id}

    @app.post("/projects/{project_id}/access")
    def manage_access(project_id: str, body: dict, name: str = Depends(auth)):
        get_project(project_id)
        require_owner(project_id, name)
        if "annotator" in body:
            grantee = body["annotator"]
            if not store.annotator_exists(grantee):
                raise HTTPException(404, f"unknown annotator {grantee!r}")
            store.grant_access(project_id, grantee)
        if "public" in body:
            store.set_public(project_id, bool(body["public"]))
        project = get_project(project_id)
        return {"access": sorted(project.access), "public": project.public}

    # -- annotation flow ----------------------------------------------------

    def annotator_sequence(project: Project, lemma: str, name: str):
        word = project.words[lemma]
        judged = {
            j.pair for j in store.load_judgments(project.project_id, lemma, annotator=name)
        }
        seed = scheduler.derive_seed(project.rng_seed, name, lemma)
        return word, scheduler.build_sequence(word.instances, name, seed, judged=judged)

    @app.get("/projects/{project_id}/words/{lemma}/next")
    def get_next(project_id: str, lemma: str, name: str = Depends(auth)):
        project = get_project(project_id)
        if lemma not in project.words:
            raise HTTPException(404, f"unknown word {lemma!r}")
        require_annotation_rights(project_id, name)
        word, sequence = annotator_sequence(project, lemma, name)
        entry = sequence.next_instance()
        if entry is None:
            return {"done": True, "remaining": 0}
        instance = next(i for i in word.instances if i.instance_id == entry.instance_id)
        first, second = scheduler.presentation_order(instance, entry.swapped)
        u1, u2 = word.uses[first], word.uses[second]
        return {
            "done": False,
            "remaining": sequence.remaining(),
            "instance_id": instance.instance_id,
            "first": _use_payload(u1),
            "second": _use_payload(u2),
        }

    @app.post("/judgments")
    def submit_judgment(body: dict, name: str = Depends(auth)):
        project_id = body.get("project_id", "")
        lemma = body.get("word", "")
        instance_id = body.get("instance_id", "")
        project = get_project(project_id)
        if lemma not in project.words:
            raise HTTPException(404, f"unknown word {lemma!r}")
        require_annotation_rights(project_id, name)
        try:
            label = validate_label(int(body.get("label")))
        except (TypeError, ValueError) as exc:
            raise HTTPException(422, str(exc))
        word, sequence = annotator_sequence(project, lemma, name)
        instance = next(
            (i for i in word.instances if i.instance_id == instance_id), None
        )
        if instance is None:
            raise HTTPException(404, f"unknown instance {instance_id!r}")
        judged = {
            j.pair for j in store.load_judgments(project_id, lemma, annotator=name)
        }
        entry = sequence.next_instance()
        is_resubmission = instance.pair_key in judged
        if not is_resubmission and (entry is None or entry.instance_id != instance_id):
            raise HTTPException(409, "instance is not the annotator's current cursor instance")
        judgment = Judgment(
            pair=instance.pair_key,
            annotator=name,
            label=label,
            comment=body.get("comment") or "",
            timestamp=dt.datetime.now(dt.timezone.utc).replace(microsecond=0),
        )
        store.upsert_judgments(project_id, lemma, [judgment])
        return {
            "stored": True,
            "pair": list(judgment.pair),
            "label": judgment.label,
            "timestamp": judgment.timestamp.strftime("%Y-%m-%dT%H:%M:%SZ"),
        }

    # -- tasks --------------------------------------------------------------

    @app.post("/tasks", status_code=201)
    def create_task(body: dict, name: str = Depends(auth)):
        project_id = body.get("project_id", "")
        project = get_project(project_id)
        require_owner(project_id, name)
        spec_body = body.get("spec") or {}
        try:
            spec = AnnotatorSpec(
                name=spec_body.get("name", "Random"),
                kind=spec_body.get("kind", "random"),
                endpoint=spec_body.get("endpoint", ""),
                batch_size=int(spec_body.get("batch_size", 32)),
                timeout=float(spec_body.get("timeout", 30.0)),
                retries=int(spec_body.get("retries", 3)),
                label_range=BINARY_RANGE if spec_body.get("binary") else FULL_RANGE,
            )
        except ValidationError as exc:
            raise HTTPException(422, str(exc))
        lemmas = [body["word"]] if body.get("word") else sorted(project.words)
        for lemma in lemmas:
            if lemma not in project.words:
                raise HTTPException(404, f"unknown word {lemma!r}")
        stub_table = {
            tuple(sorted((row["identifier1"], row["identifier2"]))): int(row["label"])
            for row in body.get("stub_table", [])
        }
        task_ids = []
        threads = []
        for lemma in lemmas:
            task = AnnotationTask(
                task_id=uuid.uuid4().hex, project_id=project_id, lemma=lemma, spec=spec
            )
            store.save_task(task)
            if stub_table:
                _task_stub_tables[task.task_id] = stub_table
            task_ids.append(task.task_id)
            threads.append(threading.Thread(target=_execute_task, args=(task, project, lemma)))
        for thread in threads:
            thread.start()
        return {"task_ids": task_ids}

    def _execute_task(task: AnnotationTask, project: Project, lemma: str):
        word = project.words[lemma]
        annotator = build_annotator(
            task.spec,
            seed=scheduler.derive_seed(project.rng_seed, task.spec.name, lemma),
            stub_table=_task_stub_tables.get(task.task_id),
            transport=task_transport,
        )
        existing = {
            j.pair
            for j in store.load_judgments(project.project_id, lemma, annotator=task.spec.name)
        }

        def persist(judgments):
            store.upsert_judgments(project.project_id, lemma, judgments)
            store.save_task(task)

        run_task(task, word.instances, word.uses, existing, persist, annotator)
        store.save_task(task)

    _task_stub_tables: dict[str, dict] = {}

    @app.get("/tasks/{task_id}")
    def poll_task(task_id: str, name: str = Depends(auth)):
        try:
            task = store.load_task(task_id)
        except ValidationError as exc:
            raise HTTPException(404, str(exc))
        return {
            "task_id": task.task_id,
            "project_id": task.project_id,
            "word": task.lemma,
            "annotator": task.spec.name,
            "status": task.status,
            "done": task.done_count,
            "total": task.total,
            "error": task.error,
        }

    # -- inspection, statistics, export ------------------------------------

    @app.get("/projects/{project_id}/words/{lemma}/data")
    def query_data(
        project_id: str,
        lemma: str,
        kind: str = "uses",
        sort_by: str = "",
        descending: bool = False,
        name: str = Depends(auth),
    ):
        project = get_project(project_id)
        if lemma not in project.words:
            raise HTTPException(404, f"unknown word {lemma!r}")
        word = project.words[lemma]
        if kind == "uses":
            rows = [_concordance_row(u) for u in word.uses.values()]
        elif kind == "judgments":
            rows = []
            for j in store.load_judgments(project_id, lemma):
                u1, u2 = word.uses.get(j.pair[0]), word.uses.get(j.pair[1])
                rows.append(
                    {
                        "identifier1": j.pair[0],
                        "identifier2": j.pair[1],
                        "context1": u1.context if u1 else "",
                        "context2": u2.context if u2 else "",
                        "annotator": j.annotator,
                        "label": j.label,
                        "comment": j.comment,
                        "timestamp": j.timestamp.strftime("%Y-%m-%dT%H:%M:%SZ"),
                    }
                )
        else:
            raise HTTPException(422, f"unknown data kind {kind!r}")
        if sort_by:
            if rows and sort_by not in rows[0]:
                raise HTTPException(422, f"unknown sort column {sort_by!r}")
            rows.sort(key=lambda r: (r[sort_by] is None, r[sort_by]), reverse=descending)
        return rows

    @app.get("/projects/{project_id}/words/{lemma}/statistics")
    def statistics(project_id: str, lemma: str, name: str = Depends(auth)):
        project = get_project(project_id)
        computed = compute_cached(project, lemma)
        judgments = computed["judgments"]
        report = stats.agreement_report(judgments)
        wug, clustering = computed["wug"], computed["clustering"]
        from .graph import groupings

        tags = groupings(wug)
        change = None
        if len(tags) >= 2:
            changes = []
            for i, g1 in enumerate(tags):
                for g2 in tags[i + 1 :]:
                    r = stats.change_report(clustering, wug, g1, g2)
                    changes.append(
                        {
                            "groupings": [g1, g2],
                            "graded": r.graded,
                            "gained": sorted(r.gained),
                            "lost": sorted(r.lost),
                        }
                    )
            change = changes
        var = None
        if tags:
            var = {
                g: {"counts": {str(c): v for c, v in d.counts.items()}, "attested": a}
                for g, (d, a) in stats.variation(clustering, wug, tags).items()
            }
        return {
            "agreement": {
                "pairwise": [
                    {"annotators": list(k), "spearman": v[0], "overlap": v[1]}
                    for k, v in sorted(report.pairwise.items())
                ],
                "mean_spearman": report.mean_spearman,
                "alpha": report.alpha,
                "cannot_decide": report.cannot_decide,
            },
            "mean_labels": {
                "word": stats.mean_labels(judgments, lambda j: lemma).get(lemma),
                "annotator": stats.mean_labels(judgments, lambda j: j.annotator),
            },
            "change": change,
            "variation": var,
        }

    @app.get("/projects/{project_id}/words/{lemma}/clustering")
    def clustering_endpoint(project_id: str, lemma: str, name: str = Depends(auth)):
        project = get_project(project_id)
        computed = compute_cached(project, lemma)
        clustering = computed["clustering"]
        return {
            "assignment": clustering.assignment,
            "loss": clustering.loss,
            "clusters": {str(c): m for c, m in clustering.clusters().items()},
            "seed": clustering.seed,
            "restarts": clustering.restarts,
            "method": clustering.method,
        }

    @app.get("/projects/{project_id}/words/{lemma}/graph")
    def graph_endpoint(project_id: str, lemma: str, name: str = Depends(auth)):
        project = get_project(project_id)
        computed = compute_cached(project, lemma)
        document = artifacts.graph_document(
            computed["wug"], computed["clustering"], lemma, computed["judgments"],
            seed=project.rng_seed,
        )
        return Response(artifacts.dump_json(document), media_type="application/json")

    @app.get("/projects/{project_id}/export")
    def export(project_id: str, name: str = Depends(auth)):
        project = get_project(project_id)
        require_owner(project_id, name)
        all_uses = [u for w in project.words.values() for u in w.uses.values()]
        all_judgments = store.load_judgments(project_id)
        buffer = io.BytesIO()
        with zipfile.ZipFile(buffer, "w", zipfile.ZIP_DEFLATED) as archive:
            _write_member(archive, "uses.csv", ingest.serialize_uses(all_uses))
            if all_judgments:
                _write_member(archive, "judgments.csv", ingest.serialize_judgments(all_judgments))
                clusterings = {}
                for lemma in sorted(project.words):
                    word_judgments = store.load_judgments(project_id, lemma)
                    if not word_judgments:
                        continue
                    computed = compute_cached(project, lemma)
                    clusterings[lemma] = computed["clustering"]
                if clusterings:
                    _write_member(
                        archive, "clustering.csv", artifacts.clustering_csv(clusterings)
                    )
        return Response(
            buffer.getvalue(),
            media_type="application/zip",
            headers={"Content-Disposition": f'attachment; filename="{project_id}.zip"'},
        )

    # expose for tests
    app.state.task_stub_tables = _task_stub_tables
    return app


def _write_member(archive: zipfile.ZipFile, name: str, data: bytes) -> None:
    info = zipfile.ZipInfo(name, date_time=_ZIP_EPOCH)
    info.compress_type = zipfile.ZIP_DEFLATED
    archive.writestr(info, data)


def _parse_pairs(data: bytes) -> list[tuple[str, str]]:
    import csv as _csv

    text = data.decode("utf-8")
    reader = _csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or not {"identifier1", "identifier2"} <= set(reader.fieldnames):
        raise ValidationError("pairs file requires columns identifier1,identifier2")
    return [(row["identifier1"], row["identifier2"]) for row in reader]


def _use_payload(use) -> dict:
    start, end = use.span
    return {
        "use_id": use.use_id,
        "lemma": use.lemma,
        "context": use.context,
        "span": f"{start}:{end}",
        "target": use.target,
        "grouping": use.grouping,
        "date": use.date.isoformat() if use.date else None,
    }


def _concordance_row(use) -> dict:
    start, end = use.span
    return {
        "identifier": use.use_id,
        "left": use.context[:start],
        "target": use.context[start:end],
        "right": use.context[end:],
        "pos": use.pos,
        "date": use.date.isoformat() if use.date else None,
        "grouping": use.grouping,
    }
