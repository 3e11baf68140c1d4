"""Embedded persistence for projects, judgments, annotators and tasks.

Backed by sqlite3; CSV (see ingest) stays the interchange format. All writes
go through a process-wide lock, which also serializes judgment upserts per
(annotator, pair).
"""

from __future__ import annotations

import datetime as dt
import json
import sqlite3
import threading

from .annotators import AnnotationTask, AnnotatorSpec
from .model import AnnotationInstance, Judgment, Project, Use, ValidationError, parse_date

_SCHEMA = """
CREATE TABLE IF NOT EXISTS annotators (
    name TEXT PRIMARY KEY,
    token TEXT NOT NULL,
    passed_tutorial INTEGER NOT NULL DEFAULT 0
);
CREATE TABLE IF NOT EXISTS tutorial_attempts (
    name TEXT NOT NULL,
    rho REAL,
    mad REAL,
    passed INTEGER NOT NULL,
    ts TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS projects (
    project_id TEXT PRIMARY KEY,
    language TEXT NOT NULL,
    rng_seed INTEGER NOT NULL,
    public INTEGER NOT NULL DEFAULT 0,
    owner TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS access (
    project_id TEXT NOT NULL,
    annotator TEXT NOT NULL,
    PRIMARY KEY (project_id, annotator)
);
CREATE TABLE IF NOT EXISTS uses (
    project_id TEXT NOT NULL,
    use_id TEXT NOT NULL,
    lemma TEXT NOT NULL,
    context TEXT NOT NULL,
    start INTEGER NOT NULL,
    end INTEGER NOT NULL,
    pos TEXT,
    date TEXT,
    grouping TEXT,
    PRIMARY KEY (project_id, use_id)
);
CREATE TABLE IF NOT EXISTS instances (
    project_id TEXT NOT NULL,
    lemma TEXT NOT NULL,
    instance_id TEXT NOT NULL,
    use_first TEXT NOT NULL,
    use_second TEXT NOT NULL,
    PRIMARY KEY (project_id, instance_id)
);
CREATE TABLE IF NOT EXISTS judgments (
    project_id TEXT NOT NULL,
    lemma TEXT NOT NULL,
    id1 TEXT NOT NULL,
    id2 TEXT NOT NULL,
    annotator TEXT NOT NULL,
    label INTEGER NOT NULL,
    comment TEXT NOT NULL DEFAULT '',
    timestamp TEXT NOT NULL,
    PRIMARY KEY (project_id, annotator, id1, id2)
);
CREATE TABLE IF NOT EXISTS tasks (
    task_id TEXT PRIMARY KEY,
    project_id TEXT NOT NULL,
    lemma TEXT NOT NULL,
    spec TEXT NOT NULL,
    status TEXT NOT NULL,
    done_count INTEGER NOT NULL DEFAULT 0,
    total INTEGER NOT NULL DEFAULT 0,
    error TEXT NOT NULL DEFAULT ''
);
CREATE TABLE IF NOT EXISTS versions (
    project_id TEXT NOT NULL,
    lemma TEXT NOT NULL,
    version INTEGER NOT NULL DEFAULT 0,
    PRIMARY KEY (project_id, lemma)
);
"""


class Store:
    def __init__(self, path: str = ":memory:"):
        self.conn = sqlite3.connect(path, check_same_thread=False)
        self.conn.row_factory = sqlite3.Row
        self.lock = threading.RLock()
        with self.lock:
            self.conn.executescript(_SCHEMA)
            self.conn.commit()

    # -- annotators ---------------------------------------------------------

    def register_annotator(self, name: str, token: str) -> None:
        with self.lock:
            try:
                self.conn.execute(
                    "INSERT INTO annotators (name, token) VALUES (?, ?)", (name, token)
                )
                self.conn.commit()
            except sqlite3.IntegrityError:
                raise ValidationError(f"annotator {name!r} already registered") from None

    def check_token(self, name: str, token: str) -> bool:
        row = self.conn.execute(
            "SELECT token FROM annotators WHERE name = ?", (name,)
        ).fetchone()
        return row is not None and row["token"] == token

    def annotator_exists(self, name: str) -> bool:
        return (
            self.conn.execute("SELECT 1 FROM annotators WHERE name = ?", (name,)).fetchone()
            is not None
        )

    def passed_tutorial(self, name: str) -> bool:
        row = self.conn.execute(
            "SELECT passed_tutorial FROM annotators WHERE name = ?", (name,)
        ).fetchone()
        return bool(row and row["passed_tutorial"])

    def record_tutorial(self, name: str, rho, mad, passed: bool) -> None:
        with self.lock:
            self.conn.execute(
                "INSERT INTO tutorial_attempts (name, rho, mad, passed, ts) VALUES (?, ?, ?, ?, ?)",
                (name, rho, mad, int(passed), _now_text()),
            )
            if passed:
                self.conn.execute(
                    "UPDATE annotators SET passed_tutorial = 1 WHERE name = ?", (name,)
                )
            self.conn.commit()

    # -- projects -----------------------------------------------------------

    def save_project(self, project: Project, owner: str) -> None:
        with self.lock:
            if self.conn.execute(
                "SELECT 1 FROM projects WHERE project_id = ?", (project.project_id,)
            ).fetchone():
                raise ValidationError(f"project {project.project_id!r} already exists")
            self.conn.execute(
                "INSERT INTO projects (project_id, language, rng_seed, public, owner) VALUES (?, ?, ?, ?, ?)",
                (project.project_id, project.language, project.rng_seed, int(project.public), owner),
            )
            for word in project.words.values():
                for use in word.uses.values():
                    self.conn.execute(
                        "INSERT INTO uses VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?)",
                        (
                            project.project_id,
                            use.use_id,
                            use.lemma,
                            use.context,
                            use.span[0],
                            use.span[1],
                            use.pos,
                            use.date.isoformat() if use.date else None,
                            use.grouping,
                        ),
                    )
                for inst in word.instances:
                    self.conn.execute(
                        "INSERT INTO instances VALUES (?, ?, ?, ?, ?)",
                        (project.project_id, word.lemma, inst.instance_id, inst.use_first, inst.use_second),
                    )
                self.conn.execute(
                    "INSERT OR IGNORE INTO versions (project_id, lemma, version) VALUES (?, ?, 0)",
                    (project.project_id, word.lemma),
                )
            self.conn.commit()

    def load_project(self, project_id: str) -> Project:
        row = self.conn.execute(
            "SELECT * FROM projects WHERE project_id = ?", (project_id,)
        ).fetchone()
        if row is None:
            raise ValidationError(f"unknown project {project_id!r}")
        project = Project(
            project_id=project_id,
            language=row["language"],
            rng_seed=row["rng_seed"],
            public=bool(row["public"]),
        )
        for u in self.conn.execute(
            "SELECT * FROM uses WHERE project_id = ? ORDER BY use_id", (project_id,)
        ):
            project.word(u["lemma"]).add_use(
                Use(
                    use_id=u["use_id"],
                    lemma=u["lemma"],
                    context=u["context"],
                    span=(u["start"], u["end"]),
                    pos=u["pos"],
                    date=parse_date(u["date"]) if u["date"] else None,
                    grouping=u["grouping"],
                )
            )
        for i in self.conn.execute(
            "SELECT * FROM instances WHERE project_id = ? ORDER BY instance_id", (project_id,)
        ):
            project.word(i["lemma"]).instances.append(
                AnnotationInstance(
                    instance_id=i["instance_id"],
                    use_first=i["use_first"],
                    use_second=i["use_second"],
                )
            )
        for a in self.conn.execute(
            "SELECT annotator FROM access WHERE project_id = ?", (project_id,)
        ):
            project.access.add(a["annotator"])
        return project

    def project_owner(self, project_id: str) -> str:
        row = self.conn.execute(
            "SELECT owner FROM projects WHERE project_id = ?", (project_id,)
        ).fetchone()
        if row is None:
            raise ValidationError(f"unknown project {project_id!r}")
        return row["owner"]

    def list_projects(self, annotator: str | None = None) -> list[dict]:
        rows = self.conn.execute("SELECT * FROM projects ORDER BY project_id").fetchall()
        out = []
        for row in rows:
            entry = {
                "project_id": row["project_id"],
                "language": row["language"],
                "public": bool(row["public"]),
                "owner": row["owner"],
            }
            if (
                annotator is None
                or entry["public"]
                or entry["owner"] == annotator
                or self.has_access(row["project_id"], annotator)
            ):
                out.append(entry)
        return out

    def delete_project(self, project_id: str) -> None:
        with self.lock:
            for table in ("projects", "access", "uses", "instances", "judgments", "versions"):
                self.conn.execute(f"DELETE FROM {table} WHERE project_id = ?", (project_id,))
            self.conn.execute("DELETE FROM tasks WHERE project_id = ?", (project_id,))
            self.conn.commit()

    def grant_access(self, project_id: str, annotator: str) -> None:
        with self.lock:
            self.conn.execute(
                "INSERT OR IGNORE INTO access (project_id, annotator) VALUES (?, ?)",
                (project_id, annotator),
            )
            self.conn.commit()

    def set_public(self, project_id: str, public: bool) -> None:
        with self.lock:
            self.conn.execute(
                "UPDATE projects SET public = ? WHERE project_id = ?", (int(public), project_id)
            )
            self.conn.commit()

    def has_access(self, project_id: str, annotator: str) -> bool:
        row = self.conn.execute(
            "SELECT public, owner FROM projects WHERE project_id = ?", (project_id,)
        ).fetchone()
        if row is None:
            return False
        if row["public"] or row["owner"] == annotator:
            return True
        return (
            self.conn.execute(
                "SELECT 1 FROM access WHERE project_id = ? AND annotator = ?",
                (project_id, annotator),
            ).fetchone()
            is not None
        )

    # -- judgments ----------------------------------------------------------

    def upsert_judgments(self, project_id: str, lemma: str, judgments: list[Judgment]) -> None:
        with self.lock:
            for j in judgments:
                self.conn.execute(
                    "INSERT OR REPLACE INTO judgments VALUES (?, ?, ?, ?, ?, ?, ?, ?)",
                    (
                        project_id,
                        lemma,
                        j.pair[0],
                        j.pair[1],
                        j.annotator,
                        j.label,
                        j.comment,
                        j.timestamp.strftime("%Y-%m-%dT%H:%M:%SZ") if j.timestamp else _now_text(),
                    ),
                )
            self.conn.execute(
                "UPDATE versions SET version = version + 1 WHERE project_id = ? AND lemma = ?",
                (project_id, lemma),
            )
            self.conn.commit()

    def load_judgments(
        self, project_id: str, lemma: str | None = None, annotator: str | None = None
    ) -> list[Judgment]:
        query = "SELECT * FROM judgments WHERE project_id = ?"
        args: list = [project_id]
        if lemma is not None:
            query += " AND lemma = ?"
            args.append(lemma)
        if annotator is not None:
            query += " AND annotator = ?"
            args.append(annotator)
        query += " ORDER BY id1, id2, annotator"
        return [
            Judgment(
                pair=(row["id1"], row["id2"]),
                annotator=row["annotator"],
                label=row["label"],
                comment=row["comment"],
                timestamp=dt.datetime.fromisoformat(row["timestamp"].replace("Z", "+00:00")),
            )
            for row in self.conn.execute(query, args)
        ]

    def judgment_version(self, project_id: str, lemma: str) -> int:
        row = self.conn.execute(
            "SELECT version FROM versions WHERE project_id = ? AND lemma = ?",
            (project_id, lemma),
        ).fetchone()
        return row["version"] if row else 0

    # -- tasks --------------------------------------------------------------

    def save_task(self, task: AnnotationTask) -> None:
        with self.lock:
            self.conn.execute(
                "INSERT OR REPLACE INTO tasks VALUES (?, ?, ?, ?, ?, ?, ?, ?)",
                (
                    task.task_id,
                    task.project_id,
                    task.lemma,
                    json.dumps(
                        {
                            "name": task.spec.name,
                            "kind": task.spec.kind,
                            "endpoint": task.spec.endpoint,
                            "batch_size": task.spec.batch_size,
                            "timeout": task.spec.timeout,
                            "retries": task.spec.retries,
                            "label_range": sorted(task.spec.label_range),
                        }
                    ),
                    task.status,
                    task.done_count,
                    task.total,
                    task.error,
                ),
            )
            self.conn.commit()

    def load_task(self, task_id: str) -> AnnotationTask:
        row = self.conn.execute("SELECT * FROM tasks WHERE task_id = ?", (task_id,)).fetchone()
        if row is None:
            raise ValidationError(f"unknown task {task_id!r}")
        spec = json.loads(row["spec"])
        return AnnotationTask(
            task_id=row["task_id"],
            project_id=row["project_id"],
            lemma=row["lemma"],
            spec=AnnotatorSpec(
                name=spec["name"],
                kind=spec["kind"],
                endpoint=spec["endpoint"],
                batch_size=spec["batch_size"],
                timeout=spec["timeout"],
                retries=spec["retries"],
                label_range=frozenset(spec["label_range"]),
            ),
            status=row["status"],
            done_count=row["done_count"],
            total=row["total"],
            error=row["error"],
        )


def _now_text() -> str:
    return dt.datetime.now(dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
