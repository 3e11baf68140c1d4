"""Computational annotators: the Random baseline, a deterministic stub for
tests, and the client for remote Word-in-Context annotation services.

Remote wire protocol: POST /annotate with a JSON list of
{context1, span1, context2, span2, lemma}; the response is a JSON list of
integer labels, positionally aligned.
"""

from __future__ import annotations

import datetime as dt
import random
import time
from dataclasses import dataclass, field

import httpx

from .model import (
    AnnotationInstance,
    Judgment,
    Use,
    ValidationError,
    validate_label,
)
from .ingest import format_span

FULL_RANGE = frozenset({1, 2, 3, 4})
BINARY_RANGE = frozenset({1, 4})


@dataclass(frozen=True)
class AnnotatorSpec:
    name: str
    kind: str  # random | stub | remote
    endpoint: str = ""
    batch_size: int = 32
    timeout: float = 30.0
    retries: int = 3
    label_range: frozenset[int] = FULL_RANGE

    def __post_init__(self):
        if self.kind not in ("random", "stub", "remote"):
            raise ValidationError(f"unknown annotator kind {self.kind!r}")
        if self.kind == "remote" and not self.endpoint:
            raise ValidationError("remote annotator requires an endpoint")
        if self.batch_size < 1:
            raise ValidationError("batch size must be >= 1")


class RandomAnnotator:
    """Uniform baseline over labels 1..4; never emits Cannot decide.

    ``fixed_timestamp`` makes output byte-reproducible for batch runs.
    """

    name = "Random"

    def __init__(self, seed: int = 0, fixed_timestamp: dt.datetime | None = None):
        self._rng = random.Random(seed)
        self._timestamp = fixed_timestamp

    def annotate(self, instance: AnnotationInstance, uses: dict[str, Use]) -> Judgment:
        return Judgment(
            pair=instance.pair_key,
            annotator=self.name,
            label=self._rng.randint(1, 4),
            timestamp=self._timestamp or _now(),
        )


class StubAnnotator:
    """Table-driven annotator used as a hermetic stand-in for remote models."""

    def __init__(
        self,
        table: dict[tuple[str, str], int],
        name: str = "Stub",
        default: int | None = None,
        fixed_timestamp: dt.datetime | None = None,
    ):
        self.name = name
        self.table = table
        self.default = default
        self._timestamp = fixed_timestamp

    def annotate(self, instance: AnnotationInstance, uses: dict[str, Use]) -> Judgment:
        key = instance.pair_key
        if key in self.table:
            label = self.table[key]
        elif self.default is not None:
            label = self.default
        else:
            raise ValidationError(f"stub annotator has no label for pair {key}")
        return Judgment(
            pair=key, annotator=self.name, label=label, timestamp=self._timestamp or _now()
        )


class RemoteAnnotator:
    """Batched client for a remote annotation endpoint with retry/backoff."""

    def __init__(self, spec: AnnotatorSpec, transport: httpx.BaseTransport | None = None,
                 backoff: float = 0.5):
        if spec.kind != "remote":
            raise ValidationError("RemoteAnnotator requires a remote spec")
        self.spec = spec
        self.name = spec.name
        self._client = httpx.Client(transport=transport, timeout=spec.timeout)
        self._backoff = backoff

    def annotate_batch(
        self, instances: list[AnnotationInstance], uses: dict[str, Use]
    ) -> list[Judgment]:
        payload = []
        for inst in instances:
            u1, u2 = uses[inst.use_first], uses[inst.use_second]
            payload.append(
                {
                    "context1": u1.context,
                    "span1": format_span(u1.span),
                    "context2": u2.context,
                    "span2": format_span(u2.span),
                    "lemma": u1.lemma,
                }
            )
        labels = self._post_with_retry(payload)
        if len(labels) != len(instances):
            raise ValidationError(
                f"remote annotator returned {len(labels)} labels for {len(instances)} items"
            )
        judgments = []
        for inst, label in zip(instances, labels):
            if not isinstance(label, int) or label not in self.spec.label_range:
                raise ValidationError(
                    f"label {label!r} violates annotator contract "
                    f"{sorted(self.spec.label_range)}"
                )
            validate_label(label)
            judgments.append(
                Judgment(pair=inst.pair_key, annotator=self.name, label=label, timestamp=_now())
            )
        return judgments

    def _post_with_retry(self, payload: list[dict]) -> list:
        url = self.spec.endpoint.rstrip("/") + "/annotate"
        last_error: Exception | None = None
        for attempt in range(self.spec.retries + 1):
            try:
                response = self._client.post(url, json=payload)
                response.raise_for_status()
                body = response.json()
                if not isinstance(body, list):
                    raise ValidationError(f"malformed response body: {type(body).__name__}")
                return body
            except (httpx.HTTPError, ValueError) as exc:
                last_error = exc
                if attempt < self.spec.retries:
                    time.sleep(self._backoff * (2**attempt))
        raise ValidationError(f"remote annotation failed after retries: {last_error}")

    def close(self) -> None:
        self._client.close()


@dataclass
class AnnotationTask:
    """One computational annotation run over a word's instances."""

    task_id: str
    project_id: str
    lemma: str
    spec: AnnotatorSpec
    status: str = "queued"  # queued | running | done | failed
    done_count: int = 0
    total: int = 0
    error: str = ""

    _ORDER = ("queued", "running", "done", "failed")

    def transition(self, status: str) -> None:
        if self._ORDER.index(status) < self._ORDER.index(self.status):
            raise ValidationError(f"illegal status transition {self.status} -> {status}")
        self.status = status


def build_annotator(spec: AnnotatorSpec, seed: int = 0,
                    stub_table: dict[tuple[str, str], int] | None = None,
                    stub_default: int | None = None,
                    transport: httpx.BaseTransport | None = None,
                    fixed_timestamp: dt.datetime | None = None):
    if spec.kind == "random":
        return RandomAnnotator(seed=seed, fixed_timestamp=fixed_timestamp)
    if spec.kind == "stub":
        return StubAnnotator(stub_table or {}, name=spec.name, default=stub_default,
                             fixed_timestamp=fixed_timestamp)
    return RemoteAnnotator(spec, transport=transport)


def run_task(
    task: AnnotationTask,
    instances: list[AnnotationInstance],
    uses: dict[str, Use],
    existing: set[tuple[str, str]],
    persist,
    annotator,
) -> AnnotationTask:
    """Annotate every not-yet-judged instance in batches, persisting as we go.

    ``existing`` holds pair keys already judged under this annotator's name,
    so reruns and resumed tasks are idempotent. ``persist`` receives each
    batch of judgments. On failure the task ends "failed" with the progress
    made so far preserved.
    """
    pending = [i for i in sorted(instances, key=lambda i: i.instance_id)
               if i.pair_key not in existing]
    task.total = len(pending)
    task.transition("running")
    batch_size = task.spec.batch_size
    try:
        for start in range(0, len(pending), batch_size):
            batch = pending[start : start + batch_size]
            if hasattr(annotator, "annotate_batch"):
                judgments = annotator.annotate_batch(batch, uses)
            else:
                judgments = [annotator.annotate(inst, uses) for inst in batch]
            persist(judgments)
            task.done_count += len(judgments)
        task.transition("done")
    except ValidationError as exc:
        task.error = str(exc)
        task.transition("failed")
    return task


def _now() -> dt.datetime:
    return dt.datetime.now(dt.timezone.utc).replace(microsecond=0)
