"""Core domain types: uses, use pairs, judgments and the relatedness scale."""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field


class ValidationError(ValueError):
    """Raised when a domain value violates an invariant."""


# Judgment labels: 1..4 on the relatedness scale, 0 encodes "Cannot decide".
CANNOT_DECIDE = 0
VALID_LABELS = (0, 1, 2, 3, 4)

SCALE_LEVELS = {
    1: "Unrelated",
    2: "Distantly Related",
    3: "Closely Related",
    4: "Identical",
}

SCALE_INTERPRETATIONS = {
    1: "Homonymy",
    2: "Polysemy",
    3: "Context Variance",
    4: "Identity",
}

# Boundary between "low" and "high" proximity, strictly between levels 2 and 3.
THRESHOLD = 2.5


def validate_label(raw: int) -> int:
    """Return ``raw`` if it is a legal judgment label, else raise."""
    if raw not in VALID_LABELS:
        raise ValidationError(
            f"label {raw!r} not in permitted set {{0, 1, 2, 3, 4}} (0 = Cannot decide)"
        )
    return raw


def interpret_label(label: int) -> str:
    """Map a scale level 1..4 to its semantic relation name."""
    if label == CANNOT_DECIDE:
        raise ValidationError("Cannot decide (0) has no relation interpretation")
    validate_label(label)
    return SCALE_INTERPRETATIONS[label]


def pair_key(use_a: str, use_b: str) -> tuple[str, str]:
    """Canonical unordered key for a use pair (lexicographically sorted ids)."""
    if use_a == use_b:
        raise ValidationError(f"self-pair not allowed: {use_a!r}")
    return (use_a, use_b) if use_a < use_b else (use_b, use_a)


def parse_date(value: str) -> dt.date:
    """Accept ISO-8601 calendar dates or bare years (normalized to January 1)."""
    value = value.strip()
    if value.isdigit() and len(value) <= 4:
        return dt.date(int(value), 1, 1)
    try:
        return dt.date.fromisoformat(value)
    except ValueError as exc:
        raise ValidationError(f"unparseable date {value!r}: {exc}") from None


@dataclass(frozen=True)
class Use:
    """One occurrence of a target word in context.

    ``span`` holds 0-based, end-exclusive character offsets (Unicode scalar
    values) into ``context``; the target must be one continuous substring.
    """

    use_id: str
    lemma: str
    context: str
    span: tuple[int, int]
    pos: str | None = None
    date: dt.date | None = None
    grouping: str | None = None

    def __post_init__(self):
        start, end = self.span
        if not (0 <= start < end <= len(self.context)):
            raise ValidationError(
                f"use {self.use_id!r}: span {start}:{end} out of bounds for "
                f"context of length {len(self.context)}"
            )

    @property
    def target(self) -> str:
        start, end = self.span
        return self.context[start:end]


@dataclass(frozen=True)
class AnnotationInstance:
    """An unordered use pair scheduled for annotation."""

    instance_id: str
    use_first: str
    use_second: str

    def __post_init__(self):
        if self.use_first == self.use_second:
            raise ValidationError(f"instance {self.instance_id!r} pairs a use with itself")

    @property
    def pair_key(self) -> tuple[str, str]:
        return pair_key(self.use_first, self.use_second)


@dataclass(frozen=True)
class Judgment:
    """One annotator's proximity label for a use pair."""

    pair: tuple[str, str]
    annotator: str
    label: int
    comment: str = ""
    timestamp: dt.datetime | None = None

    def __post_init__(self):
        validate_label(self.label)
        object.__setattr__(self, "pair", pair_key(*self.pair))
        if self.timestamp is not None and self.timestamp.tzinfo is None:
            object.__setattr__(
                self, "timestamp", self.timestamp.replace(tzinfo=dt.timezone.utc)
            )


@dataclass
class WordEntry:
    """All uses and scheduled instances for one lemma within a project."""

    lemma: str
    uses: dict[str, Use] = field(default_factory=dict)
    instances: list[AnnotationInstance] = field(default_factory=list)

    def add_use(self, use: Use) -> None:
        if use.lemma != self.lemma:
            raise ValidationError(
                f"use {use.use_id!r} has lemma {use.lemma!r}, expected {self.lemma!r}"
            )
        if use.use_id in self.uses:
            raise ValidationError(f"duplicate use id {use.use_id!r}")
        self.uses[use.use_id] = use


@dataclass
class Project:
    """An annotation project: words, access list and the recorded RNG seed.

    ``rng_seed`` is immutable after creation so per-annotator sequences stay
    reproducible.
    """

    project_id: str
    language: str
    rng_seed: int
    words: dict[str, WordEntry] = field(default_factory=dict)
    access: set[str] = field(default_factory=set)
    public: bool = False

    def word(self, lemma: str) -> WordEntry:
        if lemma not in self.words:
            self.words[lemma] = WordEntry(lemma=lemma)
        return self.words[lemma]
