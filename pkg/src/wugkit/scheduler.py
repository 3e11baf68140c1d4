"""Annotation scheduling: full pairing, per-annotator randomized sequences
with 0.5-probability pair-order swapping, and uploaded pair lists."""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field
from itertools import combinations

from .model import AnnotationInstance, Use, ValidationError, pair_key


def generate_full_pairing(uses: list[Use]) -> list[AnnotationInstance]:
    """All unordered use pairs of one lemma: n(n-1)/2 instances, no self-pairs."""
    lemmas = {u.lemma for u in uses}
    if len(lemmas) > 1:
        raise ValidationError(f"full pairing requires a single lemma, got {sorted(lemmas)}")
    ids = sorted(u.use_id for u in uses)
    return [
        AnnotationInstance(instance_id=f"{a}--{b}", use_first=a, use_second=b)
        for a, b in combinations(ids, 2)
    ]


def accept_uploaded_pairs(
    pairs: list[tuple[str, str]], known_ids: set[str]
) -> list[AnnotationInstance]:
    """Instances for a user-defined pair list, deduplicated on the unordered key."""
    seen: set[tuple[str, str]] = set()
    instances = []
    for a, b in pairs:
        for use_id in (a, b):
            if use_id not in known_ids:
                raise ValidationError(f"unknown use id {use_id!r} in uploaded pair")
        key = pair_key(a, b)  # rejects self-pairs
        if key in seen:
            continue
        seen.add(key)
        instances.append(
            AnnotationInstance(instance_id=f"{key[0]}--{key[1]}", use_first=key[0], use_second=key[1])
        )
    return instances


def derive_seed(project_seed: int, annotator: str, lemma: str) -> int:
    """Stable per-(annotator, lemma) seed derived from the project seed."""
    digest = hashlib.sha256(f"{project_seed}|{annotator}|{lemma}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass
class SequenceEntry:
    instance_id: str
    swapped: bool


@dataclass
class AnnotatorSequence:
    """One annotator's randomized pass over a word's instances.

    The cursor advances on judgment submission, not on viewing, so annotation
    can be paused and resumed at any point.
    """

    annotator: str
    entries: list[SequenceEntry]
    cursor: int = 0

    def next_instance(self) -> SequenceEntry | None:
        """Entry at the cursor, or None when the sequence is done."""
        if self.cursor >= len(self.entries):
            return None
        return self.entries[self.cursor]

    def advance(self) -> None:
        if self.cursor < len(self.entries):
            self.cursor += 1

    def remaining(self) -> int:
        return len(self.entries) - self.cursor


def build_sequence(
    instances: list[AnnotationInstance],
    annotator: str,
    seed: int,
    judged: set[tuple[str, str]] = frozenset(),
) -> AnnotatorSequence:
    """Uniform shuffle of instances with independent 0.5 swap flags.

    Deterministic given (instances, annotator, seed). ``judged`` holds pair
    keys already answered by this annotator; the cursor is placed after them
    so a rebuilt sequence resumes where the annotator left off.
    """
    rng = random.Random(seed)
    ordered = sorted(instances, key=lambda i: i.instance_id)
    rng.shuffle(ordered)
    entries = [SequenceEntry(i.instance_id, rng.random() < 0.5) for i in ordered]
    sequence = AnnotatorSequence(annotator=annotator, entries=entries)
    by_id = {i.instance_id: i for i in instances}
    while sequence.cursor < len(entries):
        instance = by_id[entries[sequence.cursor].instance_id]
        if instance.pair_key not in judged:
            break
        sequence.cursor += 1
    return sequence


def presentation_order(instance: AnnotationInstance, swapped: bool) -> tuple[str, str]:
    """Use ids in the order shown to the annotator; never affects the pair key."""
    if swapped:
        return (instance.use_second, instance.use_first)
    return (instance.use_first, instance.use_second)
