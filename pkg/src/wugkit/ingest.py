"""CSV parsing, validation and serialization for uses and judgments.

Dialect: RFC-4180 quoting, comma separator, UTF-8, mandatory header row.
Uses file columns: lemma,identifier,context,indexes_target_token,pos,date,grouping
Judgments file columns: identifier1,identifier2,annotator,judgment,comment,timestamp
"""

from __future__ import annotations

import csv
import datetime as dt
import io
from dataclasses import dataclass, field

from .model import Judgment, Use, ValidationError, parse_date, validate_label

USES_COLUMNS = ["lemma", "identifier", "context", "indexes_target_token", "pos", "date", "grouping"]
USES_REQUIRED = ["lemma", "identifier", "context", "indexes_target_token"]
JUDGMENTS_COLUMNS = ["identifier1", "identifier2", "annotator", "judgment", "comment", "timestamp"]


@dataclass
class RowError:
    row: int  # 1-based data row number, 0 for file-level errors
    message: str

    def __str__(self):
        return f"row {self.row}: {self.message}" if self.row else self.message


@dataclass
class ParseReport:
    """Exhaustive validation result: all row errors, not just the first."""

    errors: list[RowError] = field(default_factory=list)
    warnings: list[RowError] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def error(self, row: int, message: str) -> None:
        self.errors.append(RowError(row, message))

    def warn(self, row: int, message: str) -> None:
        self.warnings.append(RowError(row, message))


def _decode(data: bytes | str) -> str:
    if isinstance(data, bytes):
        return data.decode("utf-8")
    return data


def _read_rows(text: str, required: list[str], report: ParseReport):
    reader = csv.DictReader(io.StringIO(text), restkey="_extra")
    if reader.fieldnames is None:
        report.error(0, "empty file: header row required")
        return []
    missing = [c for c in required if c not in reader.fieldnames]
    if missing:
        report.error(0, f"missing required columns: {', '.join(missing)}")
        return []
    try:
        return list(reader)
    except csv.Error as exc:
        report.error(0, f"malformed CSV: {exc}")
        return []


def parse_span(value: str) -> tuple[int, int]:
    """Parse a 'start:end' character span."""
    parts = value.split(":")
    if len(parts) != 2:
        raise ValidationError(f"span {value!r} is not of the form start:end")
    try:
        start, end = int(parts[0]), int(parts[1])
    except ValueError:
        raise ValidationError(f"span {value!r} has non-integer offsets") from None
    return start, end


def format_span(span: tuple[int, int]) -> str:
    return f"{span[0]}:{span[1]}"


def parse_uses(data: bytes | str) -> tuple[list[Use], ParseReport]:
    """Parse a uses CSV, collecting every row-level error."""
    report = ParseReport()
    rows = _read_rows(_decode(data), USES_REQUIRED, report)
    uses: list[Use] = []
    seen: set[str] = set()
    for i, row in enumerate(rows, start=1):
        try:
            identifier = (row.get("identifier") or "").strip()
            if not identifier:
                raise ValidationError("empty identifier")
            if identifier in seen:
                raise ValidationError(f"duplicate identifier {identifier!r}")
            span = parse_span(row.get("indexes_target_token") or "")
            date_raw = (row.get("date") or "").strip()
            use = Use(
                use_id=identifier,
                lemma=(row.get("lemma") or "").strip(),
                context=row.get("context") or "",
                span=span,
                pos=(row.get("pos") or "").strip() or None,
                date=parse_date(date_raw) if date_raw else None,
                grouping=(row.get("grouping") or "").strip() or None,
            )
            if not use.lemma:
                raise ValidationError("empty lemma")
            seen.add(identifier)
            uses.append(use)
        except ValidationError as exc:
            report.error(i, str(exc))
    return uses, report


def _parse_timestamp(value: str) -> dt.datetime:
    try:
        stamp = dt.datetime.fromisoformat(value.replace("Z", "+00:00"))
    except ValueError:
        raise ValidationError(f"malformed timestamp {value!r}") from None
    if stamp.tzinfo is None:
        stamp = stamp.replace(tzinfo=dt.timezone.utc)
    return stamp.astimezone(dt.timezone.utc)


def parse_judgments(data: bytes | str) -> tuple[list[Judgment], ParseReport]:
    """Parse a judgments CSV.

    Later duplicates for the same (annotator, pair) overwrite earlier ones and
    are reported as warnings.
    """
    report = ParseReport()
    rows = _read_rows(_decode(data), JUDGMENTS_COLUMNS, report)
    by_key: dict[tuple[str, tuple[str, str]], Judgment] = {}
    for i, row in enumerate(rows, start=1):
        try:
            raw_label = (row.get("judgment") or "").strip()
            try:
                label = int(raw_label)
            except ValueError:
                raise ValidationError(f"unknown judgment token {raw_label!r}") from None
            validate_label(label)
            judgment = Judgment(
                pair=(row["identifier1"], row["identifier2"]),
                annotator=row["annotator"],
                label=label,
                comment=row.get("comment") or "",
                timestamp=_parse_timestamp(row.get("timestamp") or ""),
            )
            key = (judgment.annotator, judgment.pair)
            if key in by_key:
                report.warn(i, f"duplicate judgment for {key}, overwriting earlier row")
            by_key[key] = judgment
        except ValidationError as exc:
            report.error(i, str(exc))
    return list(by_key.values()), report


def _format_timestamp(stamp: dt.datetime) -> str:
    return stamp.astimezone(dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def serialize_judgments(judgments: list[Judgment]) -> bytes:
    """Serialize judgments, sorted by (pair, annotator) for determinism.

    parse_judgments(serialize_judgments(J)) == J up to duplicate-overwrite
    normalization and sub-second timestamp truncation.
    """
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(JUDGMENTS_COLUMNS)
    for j in sorted(judgments, key=lambda j: (j.pair, j.annotator)):
        writer.writerow(
            [
                j.pair[0],
                j.pair[1],
                j.annotator,
                j.label,
                j.comment,
                _format_timestamp(j.timestamp) if j.timestamp else "",
            ]
        )
    return out.getvalue().encode("utf-8")


def serialize_uses(uses: list[Use]) -> bytes:
    """Serialize uses in the ingest column order, sorted by (lemma, id)."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(USES_COLUMNS)
    for u in sorted(uses, key=lambda u: (u.lemma, u.use_id)):
        writer.writerow(
            [
                u.lemma,
                u.use_id,
                u.context,
                format_span(u.span),
                u.pos or "",
                u.date.isoformat() if u.date else "",
                u.grouping or "",
            ]
        )
    return out.getvalue().encode("utf-8")
