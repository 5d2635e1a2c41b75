"""Empirical GS-vs-WoS comparison studies and the correction factor they imply.

Input is a long-format CSV, one count per row::

    study_id,unit,database,count,language,sample_note

``language`` is ``all`` (or blank) when the study does not split by language.
Rows sharing ``(study_id, unit)`` are assembled into one :class:`StudyRecord`.
"""

from __future__ import annotations

import csv
import math
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .universe import ValidationError

STUDY_COLUMNS = ("study_id", "unit", "database", "count", "language", "sample_note")
UNITS = ("documents", "unique-citing-documents", "citations", "other")
ALL_LANGUAGES = "all"


class SchemaError(ValueError):
    pass


class EmptyResultError(ValueError):
    pass


@dataclass(frozen=True)
class StudyRow:
    line: int
    study_id: str
    unit: str
    database: str
    count: int
    language: str = ALL_LANGUAGES
    sample_note: str = ""
    unit_label: str = ""


@dataclass(frozen=True)
class RowError:
    line: int
    message: str


@dataclass
class StudyRecord:
    study_id: str
    unit: str
    gs_count: int | None = None
    wos_count: int | None = None
    other_counts: dict[str, int] = field(default_factory=dict)
    sample_note: str = ""
    language_breakdown: dict[str, dict[str, int]] | None = None
    gs_language: str = ALL_LANGUAGES
    wos_language: str = ALL_LANGUAGES


@dataclass
class ParseResult:
    rows: list[StudyRow]
    errors: list[RowError]

    def records(self) -> list[StudyRecord]:
        return assemble_records(self.rows)


def _parse_count(text: str) -> int:
    cleaned = text.replace(",", "").replace(" ", "").strip()
    value = float(cleaned)  # ValueError for "n/a" and friends
    if not math.isfinite(value) or value != int(value):
        raise ValueError(f"not a whole count: {text!r}")
    if value < 0:
        raise ValueError(f"negative count: {text!r}")
    return int(value)


def parse_studies_csv(path: str | Path) -> ParseResult:
    """Parse a studies file; bad rows are reported by line number and skipped."""
    rows, errors = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in STUDY_COLUMNS if c not in header]
        if missing:
            raise SchemaError(f"{path}: missing column(s): {', '.join(missing)}")
        for line, rec in enumerate(reader, start=2):
            if not rec["study_id"]:
                errors.append(RowError(line, "empty study_id"))
                continue
            try:
                count = _parse_count(rec["count"] or "")
            except ValueError as exc:
                errors.append(RowError(line, f"count: {exc}"))
                continue
            label = (rec["unit"] or "").strip()
            rows.append(StudyRow(
                line=line,
                study_id=rec["study_id"].strip(),
                unit=label if label in UNITS else "other",
                database=rec["database"].strip().lower(),
                count=count,
                language=(rec["language"] or "").strip().lower() or ALL_LANGUAGES,
                sample_note=rec["sample_note"] or "",
                unit_label=label,
            ))
    return ParseResult(rows, errors)


def write_studies_csv(rows: Iterable[StudyRow], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(STUDY_COLUMNS)
        for r in rows:
            writer.writerow([r.study_id, r.unit_label or r.unit, r.database, r.count, r.language, r.sample_note])


def assemble_records(rows: Iterable[StudyRow]) -> list[StudyRecord]:
    groups: dict[tuple[str, str], list[StudyRow]] = {}
    for r in rows:
        groups.setdefault((r.study_id, r.unit if r.unit != "other" else r.unit_label), []).append(r)
    records = []
    for (study_id, _), members in groups.items():
        rec = StudyRecord(study_id=study_id, unit=members[0].unit,
                          sample_note=next((m.sample_note for m in members if m.sample_note), ""))
        by_db: dict[str, list[StudyRow]] = {}
        for m in members:
            by_db.setdefault(m.database, []).append(m)
        breakdown: dict[str, dict[str, int]] = {}
        for db, db_rows in by_db.items():
            main = [m for m in db_rows if m.language == ALL_LANGUAGES]
            if not main and len(db_rows) == 1:
                main = db_rows
            for m in db_rows:
                if m.language != ALL_LANGUAGES:
                    breakdown.setdefault(m.language, {})[db] = m.count
            if not main:
                continue
            chosen = main[0]
            if db == "gs":
                rec.gs_count, rec.gs_language = chosen.count, chosen.language
            elif db == "wos":
                rec.wos_count, rec.wos_language = chosen.count, chosen.language
            else:
                rec.other_counts[db] = chosen.count
        rec.language_breakdown = breakdown or None
        records.append(rec)
    return records


@dataclass(frozen=True)
class FilterPolicy:
    min_wos_count: int = 10
    allowed_units: tuple[str, ...] = ("documents", "unique-citing-documents")
    require_same_language_basis: bool = True


@dataclass
class RatioSet:
    unit: str
    ratios: list[tuple[str, float]]
    excluded: list[tuple[str, str]]

    @property
    def values(self) -> list[float]:
        return [r for _, r in self.ratios]


def study_ratios(records: Iterable[StudyRecord], unit: str, policy: FilterPolicy | None = None) -> RatioSet:
    """GS/WoS ratio for every study of ``unit`` that survives ``policy``."""
    policy = policy or FilterPolicy()
    if unit not in policy.allowed_units:
        raise ValidationError("unit", f"{unit!r} is not an allowed unit {policy.allowed_units}")
    ratios, excluded = [], []
    for rec in records:
        if rec.unit != unit:
            continue
        if rec.gs_count is None or rec.wos_count is None:
            if rec.gs_count is not None or rec.wos_count is not None:
                excluded.append((rec.study_id, "no paired GS and WoS counts"))
            continue
        if policy.require_same_language_basis and rec.gs_language != rec.wos_language:
            excluded.append((rec.study_id, f"language basis differs ({rec.gs_language} vs {rec.wos_language})"))
        elif rec.wos_count < max(policy.min_wos_count, 1):
            excluded.append((rec.study_id, f"WoS sample of {rec.wos_count} below minimum {policy.min_wos_count}"))
        else:
            ratios.append((rec.study_id, rec.gs_count / rec.wos_count))
    if not ratios:
        raise EmptyResultError(f"no study with unit {unit!r} survives the filter")
    return RatioSet(unit, ratios, excluded)


@dataclass(frozen=True)
class RatioSummary:
    median: float
    geometric_mean: float
    n: int


def summarize_ratios(ratios: Sequence[float] | Sequence[tuple[str, float]] | RatioSet) -> RatioSummary:
    if isinstance(ratios, RatioSet):
        values = ratios.values
    else:
        values = [r[1] if isinstance(r, tuple) else r for r in ratios]
    if not values:
        raise EmptyResultError("no ratios to summarize")
    if any(v <= 0 for v in values):
        raise ValidationError("ratios", "geometric mean undefined for non-positive ratios")
    geo = math.exp(math.fsum(math.log(v) for v in values) / len(values))
    return RatioSummary(median=statistics.median(values), geometric_mean=geo, n=len(values))
