"""Recorded hit-count observations and a backend that replays them.

Fixture CSV columns::

    engine,category,query,procedure,period,flags,hce,status,source

``procedure`` is ``total`` (no year filter), ``range`` (one custom-range query,
``period`` = ``FROM-TO``), ``year`` (``period`` = ``YYYY``) or ``longitudinal``
(a pre-summed year-by-year total over ``period``). ``status`` is ``ok`` or
``error`` (the engine refused to answer); ``hce`` is blank for errors.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .engine import (EngineServerError, HitCountEstimate, Query, ResultPage, flags_label,
                     parse_flags)
from .universe import ValidationError

FIXTURE_COLUMNS = ("engine", "category", "query", "procedure", "period", "flags", "hce", "status", "source")
PROCEDURES = ("total", "range", "year", "longitudinal")


class FixtureMissError(KeyError):
    """No recorded observation matches the request."""


def data_path(name: str) -> Path:
    """Path of a fixture shipped inside the package."""
    return Path(str(resources.files("indexsize") / "data" / name))


@dataclass(frozen=True)
class FixtureRow:
    engine: str
    category: str
    query: str
    procedure: str
    period: str
    flags: str
    hce: int | None
    status: str = "ok"
    source: str = ""

    @property
    def key(self) -> tuple:
        return (self.engine, self.category, self.query, self.procedure, self.period, self.flags)

    @property
    def years(self) -> tuple[int, int] | None:
        if not self.period:
            return None
        if "-" in self.period:
            lo, hi = self.period.split("-")
            return int(lo), int(hi)
        return int(self.period), int(self.period)


def period_label(years: tuple[int, int] | None) -> str:
    if years is None:
        return ""
    lo, hi = years
    return str(lo) if lo == hi else f"{lo}-{hi}"


def procedure_for(query: Query) -> str:
    if query.year_range is None:
        return "total"
    return "year" if query.year_range[0] == query.year_range[1] else "range"


def load_hce_fixture(path: str | Path) -> list[FixtureRow]:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in FIXTURE_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise ValidationError(missing[0], f"{path}: missing fixture column")
        for lineno, rec in enumerate(reader, start=2):
            if rec["procedure"] not in PROCEDURES:
                raise ValidationError("procedure", f"{path}:{lineno}: unknown procedure {rec['procedure']!r}")
            parse_flags(rec["flags"])
            raw = rec["hce"].replace(",", "").strip()
            status = rec["status"] or "ok"
            if status == "ok" and not raw:
                raise ValidationError("hce", f"{path}:{lineno}: missing hce for an ok row")
            rows.append(FixtureRow(
                engine=rec["engine"], category=rec["category"], query=rec["query"],
                procedure=rec["procedure"], period=rec["period"], flags=rec["flags"],
                hce=int(raw) if raw else None, status=status, source=rec["source"],
            ))
    return rows


def write_hce_fixture(rows: list[FixtureRow], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(FIXTURE_COLUMNS)
        for r in rows:
            writer.writerow([r.engine, r.category, r.query, r.procedure, r.period, r.flags,
                             "" if r.hce is None else r.hce, r.status, r.source])


class FixtureEngine:
    """Backend answering count queries from recorded observations only."""

    name = "fixture"

    def __init__(self, rows: list[FixtureRow], engine: str = "gs"):
        self.engine = engine
        self.rows = [r for r in rows if r.engine == engine]
        self._index = {r.key: r for r in self.rows}

    @classmethod
    def from_file(cls, path: str | Path, engine: str = "gs") -> "FixtureEngine":
        return cls(load_hce_fixture(path), engine)

    def capabilities(self) -> dict:
        return {
            "backend": self.name,
            "supports_year_filter": True,
            "supports_site_exclusion": True,
            "supports_paging": False,
            "longitudinal_totals": True,
        }

    def _lookup(self, category: str, query_text: str, procedure: str, period: str, flags: str) -> FixtureRow:
        key = (self.engine, category, query_text, procedure, period, flags)
        try:
            return self._index[key]
        except KeyError:
            raise FixtureMissError(key) from None

    def _value(self, row: FixtureRow, query_text: str) -> HitCountEstimate:
        if row.status == "error":
            raise EngineServerError(f"recorded server error for {query_text!r} ({row.source})")
        return HitCountEstimate(value=row.hce, rounded=False, diagnostics={"source": row.source})

    def count(self, query: Query) -> HitCountEstimate:
        row = self._lookup(query.category, query.text(), procedure_for(query),
                           period_label(query.year_range), query.flags)
        return self._value(row, query.text())

    def fetch_page(self, query: Query) -> ResultPage:
        raise NotImplementedError("recorded fixtures carry hit counts only")

    def has_longitudinal_total(self, category: str, query_text: str, years: tuple[int, int],
                               include_citations: bool = True, include_patents: bool = True) -> bool:
        key = (self.engine, category, query_text, "longitudinal", period_label(years),
               flags_label(include_citations, include_patents))
        return key in self._index

    def longitudinal_total(self, category: str, query_text: str, years: tuple[int, int],
                           include_citations: bool = True, include_patents: bool = True) -> HitCountEstimate:
        row = self._lookup(category, query_text, "longitudinal", period_label(years),
                           flags_label(include_citations, include_patents))
        return self._value(row, query_text)

    def series(self, category: str, query_text: str, procedure: str, flags: str) -> list[FixtureRow]:
        """Rows of one procedure/flag combination, ordered by period start."""
        rows = [r for r in self.rows if r.category == category and r.query == query_text
                and r.procedure == procedure and r.flags == flags]
        return sorted(rows, key=lambda r: r.years or (0, 0))
