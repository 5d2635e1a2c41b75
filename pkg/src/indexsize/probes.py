"""Query protocols against an engine backend, plus audits of what comes back.

Protocols: longitudinal (one query per year, summed), sectional (one query per
custom year range), absurd (a common term minus a nonexistent site). Audits
turn contradictory hit counts into :class:`InconsistencyFinding` records; they
never clamp or repair the counts themselves.
"""

from __future__ import annotations

import csv
import math
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .engine import (FLAG_LABELS, EngineBackend, EngineServerError, HitCountEstimate, Query,
                     flags_label, parse_flags)
from .estimators import EstimateResult
from .fixtures import FixtureMissError, period_label
from .universe import ValidationError

ALL_FLAGS = FLAG_LABELS[(True, True)]
FINDING_KINDS = ("range-non-monotone", "flag-exclusion-negative", "false-serp", "citation-toggle-shrink")
ABSURD_MODES = ("total", "custom-range", "longitudinal")
_HOSTNAME = re.compile(r"^(?=.{1,253}$)([A-Za-z0-9]([A-Za-z0-9-]{0,61}[A-Za-z0-9])?\.)+[A-Za-z]{2,63}$")


class UndefinedCorrelationError(ArithmeticError):
    pass


@dataclass(frozen=True)
class InconsistencyFinding:
    kind: str
    where: str
    magnitude: int
    detail: str = ""

    def __post_init__(self):
        if self.kind not in FINDING_KINDS:
            raise ValidationError("kind", f"unknown finding kind {self.kind!r}")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "where": self.where, "magnitude": self.magnitude, "detail": self.detail}


@dataclass
class YearSeries:
    points: list[tuple[int, HitCountEstimate]]
    flags: str = ALL_FLAGS
    category: str = "articles"
    errors: dict[int, str] = field(default_factory=dict)

    def __post_init__(self):
        years = [y for y, _ in self.points]
        if any(b <= a for a, b in zip(years, years[1:])):
            raise ValidationError("points", "years must be strictly increasing")

    @classmethod
    def from_counts(cls, counts: Mapping[int, int], **kwargs) -> "YearSeries":
        return cls([(y, HitCountEstimate(int(v))) for y, v in sorted(counts.items())], **kwargs)

    @property
    def years(self) -> list[int]:
        return [y for y, _ in self.points]

    @property
    def values(self) -> list[int]:
        return [h.value for _, h in self.points]

    def as_dict(self) -> dict[int, int]:
        return {y: h.value for y, h in self.points}

    @property
    def complete(self) -> bool:
        return not self.errors

    @property
    def total(self) -> int:
        return sum(self.values)


def years_between(lo: int, hi: int) -> list[int]:
    if lo > hi:
        raise ValidationError("years", f"inverted range ({lo}, {hi})")
    return list(range(lo, hi + 1))


def _query(term: str, site: str | None, years, flags: str, category: str) -> Query:
    cit, pat = parse_flags(flags)
    return Query(term=term, excluded_site=site, year_range=years, include_citations=cit,
                 include_patents=pat, category=category)


def longitudinal_sum(engine: EngineBackend, years: Iterable[int], flags: str = ALL_FLAGS,
                     category: str = "articles", term: str = "", excluded_site: str | None = None,
                     delay: float = 0.0, fan_out: int = 1) -> tuple[YearSeries, int]:
    """One count query per year; the total is the plain sum of the per-year estimates.

    A failing year is recorded in ``series.errors`` and left out of the total,
    which makes ``series.complete`` false.
    """
    years = sorted(set(int(y) for y in years))
    if not years:
        raise ValidationError("years", "at least one year is required")

    def one(year: int):
        if delay:
            time.sleep(delay)
        try:
            return year, engine.count(_query(term, excluded_site, (year, year), flags, category)), None
        except EngineServerError as exc:
            return year, None, str(exc)

    if fan_out > 1:
        with ThreadPoolExecutor(max_workers=fan_out) as pool:
            results = list(pool.map(one, years))
    else:
        results = [one(y) for y in years]
    results.sort(key=lambda r: r[0])
    series = YearSeries(
        points=[(y, h) for y, h, err in results if err is None],
        flags=flags, category=category,
        errors={y: err for y, _, err in results if err is not None},
    )
    return series, series.total


def _longitudinal_total(engine: EngineBackend, years: Sequence[int], flags: str, category: str,
                        term: str, site: str | None) -> tuple[int, YearSeries | None, dict]:
    """Year-by-year total, using a recorded total when the backend only replays totals."""
    span = (min(years), max(years))
    cit, pat = parse_flags(flags)
    query_text = _query(term, site, None, flags, category).text()
    if engine.capabilities().get("longitudinal_totals") and hasattr(engine, "longitudinal_total"):
        hce = engine.longitudinal_total(category, query_text, span, cit, pat)
        return hce.value, None, {"replayed_total": True, "period": period_label(span)}
    series, total = longitudinal_sum(engine, years, flags, category, term, site)
    return total, series, {"complete": series.complete, "failed_years": sorted(series.errors)}


def _contained(inner: tuple[int, int], outer: tuple[int, int]) -> bool:
    return inner != outer and outer[0] <= inner[0] and inner[1] <= outer[1]


@dataclass
class SectionalResult:
    points: list[tuple[tuple[int, int], HitCountEstimate]]
    findings: list[InconsistencyFinding]
    errors: dict[tuple[int, int], str] = field(default_factory=dict)

    @property
    def total(self) -> int:
        return sum(h.value for _, h in self.points)


def range_monotonicity(points: Sequence[tuple[tuple[int, int], int]]) -> list[InconsistencyFinding]:
    """A narrower range must never report more hits than a range containing it."""
    findings = []
    for inner, inner_v in points:
        for outer, outer_v in points:
            if _contained(inner, outer) and inner_v > outer_v:
                findings.append(InconsistencyFinding(
                    "range-non-monotone", f"{period_label(outer)} vs {period_label(inner)}",
                    outer_v - inner_v,
                    f"{period_label(inner)} reports {inner_v} > {outer_v} for {period_label(outer)}",
                ))
    return findings


def sectional_probe(engine: EngineBackend, ranges: Iterable[tuple[int, int]], flags: str = ALL_FLAGS,
                    category: str = "articles", term: str = "", excluded_site: str | None = None) -> SectionalResult:
    points, errors = [], {}
    for r in ranges:
        r = (int(r[0]), int(r[1]))
        try:
            points.append((r, engine.count(_query(term, excluded_site, r, flags, category))))
        except EngineServerError as exc:
            errors[r] = str(exc)
    findings = range_monotonicity([(r, h.value) for r, h in points])
    return SectionalResult(points, findings, errors)


def absurd_probe(engine: EngineBackend, term: str, excluded_site: str, flags: str = ALL_FLAGS,
                 mode: str = "total", category: str = "articles",
                 years: Sequence[int] | tuple[int, int] | None = None, control: bool = True) -> EstimateResult:
    """Ask for every record: ``<term> -site:<nonexistent host>``.

    ``years`` is a ``(from, to)`` pair for ``custom-range`` and a year list (or
    pair) for ``longitudinal``. With ``control`` the citation toggle is also
    flipped on both the absurd and the empty query to report whether the
    absurd form silently ignores citations.
    """
    if not term:
        raise ValidationError("term", "site exclusion needs a search term in front of it")
    if not excluded_site or not _HOSTNAME.match(excluded_site):
        raise ValidationError("excluded_site", f"not a hostname: {excluded_site!r}")
    if mode not in ABSURD_MODES:
        raise ValidationError("mode", f"must be one of {ABSURD_MODES}")

    diagnostics: dict = {}
    series = None
    span = None
    if mode != "total":
        if years is None:
            raise ValidationError("years", f"mode {mode!r} needs a year range")
        years = list(years)
        span = (min(years), max(years))
    if mode == "longitudinal":
        year_list = years if len(years) > 2 else years_between(*span)
        value, series, extra = _longitudinal_total(engine, year_list, flags, category, term, excluded_site)
        diagnostics.update(extra)
    else:
        hce = engine.count(_query(term, excluded_site, span, flags, category))
        value = hce.value
        diagnostics.update(hce.diagnostics)
    if control:
        diagnostics["citations_dropped"] = _citation_control(engine, term, excluded_site, flags, category, span)
    query_text = _query(term, excluded_site, None, flags, category).text()
    return EstimateResult(
        method=f"absurd-{mode}",
        estimate=int(value),
        inputs={"query": query_text, "mode": mode, "flags": flags, "category": category,
                "period": period_label(span)},
        diagnostics=diagnostics | ({"series_years": len(series.points)} if series else {}),
        provenance=f"{engine.capabilities().get('backend', 'engine')}:{category}:{query_text}:{mode}",
    )


def _citation_control(engine, term, site, flags, category, span) -> bool | str:
    """True when flipping the citation toggle changes the empty query but not the absurd one."""
    _, pat = parse_flags(flags)
    on, off = flags_label(True, pat), flags_label(False, pat)
    try:
        absurd_on = engine.count(_query(term, site, span, on, category)).value
        absurd_off = engine.count(_query(term, site, span, off, category)).value
        empty_on = engine.count(_query("", None, span, on, category)).value
        empty_off = engine.count(_query("", None, span, off, category)).value
    except (FixtureMissError, EngineServerError, NotImplementedError):
        return "unavailable"
    return absurd_on == absurd_off and empty_on > empty_off


@dataclass
class Composition:
    totals: dict[str, int]
    shares: dict[str, float]
    findings: list[InconsistencyFinding]
    series: dict[str, YearSeries] = field(default_factory=dict)


def composition_from_totals(all_: int, records_citations: int, records_patents: int,
                            records: int) -> dict[str, int]:
    """Split an all-inclusive count by subtracting flag-restricted counts."""
    return {
        "records": records,
        "citations": all_ - records_patents,
        "patents": all_ - records_citations,
        "all": all_,
    }


def _shares(parts: dict[str, int]) -> dict[str, float]:
    if parts["all"] <= 0:
        return {k: 0.0 for k in ("records", "citations", "patents")}
    return {k: parts[k] / parts["all"] for k in ("records", "citations", "patents")}


def composition_breakdown(engine: EngineBackend, years: Iterable[int], category: str = "articles",
                          term: str = "", excluded_site: str | None = None) -> Composition:
    """Shares of records, citations and patents from four flag combinations.

    Negative components are kept as they are and reported as findings.
    """
    years = sorted(set(years))
    labels = {"all": ALL_FLAGS, "rc": flags_label(True, False), "rp": flags_label(False, True),
              "r": flags_label(False, False)}
    if engine.capabilities().get("longitudinal_totals"):
        vals = {k: _longitudinal_total(engine, years, f, category, term, excluded_site)[0]
                for k, f in labels.items()}
        parts = composition_from_totals(vals["all"], vals["rc"], vals["rp"], vals["r"])
        findings = _component_findings(parts, period_label((years[0], years[-1])))
        return Composition(parts, _shares(parts), findings)

    series = {k: longitudinal_sum(engine, years, f, category, term, excluded_site)[0]
              for k, f in labels.items()}
    per_year = {k: s.as_dict() for k, s in series.items()}
    common = sorted(set.intersection(*(set(d) for d in per_year.values())))
    findings = []
    totals = {"records": 0, "citations": 0, "patents": 0, "all": 0}
    for y in common:
        parts = composition_from_totals(per_year["all"][y], per_year["rc"][y], per_year["rp"][y], per_year["r"][y])
        findings.extend(_component_findings(parts, str(y)))
        for k in totals:
            totals[k] += parts[k]
    return Composition(totals, _shares(totals), findings, {labels[k]: s for k, s in series.items()})


def _component_findings(parts: dict[str, int], where: str) -> list[InconsistencyFinding]:
    out = []
    if parts["patents"] < 0:
        out.append(InconsistencyFinding("flag-exclusion-negative", where, parts["patents"],
                                        "excluding patents returned more hits"))
    if parts["citations"] < 0:
        out.append(InconsistencyFinding("citation-toggle-shrink", where, parts["citations"],
                                        "including citations returned fewer hits"))
    return out


def flag_inconsistencies(series_inclusive: YearSeries, series_excluding: YearSeries,
                         kind: str = "flag-exclusion-negative") -> list[InconsistencyFinding]:
    """One finding per year where the restricted query outnumbers the inclusive one."""
    inc, exc = series_inclusive.as_dict(), series_excluding.as_dict()
    if set(inc) != set(exc):
        raise ValidationError("series", "inclusive and excluding series cover different years")
    return [
        InconsistencyFinding(kind, str(y), inc[y] - exc[y],
                             f"{series_excluding.flags} {exc[y]} > {series_inclusive.flags} {inc[y]}")
        for y in sorted(inc) if exc[y] > inc[y]
    ]


def citation_toggle_audit(engine: EngineBackend, years: Iterable[int], category: str = "articles",
                          term: str = "", excluded_site: str | None = None,
                          include_patents: bool = True) -> list[InconsistencyFinding]:
    with_cit, _ = longitudinal_sum(engine, years, flags_label(True, include_patents), category, term, excluded_site)
    without, _ = longitudinal_sum(engine, years, flags_label(False, include_patents), category, term, excluded_site)
    return flag_inconsistencies(*_common_years(with_cit, without), kind="citation-toggle-shrink")


def patent_flag_audit(engine: EngineBackend, years: Iterable[int], category: str = "articles",
                      term: str = "", excluded_site: str | None = None) -> list[InconsistencyFinding]:
    inclusive, _ = longitudinal_sum(engine, years, ALL_FLAGS, category, term, excluded_site)
    excluding, _ = longitudinal_sum(engine, years, flags_label(True, False), category, term, excluded_site)
    return flag_inconsistencies(*_common_years(inclusive, excluding))


def _common_years(a: YearSeries, b: YearSeries) -> tuple[YearSeries, YearSeries]:
    """Restrict two series to the years both answered (failed years are skipped)."""
    keep = set(a.as_dict()) & set(b.as_dict())
    return (YearSeries([p for p in a.points if p[0] in keep], a.flags, a.category),
            YearSeries([p for p in b.points if p[0] in keep], b.flags, b.category))


def false_serp_audit(engine: EngineBackend, query: Query, pages: Iterable[int]) -> list[InconsistencyFinding]:
    """Pages that come back empty although the hit count promises results on them."""
    findings = []
    for page in pages:
        q = Query(**{**query.to_dict(), "year_range": query.year_range, "page": page})
        result = engine.fetch_page(q)
        if result.capped or result.ids:
            continue
        start = (page - 1) * q.page_size
        if result.false_serp or start < result.hce.value:
            expected = min(q.page_size, result.hce.value - start)
            findings.append(InconsistencyFinding(
                "false-serp", f"page {page}", -max(expected, 0),
                f"empty page although the estimate is {result.hce.value}",
            ))
    return findings


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    n = len(x)
    if n != len(y):
        raise ValidationError("y", "series must have equal length")
    if n < 2:
        raise ValidationError("x", "need at least two points")
    mx = math.fsum(x) / n
    my = math.fsum(y) / n
    dx = [a - mx for a in x]
    dy = [b - my for b in y]
    sxx = math.fsum(d * d for d in dx)
    syy = math.fsum(d * d for d in dy)
    if sxx == 0 or syy == 0:
        raise UndefinedCorrelationError("zero variance: correlation undefined")
    r = math.fsum(a * b for a, b in zip(dx, dy)) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def decade_of(year: int) -> int:
    """First year of the decade bucket holding ``year`` (buckets run 1951-1960, ...)."""
    return (year - 1) // 10 * 10 + 1


@dataclass(frozen=True)
class DecadeRow:
    label: str
    counts: dict[str, int]
    ratios: dict[str, float]


def _ratio2(value: float) -> float:
    return math.floor(value * 100 + 0.5) / 100


def decade_ratios(totals: Mapping[str, Mapping[str, int]], reference: str = "gs") -> list[DecadeRow]:
    """Ratio of every engine to ``reference`` per bucket, rounded to 2 decimals."""
    rows = []
    for label, counts in totals.items():
        ref = counts[reference]
        ratios = {e: (_ratio2(c / ref) if ref else float("nan")) for e, c in counts.items() if e != reference}
        rows.append(DecadeRow(label, dict(counts), ratios))
    return rows


def decade_aggregate(series: Mapping[str, YearSeries | Mapping[int, int]], reference: str = "gs") -> list[DecadeRow]:
    per_engine = {e: (s.as_dict() if isinstance(s, YearSeries) else dict(s)) for e, s in series.items()}
    domains = {e: set(d) for e, d in per_engine.items()}
    first = next(iter(domains.values()))
    if any(d != first for d in domains.values()):
        raise ValidationError("series", "engines cover different years")
    if reference not in per_engine:
        raise ValidationError("reference", f"no series for reference engine {reference!r}")
    last_year = max(first)
    buckets: dict[str, dict[str, int]] = {}
    for y in sorted(first):
        start = decade_of(y)
        label = f"{start}-{min(start + 9, last_year)}"
        row = buckets.setdefault(label, {e: 0 for e in per_engine})
        for e, d in per_engine.items():
            row[e] += d[y]
    return decade_ratios(buckets, reference)


def write_findings_csv(findings: Iterable[InconsistencyFinding], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["kind", "where", "magnitude", "detail"])
        for f in findings:
            writer.writerow([f.kind, f.where, f.magnitude, f.detail])
