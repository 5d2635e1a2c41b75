"""Query facade emulating an opaque academic search engine over an IndexView.

The simulated engine answers two kinds of requests: a hit count estimate for a
query and one page of result ids. A :class:`FaultProfile` switches on the
pathologies observed on real engines (rounded and noisy counts, broken custom
year ranges, flag toggles that shrink counts, empty result pages, ...).

All randomness is derived from ``(seed, query)``: asking the same question twice
gets the same answer, and concurrent callers cannot disturb each other. Real
engines may well vary over time; the simulator deliberately does not.
"""

from __future__ import annotations

import hashlib
import json
import math
import threading
import time
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Callable, Protocol, TextIO, runtime_checkable

import numpy as np

from .universe import CATEGORIES, IndexView, ValidationError

MAX_PAGE_SIZE = 20
QUERY_CATEGORIES = ("articles", "case-law")
FLAG_LABELS = {
    (True, True): "records+citations+patents",
    (True, False): "records+citations",
    (False, True): "records+patents",
    (False, False): "records",
}


def flags_label(include_citations: bool, include_patents: bool) -> str:
    return FLAG_LABELS[(bool(include_citations), bool(include_patents))]


def parse_flags(label: str) -> tuple[bool, bool]:
    for flags, name in FLAG_LABELS.items():
        if name == label:
            return flags
    raise ValidationError("flags", f"unknown flag combination {label!r}")


class EngineServerError(RuntimeError):
    """The engine failed to deliver results (HTTP 5xx style)."""


@dataclass(frozen=True)
class Query:
    term: str = ""
    excluded_site: str | None = None
    year_range: tuple[int, int] | None = None
    include_citations: bool = True
    include_patents: bool = True
    category: str = "articles"
    page: int = 1
    page_size: int = 10

    def __post_init__(self):
        if self.year_range is not None:
            object.__setattr__(self, "year_range", (int(self.year_range[0]), int(self.year_range[1])))
            if self.year_range[0] > self.year_range[1]:
                raise ValidationError("year_range", f"inverted range {self.year_range!r}")
        if self.category not in QUERY_CATEGORIES:
            raise ValidationError("category", f"must be one of {QUERY_CATEGORIES}, got {self.category!r}")
        if self.page < 1:
            raise ValidationError("page", "must be >= 1")
        if not 1 <= self.page_size <= MAX_PAGE_SIZE:
            raise ValidationError("page_size", f"must be in [1, {MAX_PAGE_SIZE}]")

    @property
    def is_absurd(self) -> bool:
        return bool(self.term) and self.excluded_site is not None

    @property
    def flags(self) -> str:
        return flags_label(self.include_citations, self.include_patents)

    def text(self) -> str:
        """The query as typed into a search box."""
        parts = [self.term] if self.term else []
        if self.excluded_site:
            parts.append(f"-site:{self.excluded_site}")
        return " ".join(parts)

    def count_key(self) -> str:
        """Canonical identity of the count request (pagination excluded)."""
        return json.dumps([self.term, self.excluded_site, self.year_range, self.include_citations,
                           self.include_patents, self.category])

    def to_dict(self) -> dict:
        d = asdict(self)
        d["year_range"] = list(self.year_range) if self.year_range else None
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "Query":
        data = dict(data)
        if data.get("year_range") is not None:
            data["year_range"] = tuple(data["year_range"])
        return cls(**data)


@dataclass(frozen=True)
class HitCountEstimate:
    value: int
    rounded: bool = False
    raw_true_count: int | None = None
    diagnostics: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class ResultPage:
    ids: tuple[int, ...]
    hce: HitCountEstimate
    capped: bool = False
    false_serp: bool = False


@dataclass(frozen=True)
class FaultProfile:
    hce_rounding: bool = False
    multiplicative_noise_sigma: float = 0.0
    result_cap: int = 1000
    custom_range_malfunction: bool = False
    flag_exclusion_inconsistency_rate: float = 0.0
    citation_toggle_inconsistency_rate: float = 0.0
    stub_duplicity_rate: float = 0.0
    empty_serp_rate: float = 0.0
    absurd_query_drops_citations: bool = False
    server_error_terms: tuple[str, ...] = ()
    server_error_rate: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "server_error_terms", tuple(self.server_error_terms))
        for name in ("flag_exclusion_inconsistency_rate", "citation_toggle_inconsistency_rate",
                     "stub_duplicity_rate", "empty_serp_rate", "server_error_rate"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValidationError(name, f"must be in [0, 1], got {value!r}")
        if self.multiplicative_noise_sigma < 0:
            raise ValidationError("multiplicative_noise_sigma", "must be non-negative")
        if self.result_cap < MAX_PAGE_SIZE:
            raise ValidationError("result_cap", f"must be >= the maximum page size {MAX_PAGE_SIZE}")

    @classmethod
    def scholar_like(cls) -> "FaultProfile":
        """Every documented pathology switched on at a plausible level."""
        return cls(
            hce_rounding=True,
            multiplicative_noise_sigma=0.02,
            custom_range_malfunction=True,
            flag_exclusion_inconsistency_rate=122 / 314,
            citation_toggle_inconsistency_rate=8 / 314,
            stub_duplicity_rate=0.01,
            empty_serp_rate=0.05,
            absurd_query_drops_citations=True,
            server_error_terms=("a",),
        )

    @classmethod
    def from_dict(cls, data: dict) -> "FaultProfile":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValidationError(sorted(unknown)[0], "unknown fault profile key")
        return cls(**data)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["server_error_terms"] = list(self.server_error_terms)
        return d


def round_hce(n: int, profile: FaultProfile | None = None,
              rng: np.random.Generator | None = None) -> HitCountEstimate:
    """Display rule for hit counts: three significant digits from 1000 up, half-up.

    With ``multiplicative_noise_sigma > 0`` and an ``rng``, log-normal noise is
    applied before rounding.
    """
    if n < 0:
        raise ValidationError("n", "hit counts are non-negative")
    profile = profile or FaultProfile(hce_rounding=True)
    value = int(n)
    if profile.multiplicative_noise_sigma > 0 and rng is not None:
        value = int(math.floor(value * math.exp(rng.normal(0.0, profile.multiplicative_noise_sigma)) + 0.5))
    if not profile.hce_rounding:
        return HitCountEstimate(value=value, rounded=False, raw_true_count=int(n))
    return HitCountEstimate(value=_three_significant(value), rounded=True, raw_true_count=int(n))


def _three_significant(n: int) -> int:
    if n < 1000:
        return n
    q = 10 ** (len(str(n)) - 3)
    return (n + q // 2) // q * q


def _query_hash(key: str) -> int:
    return int.from_bytes(hashlib.blake2b(key.encode(), digest_size=8).digest(), "little")


@runtime_checkable
class EngineBackend(Protocol):
    def count(self, query: Query) -> HitCountEstimate: ...

    def fetch_page(self, query: Query) -> ResultPage: ...

    def capabilities(self) -> dict: ...


class SimulatedEngine:
    """Fault-injecting engine over an immutable :class:`IndexView`."""

    name = "simulated"

    def __init__(self, view: IndexView, profile: FaultProfile | None = None, seed: int = 0):
        self.view = view
        self.profile = profile or FaultProfile()
        self.seed = int(seed)
        lo, hi = view.universe.config.year_range
        self.years = (lo, hi)

        entry_year = view.year - lo
        entry_cat = view.category.astype(np.int64)
        entry_kind = view.kinds.astype(np.int64)
        self._dup_ids = self._duplicity_stubs()

        ncell = (hi - lo + 1) * len(CATEGORIES) * 2
        flat = (entry_year * len(CATEGORIES) + entry_cat) * 2 + entry_kind
        table = np.bincount(flat, weights=view.version_counts, minlength=ncell)
        if self._dup_ids.size:
            u = view.universe
            dflat = ((u.year[self._dup_ids] - lo) * len(CATEGORIES) + u.category[self._dup_ids]) * 2 + 1
            table += np.bincount(dflat, minlength=ncell)
        table = table.reshape(hi - lo + 1, len(CATEGORIES), 2).astype(np.int64)
        self._cum = np.concatenate([np.zeros((1, len(CATEGORIES), 2), np.int64), np.cumsum(table, axis=0)])
        self._cum.setflags(write=False)

    def _duplicity_stubs(self) -> np.ndarray:
        """Full records that the engine additionally lists as citations."""
        rate = self.profile.stub_duplicity_rate
        if rate <= 0:
            return np.empty(0, dtype=np.int64)
        u = self.view.universe
        full = self.view.full_record_ids()
        in_view = np.zeros(len(u), dtype=bool)
        in_view[full] = True
        sources, targets = u.citing_pairs()
        cited = np.unique(targets[in_view[sources]])
        cited = cited[in_view[cited]]
        rng = np.random.default_rng([self.seed, 0xD0B])
        return cited[rng.random(cited.shape[0]) < rate]

    def capabilities(self) -> dict:
        return {
            "backend": self.name,
            "supports_year_filter": True,
            "supports_site_exclusion": True,
            "supports_paging": True,
            "max_page_size": MAX_PAGE_SIZE,
            "result_cap": self.profile.result_cap,
        }

    def _rng(self, key: str, salt: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, _query_hash(key), salt])

    def _selection(self, query: Query) -> tuple[list[int], list[int], int, int]:
        if query.category == "case-law":
            cats = [CATEGORIES.index("case-law")]
        else:
            cats = [CATEGORIES.index("article")]
            if query.include_patents:
                cats.append(CATEGORIES.index("patent"))
        kinds = [0]
        drops = query.is_absurd and self.profile.absurd_query_drops_citations
        if query.include_citations and not drops:
            kinds.append(1)
        lo, hi = self.years
        a, b = query.year_range if query.year_range else (lo, hi)
        a, b = max(a, lo), min(b, hi)
        return cats, kinds, a - lo, b - lo

    def true_hits(self, query: Query) -> int:
        """Hits the fault-free engine would report (versions and duplicity included)."""
        cats, kinds, a, b = self._selection(query)
        if a > b:
            return 0
        window = self._cum[b + 1] - self._cum[a]
        return int(window[np.ix_(cats, kinds)].sum())

    def _check_server(self, query: Query) -> None:
        if query.term and query.term in self.profile.server_error_terms:
            raise EngineServerError(f"server error: technical problems delivering results for {query.text()!r}")
        if self.profile.server_error_rate > 0:
            if self._rng(query.count_key(), 5).random() < self.profile.server_error_rate:
                raise EngineServerError(f"server error for {query.text()!r} {query.year_range}")

    def _raw_value(self, query: Query, diag: dict) -> float:
        truth = self.true_hits(query)
        value = float(truth)
        if self.profile.multiplicative_noise_sigma > 0:
            value *= math.exp(self._rng(query.count_key(), 1).normal(0.0, self.profile.multiplicative_noise_sigma))
        yr = query.year_range
        if self.profile.custom_range_malfunction and yr is not None and yr[1] > yr[0]:
            value = truth * self._rng(query.count_key(), 2).uniform(0.001, 0.01)
            diag["range_malfunction"] = True
        return value

    def count(self, query: Query) -> HitCountEstimate:
        self._check_server(query)
        diag: dict[str, Any] = {}
        value = self._raw_value(query, diag)

        p = self.profile
        if p.flag_exclusion_inconsistency_rate > 0 and not query.include_patents and query.category == "articles":
            rng = self._rng(query.count_key(), 3)
            if rng.random() < p.flag_exclusion_inconsistency_rate:
                inclusive = self._raw_value(replace(query, include_patents=True), {})
                value = max(inclusive + 1, math.ceil(inclusive * (1 + rng.uniform(0.015, 0.06))))
                diag["flag_exclusion_inconsistency"] = True
        if p.citation_toggle_inconsistency_rate > 0 and query.include_citations:
            rng = self._rng(query.count_key(), 4)
            if rng.random() < p.citation_toggle_inconsistency_rate:
                without = self._raw_value(replace(query, include_citations=False), {})
                if without >= 1:
                    value = min(without - 1, math.floor(without * (1 - rng.uniform(0.015, 0.5))))
                    diag["citation_toggle_inconsistency"] = True

        n = max(int(math.floor(value + 0.5)), 0)
        shown = _three_significant(n) if p.hce_rounding else n
        return HitCountEstimate(value=shown, rounded=p.hce_rounding,
                                raw_true_count=self.true_hits(query), diagnostics=diag)

    def matching_ids(self, query: Query) -> np.ndarray:
        """Result list in engine order (by document id); duplicated versions listed once."""
        cats, kinds, a, b = self._selection(query)
        lo = self.years[0]
        v = self.view
        year = v.year - lo
        mask = (year >= a) & (year <= b) & np.isin(v.category, cats) & np.isin(v.kinds, kinds)
        ids = v.doc_ids[mask]
        if 1 in kinds and self._dup_ids.size:
            u = v.universe
            dup = self._dup_ids
            dyear = u.year[dup] - lo
            dmask = (dyear >= a) & (dyear <= b) & np.isin(u.category[dup], cats)
            ids = np.sort(np.concatenate([ids, dup[dmask]]), kind="stable")
        return ids

    def fetch_page(self, query: Query) -> ResultPage:
        hce = self.count(query)
        start = (query.page - 1) * query.page_size
        if start >= self.profile.result_cap:
            return ResultPage(ids=(), hce=hce, capped=True)
        p = self.profile
        if p.empty_serp_rate > 0:
            key = query.count_key() + f"#p{query.page}/{query.page_size}"
            if self._rng(key, 6).random() < p.empty_serp_rate:
                return ResultPage(ids=(), hce=hce, false_serp=hce.value > 0)
        stop = min(start + query.page_size, p.result_cap)
        ids = self.matching_ids(query)[start:stop]
        return ResultPage(ids=tuple(int(i) for i in ids), hce=hce)


def count(query: Query, view: IndexView, profile: FaultProfile | None = None, seed: int = 0) -> HitCountEstimate:
    return SimulatedEngine(view, profile, seed).count(query)


def fetch_page(query: Query, view: IndexView, profile: FaultProfile | None = None, seed: int = 0) -> ResultPage:
    return SimulatedEngine(view, profile, seed).fetch_page(query)


class QueryLog:
    """Wraps a backend and appends one JSON line per request for later replay."""

    def __init__(self, backend: EngineBackend, stream: TextIO, clock: Callable[[], float] = time.time):
        self.backend = backend
        self.stream = stream
        self.clock = clock
        self._lock = threading.Lock()

    def capabilities(self) -> dict:
        return self.backend.capabilities()

    def _write(self, record: dict) -> None:
        with self._lock:
            self.stream.write(json.dumps(record, sort_keys=True) + "\n")

    def count(self, query: Query) -> HitCountEstimate:
        record = {"op": "count", "query": query.to_dict(), "timestamp": self.clock()}
        try:
            hce = self.backend.count(query)
        except EngineServerError as exc:
            self._write({**record, "hce": None, "error": str(exc)})
            raise
        self._write({**record, "hce": hce.value, "rounded": hce.rounded, "diagnostics": hce.diagnostics})
        return hce

    def fetch_page(self, query: Query) -> ResultPage:
        page = self.backend.fetch_page(query)
        self._write({"op": "page", "query": query.to_dict(), "timestamp": self.clock(),
                     "hce": page.hce.value, "n_ids": len(page.ids),
                     "diagnostics": {"capped": page.capped, "false_serp": page.false_serp}})
        return page

    def __getattr__(self, name):
        return getattr(self.backend, name)


def read_query_log(stream: TextIO) -> list[dict]:
    return [json.loads(line) for line in stream if line.strip()]
