"""Synthetic ground-truth scholarly corpus and partial index views.

A :class:`GroundTruthUniverse` is a deterministic set of documents with known
attributes. :func:`derive_view` samples one engine's partial (possibly
duplicated, possibly stubbed) view of it. Everything is stored column-wise in
numpy arrays so that views of a few million entries stay cheap to count.

The default shares are a synthesis, not measurements: English 0.9 and
journal articles 0.75 describe a WoS-like index; a GS-like view is better
described with an English share near 0.65 (see :data:`GS_LIKE_LANGUAGE_SHARES`).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

LANGUAGES = ("english", "other")
DOC_TYPES = (
    "journal-article",
    "conference",
    "book",
    "book-chapter",
    "thesis",
    "report",
    "other",
)
CATEGORIES = ("article", "patent", "case-law")
ENTRY_KINDS = ("full-record", "citation-stub")

WOS_LIKE_LANGUAGE_SHARES = {"english": 0.9, "other": 0.1}
GS_LIKE_LANGUAGE_SHARES = {"english": 0.65, "other": 0.35}
WOS_LIKE_TYPE_SHARES = {
    "journal-article": 0.75,
    "conference": 0.12,
    "book": 0.005,
    "book-chapter": 0.005,
    "thesis": 0.03,
    "report": 0.03,
    "other": 0.06,
}
# university output mix: articles <= 40%, books + chapters ~30%, conferences ~20%
UNIVERSITY_TYPE_SHARES = {
    "journal-article": 0.40,
    "conference": 0.20,
    "book": 0.12,
    "book-chapter": 0.18,
    "thesis": 0.04,
    "report": 0.03,
    "other": 0.03,
}

SHARE_TOLERANCE = 1e-9


class ValidationError(ValueError):
    """Invalid configuration or argument; ``field`` names the offending input."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def _check_fraction(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValidationError(name, f"must be in [0, 1], got {value!r}")


def _check_shares(name: str, shares: Mapping[str, float], allowed: Iterable[str]) -> None:
    allowed = tuple(allowed)
    for key, value in shares.items():
        if key not in allowed:
            raise ValidationError(name, f"unknown key {key!r} (allowed: {', '.join(allowed)})")
        _check_fraction(f"{name}.{key}", value)
    total = sum(shares.values())
    if abs(total - 1.0) > SHARE_TOLERANCE:
        raise ValidationError(name, f"shares must sum to 1.0, got {total!r}")


@dataclass(frozen=True)
class DocumentRecord:
    id: int
    year: int
    language: str
    doc_type: str
    category: str
    cites: tuple[int, ...] = ()


@dataclass(frozen=True)
class UniverseConfig:
    total_docs: int
    year_range: tuple[int, int] = (1700, 2013)
    growth_rate: float = 1.03
    language_shares: Mapping[str, float] = field(
        default_factory=lambda: dict(WOS_LIKE_LANGUAGE_SHARES)
    )
    type_shares: Mapping[str, float] = field(default_factory=lambda: dict(WOS_LIKE_TYPE_SHARES))
    patent_share: float = 0.01
    caselaw_share: float = 0.02
    citation_density: float = 10.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "year_range", tuple(int(y) for y in self.year_range))
        object.__setattr__(self, "language_shares", dict(self.language_shares))
        object.__setattr__(self, "type_shares", dict(self.type_shares))
        self.validate()

    def validate(self) -> None:
        if int(self.total_docs) != self.total_docs or self.total_docs < 1:
            raise ValidationError("total_docs", f"must be an integer >= 1, got {self.total_docs!r}")
        if len(self.year_range) != 2 or self.year_range[0] > self.year_range[1]:
            raise ValidationError("year_range", f"must be (min, max) with min <= max, got {self.year_range!r}")
        if not self.growth_rate > 0:
            raise ValidationError("growth_rate", f"must be positive, got {self.growth_rate!r}")
        _check_shares("language_shares", self.language_shares, LANGUAGES)
        _check_shares("type_shares", self.type_shares, DOC_TYPES)
        _check_fraction("patent_share", self.patent_share)
        _check_fraction("caselaw_share", self.caselaw_share)
        if self.patent_share + self.caselaw_share > 1.0:
            raise ValidationError("caselaw_share", "patent_share + caselaw_share must not exceed 1")
        if self.citation_density < 0:
            raise ValidationError("citation_density", "must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise ValidationError("seed", "must be a 64-bit unsigned integer")

    @classmethod
    def from_dict(cls, data: Mapping) -> "UniverseConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ValidationError(sorted(unknown)[0], "unknown config key")
        if "total_docs" not in data:
            raise ValidationError("total_docs", "missing")
        return cls(**dict(data))

    @classmethod
    def from_file(cls, path: str | Path) -> "UniverseConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["year_range"] = list(self.year_range)
        return d

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


class GroundTruthUniverse:
    """Immutable column store of documents; ids are 0..n-1 in year order."""

    def __init__(self, config: UniverseConfig, year, language, doc_type, category,
                 cite_offsets, cite_targets, universe_id: str | None = None):
        self.config = config
        self.year = np.asarray(year, dtype=np.int32)
        self.language = np.asarray(language, dtype=np.int8)
        self.doc_type = np.asarray(doc_type, dtype=np.int8)
        self.category = np.asarray(category, dtype=np.int8)
        self.cite_offsets = np.asarray(cite_offsets, dtype=np.int64)
        self.cite_targets = np.asarray(cite_targets, dtype=np.int64)
        self.universe_id = universe_id or config.fingerprint()
        for arr in (self.year, self.language, self.doc_type, self.category,
                    self.cite_offsets, self.cite_targets):
            arr.setflags(write=False)

    def __len__(self) -> int:
        return int(self.year.shape[0])

    @property
    def ids(self) -> np.ndarray:
        return np.arange(len(self), dtype=np.int64)

    def cites_of(self, doc_id: int) -> np.ndarray:
        return self.cite_targets[self.cite_offsets[doc_id]:self.cite_offsets[doc_id + 1]]

    def citing_pairs(self) -> tuple[np.ndarray, np.ndarray]:
        """(source, target) arrays for every citation edge."""
        counts = np.diff(self.cite_offsets)
        sources = np.repeat(np.arange(len(self), dtype=np.int64), counts)
        return sources, self.cite_targets

    def record(self, doc_id: int) -> DocumentRecord:
        return DocumentRecord(
            id=int(doc_id),
            year=int(self.year[doc_id]),
            language=LANGUAGES[self.language[doc_id]],
            doc_type=DOC_TYPES[self.doc_type[doc_id]],
            category=CATEGORIES[self.category[doc_id]],
            cites=tuple(int(c) for c in self.cites_of(doc_id)),
        )

    def records(self):
        for i in range(len(self)):
            yield self.record(i)

    def year_counts(self) -> dict[int, int]:
        lo, hi = self.config.year_range
        counts = np.bincount(self.year - lo, minlength=hi - lo + 1)
        return {lo + i: int(c) for i, c in enumerate(counts)}


def year_profile(config: UniverseConfig) -> np.ndarray:
    """Per-year document counts following a geometric growth curve.

    Largest-remainder rounding keeps the total exact and every year within
    one document of its real-valued share.
    """
    lo, hi = config.year_range
    exponents = np.arange(hi - lo + 1, dtype=np.float64)
    log_w = exponents * np.log(config.growth_rate)
    w = np.exp(log_w - log_w.max())
    ideal = config.total_docs * w / w.sum()
    counts = np.floor(ideal).astype(np.int64)
    short = config.total_docs - int(counts.sum())
    if short:
        order = np.argsort(-(ideal - counts), kind="stable")
        counts[order[:short]] += 1
    return counts


def _draw_categorical(rng: np.random.Generator, n: int, shares: Mapping[str, float],
                      names: tuple[str, ...]) -> np.ndarray:
    probs = np.array([shares.get(name, 0.0) for name in names], dtype=np.float64)
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0
    return np.searchsorted(cdf, rng.random(n), side="right").astype(np.int8)


def generate_universe(config: UniverseConfig) -> GroundTruthUniverse:
    config.validate()
    rng = np.random.default_rng(config.seed)
    n = config.total_docs
    lo, _ = config.year_range

    per_year = year_profile(config)
    year = np.repeat(np.arange(per_year.shape[0], dtype=np.int32) + lo, per_year)
    language = _draw_categorical(rng, n, config.language_shares, LANGUAGES)
    doc_type = _draw_categorical(rng, n, config.type_shares, DOC_TYPES)
    article_share = 1.0 - config.patent_share - config.caselaw_share
    category = _draw_categorical(
        rng, n,
        {"article": article_share, "patent": config.patent_share, "case-law": config.caselaw_share},
        CATEGORIES,
    )

    # out-links go to documents of the same or earlier years, never to self
    ends = np.cumsum(per_year)[year - lo]
    degree = rng.poisson(config.citation_density, n) if config.citation_density > 0 else np.zeros(n, np.int64)
    degree = np.where(ends > 1, degree, 0)
    sources = np.repeat(np.arange(n, dtype=np.int64), degree)
    span = (ends[sources] - 1).astype(np.float64)
    targets = np.floor(rng.random(sources.shape[0]) * span).astype(np.int64)
    targets += targets >= sources
    if sources.size:
        edges = np.unique(sources * n + targets)
        sources, targets = edges // n, edges % n
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(sources, minlength=n), out=offsets[1:])
    return GroundTruthUniverse(config, year, language, doc_type, category, offsets, targets)


@dataclass(frozen=True)
class CoveragePolicy:
    """Inclusion rules for one index.

    ``probabilities`` maps ``(language, doc_type, category)`` to an inclusion
    probability; ``"*"`` is a wildcard in any position. More specific keys win
    (fewest wildcards); ``default`` applies when nothing matches.
    """

    probabilities: Mapping[tuple[str, str, str], float] = field(default_factory=dict)
    default: float = 1.0
    duplicate_rate: float = 0.0
    stub_rate: float = 0.0
    max_file_exclusion_rate: float = 0.0

    def __post_init__(self):
        object.__setattr__(
            self, "probabilities",
            {tuple(k.split("|")) if isinstance(k, str) else tuple(k): float(v)
             for k, v in dict(self.probabilities).items()},
        )
        self.validate()

    @classmethod
    def uniform(cls, p: float, **kwargs) -> "CoveragePolicy":
        return cls(default=p, **kwargs)

    def validate(self) -> None:
        for key, p in self.probabilities.items():
            if len(key) != 3:
                raise ValidationError("probabilities", f"key {key!r} must be (language, doc_type, category)")
            lang, dtype, cat = key
            if lang != "*" and lang not in LANGUAGES:
                raise ValidationError("probabilities", f"unknown language {lang!r}")
            if dtype != "*" and dtype not in DOC_TYPES:
                raise ValidationError("probabilities", f"unknown doc_type {dtype!r}")
            if cat != "*" and cat not in CATEGORIES:
                raise ValidationError("probabilities", f"unknown category {cat!r}")
            _check_fraction(f"probabilities[{'|'.join(key)}]", p)
        _check_fraction("default", self.default)
        _check_fraction("duplicate_rate", self.duplicate_rate)
        _check_fraction("stub_rate", self.stub_rate)
        _check_fraction("max_file_exclusion_rate", self.max_file_exclusion_rate)

    def probability_table(self) -> np.ndarray:
        """Dense [language, doc_type, category] array of inclusion probabilities."""
        table = np.full((len(LANGUAGES), len(DOC_TYPES), len(CATEGORIES)), self.default)
        best = np.full(table.shape, 4)
        for key, p in self.probabilities.items():
            wild = sum(part == "*" for part in key)
            li = range(len(LANGUAGES)) if key[0] == "*" else [LANGUAGES.index(key[0])]
            ti = range(len(DOC_TYPES)) if key[1] == "*" else [DOC_TYPES.index(key[1])]
            ci = range(len(CATEGORIES)) if key[2] == "*" else [CATEGORIES.index(key[2])]
            for a in li:
                for b in ti:
                    for c in ci:
                        if wild < best[a, b, c]:
                            table[a, b, c] = p
                            best[a, b, c] = wild
        return table

    @classmethod
    def from_dict(cls, data: Mapping) -> "CoveragePolicy":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ValidationError(sorted(unknown)[0], "unknown policy key")
        return cls(**dict(data))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["probabilities"] = {"|".join(k): v for k, v in self.probabilities.items()}
        return d


class IndexView:
    """One engine's entries over a universe, sorted by (doc id, entry kind)."""

    def __init__(self, universe: GroundTruthUniverse, doc_ids, kinds, version_counts, seed: int = 0):
        self.universe = universe
        self.doc_ids = np.asarray(doc_ids, dtype=np.int64)
        self.kinds = np.asarray(kinds, dtype=np.int8)
        self.version_counts = np.asarray(version_counts, dtype=np.int32)
        self.seed = seed
        if self.version_counts.size and self.version_counts.min() < 1:
            raise ValidationError("version_count", "must be >= 1")
        for arr in (self.doc_ids, self.kinds, self.version_counts):
            arr.setflags(write=False)

    @property
    def universe_id(self) -> str:
        return self.universe.universe_id

    def __len__(self) -> int:
        return int(self.doc_ids.shape[0])

    def entries(self):
        for d, k, v in zip(self.doc_ids, self.kinds, self.version_counts):
            yield int(d), ENTRY_KINDS[k], int(v)

    def full_record_ids(self) -> np.ndarray:
        return self.doc_ids[self.kinds == 0]

    # per-entry document attributes
    @property
    def year(self) -> np.ndarray:
        return self.universe.year[self.doc_ids]

    @property
    def language(self) -> np.ndarray:
        return self.universe.language[self.doc_ids]

    @property
    def doc_type(self) -> np.ndarray:
        return self.universe.doc_type[self.doc_ids]

    @property
    def category(self) -> np.ndarray:
        return self.universe.category[self.doc_ids]


def derive_view(universe: GroundTruthUniverse, policy: CoveragePolicy, seed: int) -> IndexView:
    policy.validate()
    rng = np.random.default_rng([seed, 0x1D5])
    n = len(universe)
    p = policy.probability_table()[universe.language, universe.doc_type, universe.category]
    covered = rng.random(n) < p
    if policy.max_file_exclusion_rate > 0:
        thesis = universe.doc_type == DOC_TYPES.index("thesis")
        dropped = rng.random(n) < policy.max_file_exclusion_rate
        covered &= ~(thesis & dropped)

    full_ids = np.flatnonzero(covered)
    versions = np.where(rng.random(full_ids.shape[0]) < policy.duplicate_rate, 2, 1)

    stub_ids = np.empty(0, dtype=np.int64)
    if policy.stub_rate > 0:
        sources, targets = universe.citing_pairs()
        cited = np.unique(targets[covered[sources]])
        candidates = cited[~covered[cited]]
        stub_ids = candidates[rng.random(candidates.shape[0]) < policy.stub_rate]

    doc_ids = np.concatenate([full_ids, stub_ids])
    kinds = np.concatenate([np.zeros(full_ids.shape[0], np.int8), np.ones(stub_ids.shape[0], np.int8)])
    counts = np.concatenate([versions, np.ones(stub_ids.shape[0], np.int64)])
    order = np.lexsort((kinds, doc_ids))
    return IndexView(universe, doc_ids[order], kinds[order], counts[order], seed=seed)


@dataclass(frozen=True)
class CountFilter:
    year_range: tuple[int, int] | None = None
    language: str | None = None
    doc_type: str | None = None
    category: str | None = None
    entry_kind: str | None = None

    def __post_init__(self):
        if self.year_range is not None:
            lo, hi = self.year_range
            if lo > hi:
                raise ValidationError("year_range", f"inverted range {self.year_range!r}")
        for name, value, allowed in (
            ("language", self.language, LANGUAGES),
            ("doc_type", self.doc_type, DOC_TYPES),
            ("category", self.category, CATEGORIES),
            ("entry_kind", self.entry_kind, ENTRY_KINDS),
        ):
            if value is not None and value not in allowed:
                raise ValidationError(name, f"unknown value {value!r}")


def true_count(source: GroundTruthUniverse | IndexView, filter: CountFilter | None = None, **kwargs) -> int:
    """Exact number of documents (universe) or unique entries (view) matching ``filter``.

    Duplicated versions count once; use the engine for hit counts.
    """
    if filter is None:
        filter = CountFilter(**kwargs)
    elif kwargs:
        raise TypeError("pass either a CountFilter or keyword filters, not both")
    mask = np.ones(len(source), dtype=bool)
    if filter.year_range is not None:
        year = source.year
        mask &= (year >= filter.year_range[0]) & (year <= filter.year_range[1])
    if filter.language is not None:
        mask &= source.language == LANGUAGES.index(filter.language)
    if filter.doc_type is not None:
        mask &= source.doc_type == DOC_TYPES.index(filter.doc_type)
    if filter.category is not None:
        mask &= source.category == CATEGORIES.index(filter.category)
    if filter.entry_kind is not None:
        if isinstance(source, IndexView):
            mask &= source.kinds == ENTRY_KINDS.index(filter.entry_kind)
        elif filter.entry_kind != "full-record":
            return 0
    return int(mask.sum())


# --- newline-delimited record files -------------------------------------------------

def write_universe(universe: GroundTruthUniverse, path: str | Path) -> None:
    """One JSON header line (config) followed by one document per line."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"universe_id": universe.universe_id, "config": universe.config.to_dict()},
                            sort_keys=True) + "\n")
        for rec in universe.records():
            fh.write(json.dumps([rec.id, rec.year, rec.language, rec.doc_type, rec.category,
                                 list(rec.cites)]) + "\n")


def read_universe(path: str | Path) -> GroundTruthUniverse:
    with open(path, encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        config = UniverseConfig.from_dict(header["config"])
        year, lang, dtype, cat, offsets, targets = [], [], [], [], [0], []
        for expected_id, line in enumerate(fh):
            doc_id, y, language, doc_type, category, cites = json.loads(line)
            if doc_id != expected_id:
                raise ValidationError("id", f"line {expected_id + 2}: expected id {expected_id}, got {doc_id}")
            year.append(y)
            lang.append(LANGUAGES.index(language))
            dtype.append(DOC_TYPES.index(doc_type))
            cat.append(CATEGORIES.index(category))
            targets.extend(cites)
            offsets.append(len(targets))
    return GroundTruthUniverse(config, year, lang, dtype, cat, offsets, targets,
                               universe_id=header["universe_id"])


def write_view(view: IndexView, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"universe_id": view.universe_id, "seed": view.seed}) + "\n")
        for doc_id, kind, versions in view.entries():
            fh.write(json.dumps([doc_id, kind, versions]) + "\n")


def read_view(path: str | Path, universe: GroundTruthUniverse) -> IndexView:
    with open(path, encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        if header["universe_id"] != universe.universe_id:
            raise ValidationError("universe_id", "view was derived from a different universe")
        rows = [json.loads(line) for line in fh]
    doc_ids = [r[0] for r in rows]
    kinds = [ENTRY_KINDS.index(r[1]) for r in rows]
    versions = [r[2] for r in rows]
    return IndexView(universe, doc_ids, kinds, versions, seed=header["seed"])
