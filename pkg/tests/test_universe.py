import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from indexsize.universe import (CATEGORIES, CountFilter, CoveragePolicy, UniverseConfig, ValidationError,
                                derive_view, generate_universe, read_universe, read_view, true_count,
                                write_universe, write_view, year_profile)


@pytest.fixture(scope="module")
def universe():
    return generate_universe(UniverseConfig(total_docs=10_000, seed=42, citation_density=4.0))


def test_zero_docs_rejected_with_field_name():
    with pytest.raises(ValidationError) as err:
        UniverseConfig(total_docs=0)
    assert err.value.field == "total_docs"


@pytest.mark.parametrize("bad, field", [
    ({"language_shares": {"english": 0.5, "other": 0.4}}, "language_shares"),
    ({"year_range": (2000, 1990)}, "year_range"),
    ({"patent_share": 1.5}, "patent_share"),
    ({"citation_density": -1}, "citation_density"),
    ({"type_shares": {"novel": 1.0}}, "type_shares"),
])
def test_invalid_config_names_field(bad, field):
    with pytest.raises(ValidationError) as err:
        UniverseConfig(total_docs=10, **bad)
    assert err.value.field == field


def test_config_unknown_key_and_round_trip():
    with pytest.raises(ValidationError):
        UniverseConfig.from_dict({"total_docs": 5, "colour": "red"})
    cfg = UniverseConfig(total_docs=123, seed=9, growth_rate=1.05)
    assert UniverseConfig.from_dict(cfg.to_dict()) == cfg
    assert cfg.fingerprint() == UniverseConfig.from_dict(cfg.to_dict()).fingerprint()


def test_generation_is_byte_identical(tmp_path):
    cfg = UniverseConfig(total_docs=10_000, seed=42)
    write_universe(generate_universe(cfg), tmp_path / "a.ndjson")
    write_universe(generate_universe(cfg), tmp_path / "b.ndjson")
    assert (tmp_path / "a.ndjson").read_bytes() == (tmp_path / "b.ndjson").read_bytes()


def test_english_share_within_binomial_band(universe):
    english = true_count(universe, language="english") / len(universe)
    assert abs(english - 0.9) <= 0.02


def test_year_profile_is_geometric(universe):
    cfg = universe.config
    lo, hi = cfg.year_range
    weights = [cfg.growth_rate ** (y - lo) for y in range(lo, hi + 1)]
    total = math.fsum(weights)
    counts = universe.year_counts()
    assert sum(counts.values()) == cfg.total_docs
    for y, w in zip(range(lo, hi + 1), weights):
        assert abs(counts[y] - cfg.total_docs * w / total) < 1 + 1e-9


def test_citations_point_backwards_never_to_self(universe):
    sources, targets = universe.citing_pairs()
    assert sources.size > 0
    assert not np.any(sources == targets)
    assert targets.min() >= 0 and targets.max() < len(universe)
    assert np.all(universe.year[targets] <= universe.year[sources])
    pairs = sources * len(universe) + targets
    assert np.unique(pairs).size == pairs.size


def test_record_view_matches_columns(universe):
    rec = universe.record(9_999)
    assert rec.year == 2013
    assert rec.category in CATEGORIES
    assert list(rec.cites) == universe.cites_of(9_999).tolist()


def test_full_coverage_view_is_universe(universe):
    view = derive_view(universe, CoveragePolicy.uniform(1.0), 1)
    assert len(view) == len(universe)
    assert true_count(view, entry_kind="citation-stub") == 0


def test_zero_coverage_view_is_empty(universe):
    assert len(derive_view(universe, CoveragePolicy.uniform(0.0, stub_rate=1.0), 1)) == 0


def test_half_coverage_within_three_sigma(universe):
    view = derive_view(universe, CoveragePolicy.uniform(0.5), 3)
    assert abs(true_count(view, entry_kind="full-record") - 5_000) <= 150


def test_view_is_deterministic_per_seed(universe):
    policy = CoveragePolicy.uniform(0.6, stub_rate=0.4, duplicate_rate=0.1)
    a, b = derive_view(universe, policy, 5), derive_view(universe, policy, 5)
    assert np.array_equal(a.doc_ids, b.doc_ids) and np.array_equal(a.version_counts, b.version_counts)
    c = derive_view(universe, policy, 6)
    assert not np.array_equal(a.doc_ids, c.doc_ids)


def test_stubs_only_for_uncovered_cited_documents(universe):
    view = derive_view(universe, CoveragePolicy.uniform(0.5, stub_rate=1.0), 2)
    full = set(view.full_record_ids().tolist())
    stubs = set(view.doc_ids[view.kinds == 1].tolist())
    assert stubs and not stubs & full
    sources, targets = universe.citing_pairs()
    covered_source = np.isin(sources, list(full))
    cited_by_covered = set(targets[covered_source].tolist())
    assert stubs == cited_by_covered - full


def test_duplicates_and_thesis_exclusion(universe):
    view = derive_view(universe, CoveragePolicy.uniform(1.0, duplicate_rate=0.2, max_file_exclusion_rate=1.0), 4)
    assert view.version_counts.min() >= 1 and view.version_counts.max() == 2
    assert true_count(view, doc_type="thesis") == 0
    assert abs((view.version_counts == 2).mean() - 0.2) < 0.03


def test_policy_specific_key_wins():
    policy = CoveragePolicy(default=0.3, probabilities={"english|*|*": 0.7, "english|thesis|article": 0.1})
    table = policy.probability_table()
    assert table[0, 4, 0] == 0.1
    assert table[0, 0, 0] == 0.7
    assert table[1, 0, 0] == 0.3
    assert CoveragePolicy.from_dict(policy.to_dict()) == policy


def test_policy_unknown_key_rejected():
    with pytest.raises(ValidationError):
        CoveragePolicy(probabilities={"klingon|*|*": 0.5})
    with pytest.raises(ValidationError):
        CoveragePolicy(probabilities={"english|*": 0.5})


def test_count_filter_validation(universe):
    with pytest.raises(ValidationError):
        CountFilter(year_range=(2000, 1999))
    with pytest.raises(ValidationError):
        CountFilter(category="novel")
    assert true_count(universe, entry_kind="citation-stub") == 0


def test_patents_and_case_law_stay_out_of_article_counts(universe):
    total = len(universe)
    parts = sum(true_count(universe, category=c) for c in CATEGORIES)
    assert parts == total
    articles = true_count(universe, category="article")
    assert articles < total - true_count(universe, category="patent")


def test_ndjson_round_trip(universe, tmp_path):
    write_universe(universe, tmp_path / "u.ndjson")
    back = read_universe(tmp_path / "u.ndjson")
    assert back.universe_id == universe.universe_id
    for col in ("year", "language", "doc_type", "category", "cite_offsets", "cite_targets"):
        assert np.array_equal(getattr(back, col), getattr(universe, col))
    view = derive_view(universe, CoveragePolicy.uniform(0.4, stub_rate=0.5, duplicate_rate=0.1), 8)
    write_view(view, tmp_path / "v.ndjson")
    again = read_view(tmp_path / "v.ndjson", back)
    assert list(again.entries()) == list(view.entries())


@settings(max_examples=40, deadline=None)
@given(total=st.integers(1, 5_000), growth=st.floats(0.9, 1.1), lo=st.integers(1700, 1990),
       width=st.integers(0, 40))
def test_year_profile_total_and_rounding(total, growth, lo, width):
    cfg = UniverseConfig(total_docs=total, growth_rate=growth, year_range=(lo, lo + width))
    counts = year_profile(cfg)
    assert counts.sum() == total and counts.min() >= 0
    w = np.array([growth ** i for i in range(width + 1)])
    assert np.all(np.abs(counts - total * w / w.sum()) < 1 + 1e-6)


@settings(max_examples=30, deadline=None)
@given(a=st.integers(1700, 2013), b=st.integers(1700, 2013))
def test_true_count_additive_over_years(universe, a, b):
    lo, hi = min(a, b), max(a, b)
    whole = true_count(universe, year_range=(lo, hi))
    assert whole == sum(true_count(universe, year_range=(y, y)) for y in range(lo, hi + 1))
