"""Acceptance criteria, one test per criterion, each at its stated tolerance.

Every test records a PASS/FAIL line (shown in the terminal summary and, with
``-s``, inline) before asserting.
"""

import csv
import json
import math
import random
import statistics
import time

import numpy as np

from indexsize import cli
from indexsize.engine import FaultProfile, SimulatedEngine, round_hce
from indexsize.estimators import (CaptureRecaptureInput, OverlapStatistic, RatioModel, error_adjust, jaccard,
                                  khabsa_giles_estimate, language_decompose, lincoln_petersen, ratio_project,
                                  scale_by_english_share)
from indexsize.fixtures import FixtureEngine, data_path, load_hce_fixture
from indexsize.probes import (ALL_FLAGS, YearSeries, absurd_probe, citation_toggle_audit, composition_breakdown,
                              false_serp_audit, flag_inconsistencies, longitudinal_sum, patent_flag_audit,
                              pearson, sectional_probe, years_between)
from indexsize.engine import Query
from indexsize.studies import FilterPolicy, parse_studies_csv, study_ratios, summarize_ratios
from indexsize.universe import CountFilter, CoveragePolicy, UniverseConfig, derive_view, generate_universe, true_count

SITE = "ssstfsffsdffasdfs.com"


def published_engine():
    return FixtureEngine(load_hce_fixture(data_path("published_hce.csv")), "gs")


def test_criterion_1_khabsa_giles(criterion):
    start = time.perf_counter()
    result = khabsa_giles_estimate(47_799_627, OverlapStatistic("jaccard", 0.418))
    elapsed = time.perf_counter() - start
    ok = (result.estimate == 114_353_174 and abs(result.estimate - 114e6) / 114e6 <= 0.005
          and elapsed < 1e-3)
    criterion(1, "Khabsa-Giles arithmetic", ok, f"estimate={result.estimate:,} in {elapsed * 1e6:.0f} us")
    assert ok


def test_criterion_2_ratio_method(criterion):
    projected = ratio_project(RatioModel(factor=3, wos_size=56_980_000)).estimate
    gse = language_decompose(RatioModel(factor=3, wos_size=57_000_000, gs_english_share=0.65))["GSe"]
    scaled = scale_by_english_share(99_300_000, 0.65)
    ok = (170.9e6 <= projected <= 171.0e6 and abs(gse - 111_150_000) <= 1
          and abs(scaled - 152.77e6) <= 0.01e6)
    criterion(2, "ratio method", ok, f"projection={projected:,} GSe={gse:,} scaled={scaled:,}")
    assert ok


def test_criterion_3_correction_factor_synthesis(criterion):
    records = parse_studies_csv(data_path("studies_catalogue.csv")).records()
    policy = FilterPolicy(min_wos_count=10)
    docs = summarize_ratios(study_ratios(records, "documents", policy))
    cites = summarize_ratios(study_ratios(records, "unique-citing-documents", policy))
    ok = (docs.n == 8 and abs(docs.median - 3.0) <= 0.1 and abs(docs.geometric_mean - 2.8) <= 0.1
          and cites.n == 9 and abs(cites.median - 2.4) <= 0.1 and abs(cites.geometric_mean - 2.9) <= 0.1)
    provenance = data_path("PROVENANCE.md").read_text(encoding="utf-8")
    gap_reported = "Known gap" in provenance
    criterion(3, "correction-factor synthesis", ok,
              f"documents n={docs.n} median={docs.median:.2f} geomean={docs.geometric_mean:.2f}; "
              f"unique citing n={cites.n} median={cites.median:.2f} geomean={cites.geometric_mean:.2f}; "
              f"gap documented in fixture provenance: {gap_reported}")
    assert gap_reported
    assert ok


# published value and the place of its last printed digit, in millions
PUBLISHED_ROWS = {"A": (152.7, 0.1), "B": (171, 1), "C1": (1.2, 0.1), "C2": (126.3, 0.1),
                  "D1": (174.5, 0.1), "D2": (176.8, 0.1), "D3": (172.9, 0.1)}


def test_criterion_4_fixture_replay(criterion, tmp_path):
    start = time.perf_counter()
    code = cli.main(["report", "--backend", "fixture", "--out", str(tmp_path)])
    elapsed = time.perf_counter() - start
    with open(tmp_path / "report.csv", newline="", encoding="utf-8") as fh:
        rows = {r["method"]: r for r in csv.DictReader(fh)}
    misses = []
    for method, (published, unit) in PUBLISHED_ROWS.items():
        millions = int(rows[method]["estimate"]) / 1e6
        if abs(millions - published) > unit + 1e-9:
            misses.append(f"{method}={millions:.3f}")
    adjusted = error_adjust(126_341_609, 0.10)
    ok = (code == 0 and not misses and adjusted == 113_707_448 and abs(adjusted - 114e6) / 114e6 < 0.01
          and elapsed < 5 and rows["C1"]["status"] == "discarded")
    summary = " ".join(f"{m}={int(rows[m]['estimate']) / 1e6:.2f}" for m in PUBLISHED_ROWS)
    criterion(4, "fixture replay of the summary table", ok,
              f"{summary}; adjusted C2={adjusted:,}; {elapsed:.2f}s; misses={misses}")
    assert ok


def _lp_trial(seed: int, policy: CoveragePolicy):
    universe = generate_universe(UniverseConfig(total_docs=100_000, citation_density=1.0, seed=seed))
    a = derive_view(universe, policy, seed * 2 + 1).full_record_ids()
    b = derive_view(universe, policy, seed * 2 + 2).full_record_ids()
    data = CaptureRecaptureInput.from_sets(a.tolist(), b.tolist())
    union = data.M + data.C - data.R
    return lincoln_petersen(data).estimate, len(universe), union


def test_criterion_5_estimator_recovery(criterion):
    start = time.perf_counter()
    independent = [_lp_trial(s, CoveragePolicy.uniform(0.5)) for s in range(50)]
    mare = statistics.fmean(abs(est - n) / n for est, n, _ in independent)
    correlated_policy = CoveragePolicy(default=0.1, probabilities={"english|journal-article|*": 0.9})
    correlated = [_lp_trial(1000 + s, correlated_policy) for s in range(50)]
    below_truth = sum(est < n for est, n, _ in correlated)
    below_union = sum(est < union for est, _, union in correlated)
    elapsed = time.perf_counter() - start
    ok = mare <= 0.03 and below_truth >= 45 and elapsed < 60
    criterion(5, "estimator recovery", ok,
              f"independent MARE={mare:.4%}; correlated: below true size {below_truth}/50, "
              f"below union {below_union}/50; {elapsed:.1f}s")
    assert ok


def test_criterion_6_probe_exactness(criterion):
    universe = generate_universe(UniverseConfig(total_docs=1_200_000, citation_density=2.0, seed=6))
    view = derive_view(universe, CoveragePolicy.uniform(0.9, stub_rate=0.5), 6)
    engine = SimulatedEngine(view, FaultProfile(), seed=6)
    years = years_between(1700, 2013)

    def truth(cat):
        if cat == "case-law":
            return true_count(view, CountFilter(category="case-law"))
        return true_count(view, CountFilter(category="article")) + true_count(view, CountFilter(category="patent"))

    mismatches = []
    for cat in ("articles", "case-law"):
        expected = truth(cat)
        _, longitudinal = longitudinal_sum(engine, years, category=cat)
        sectional = sectional_probe(engine, [(1700, 2013)], category=cat).total
        absurd = absurd_probe(engine, "1", SITE, mode="longitudinal", category=cat, years=(1700, 2013)).estimate
        for name, value in (("longitudinal", longitudinal), ("sectional", sectional), ("absurd", absurd)):
            if value != expected:
                mismatches.append(f"{cat}/{name}: {value} != {expected}")

    nested = [(start, 2013) for start in range(1700, 2013, 25)] + [(2013, 2013)]
    findings = sectional_probe(engine, nested).findings
    findings += patent_flag_audit(engine, years)
    findings += citation_toggle_audit(engine, years)
    findings += composition_breakdown(engine, years).findings
    findings += false_serp_audit(engine, Query(year_range=(2013, 2013), page_size=20), range(1, 60))
    ok = len(view) >= 1_000_000 and not mismatches and not findings
    criterion(6, "probe exactness", ok,
              f"entries={len(view):,}; mismatches={mismatches}; findings={len(findings)}")
    assert ok


PATENT_FLAG_GAPS = {2013: -80_000, 2010: -180_000, 2009: -120_000, 2007: -120_000, 2006: -50_000,
           2005: -30_000, 2004: -70_000, 2002: -100_000, 2000: -140_000}


def test_criterion_7_fault_detection(criterion):
    universe = generate_universe(UniverseConfig(total_docs=200_000, citation_density=2.0, seed=7))
    view = derive_view(universe, CoveragePolicy.uniform(0.9, stub_rate=0.3), 7)
    nested = [(start, 2013) for start in range(1700, 2013, 50)] + [(2000, 2013)]
    broken = SimulatedEngine(view, FaultProfile(custom_range_malfunction=True), seed=7)
    simulated_flags = [f for f in sectional_probe(broken, nested).findings if f.kind == "range-non-monotone"]

    fixture = published_engine()
    malfunction_ranges = [r.years for r in fixture.series("articles", "", "range", ALL_FLAGS)]
    range_replay = {f.where: f.magnitude for f in sectional_probe(fixture, malfunction_ranges).findings}
    range_replay_ok = range_replay.get("1700-2013 vs 2000-2013") == -97_000

    flaky = SimulatedEngine(view, FaultProfile(flag_exclusion_inconsistency_rate=0.4), seed=7)
    years = years_between(1700, 2013)
    n_flag = len(patent_flag_audit(flaky, years))
    mean, sigma = 314 * 0.4, math.sqrt(314 * 0.4 * 0.6)
    within = abs(n_flag - mean) <= 3 * sigma

    inc = {r.years[0]: r.hce for r in fixture.series("articles", "", "year", ALL_FLAGS)}
    exc = {r.years[0]: r.hce for r in fixture.series("articles", "", "year", "records+citations")}
    common = sorted(set(inc) & set(exc))
    replay = flag_inconsistencies(YearSeries.from_counts({y: inc[y] for y in common}),
                                  YearSeries.from_counts({y: exc[y] for y in common}, flags="records+citations"))
    flag_replay = {int(f.where): f.magnitude for f in replay}

    ok = len(simulated_flags) >= 1 and range_replay_ok and within and flag_replay == PATENT_FLAG_GAPS
    criterion(7, "fault detection", ok,
              f"simulated range flags={len(simulated_flags)}; 1700-2013 vs 2000-2013="
              f"{range_replay.get('1700-2013 vs 2000-2013')}; flag-exclusion findings={n_flag} "
              f"(125.6 +- {3 * sigma:.1f}); replayed years={len(flag_replay)}")
    assert ok


def _brute_pearson(x, y):
    n = len(x)
    mx, my = sum(x) / n, sum(y) / n
    cov = sum((a - mx) * (b - my) for a, b in zip(x, y)) / n
    vx = sum((a - mx) ** 2 for a in x) / n
    vy = sum((b - my) ** 2 for b in y) / n
    return cov / math.sqrt(vx * vy)


def test_criterion_8_numerical_oracles(criterion):
    rng = random.Random(8)
    worst = 0.0
    for _ in range(1000):
        n = rng.randint(3, 60)
        x = [rng.uniform(-1e3, 1e3) for _ in range(n)]
        y = [0.3 * a + rng.gauss(0, 300) for a in x]
        worst = max(worst, abs(pearson(x, y) - _brute_pearson(x, y)))
    jaccard_bad = 0
    for _ in range(1000):
        a = {rng.randrange(200) for _ in range(rng.randint(0, 80))}
        b = {rng.randrange(200) for _ in range(rng.randint(0, 80))}
        union = [v for v in range(200) if v in a or v in b]
        both = [v for v in union if v in a and v in b]
        expected = len(both) / len(union) if union else 0.0
        jaccard_bad += jaccard(a, b) != expected
    gen = np.random.default_rng(8)
    values = np.concatenate([gen.integers(0, 10**10, 5000), gen.integers(0, 10**6, 5000)])
    idem_bad = 0
    for v in values.tolist():
        once = round_hce(v).value
        idem_bad += round_hce(once).value != once
    ok = worst <= 1e-12 and jaccard_bad == 0 and idem_bad == 0
    criterion(8, "numerical oracles", ok,
              f"max pearson error={worst:.2e}; jaccard mismatches={jaccard_bad}; non-idempotent={idem_bad}")
    assert ok


def test_criterion_9_composition_replay(criterion):
    comp = composition_breakdown(published_engine(), years_between(1700, 2013))
    shares = comp.shares
    ok = (abs(shares["records"] - 0.8069) <= 1e-4 and abs(shares["citations"] - 0.1838) <= 1e-4
          and abs(shares["patents"] - 0.0092) <= 1e-4
          and abs(comp.totals["records"] - 80.5e6) / 80.5e6 <= 0.005)
    criterion(9, "composition replay", ok,
              f"shares=({shares['records']:.4f}, {shares['citations']:.4f}, {shares['patents']:.4f}) "
              f"records={comp.totals['records']:,}")
    assert ok
