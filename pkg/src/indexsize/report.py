"""Run every size-estimation method and assemble the summary report.

Method ids follow the summary table layout:

    A   capture-recapture estimate scaled from English to all languages
    B   ratio projection from a reference index
    C1  empty query, one custom range          (reported, marked discarded)
    C2  empty query, year by year
    D1  absurd query, no year filter
    D2  absurd query, one custom range
    D3  absurd query, year by year

``backend`` selects where hit counts come from: ``fixture`` replays recorded
observations, ``simulated`` builds a synthetic universe and queries it
in-process, ``mock-live`` sends the queries to a running service. Methods A and
B need index internals, so outside ``simulated`` they read published inputs.
"""

from __future__ import annotations

import csv
import json
import logging
import statistics
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import probes
from .engine import EngineBackend, EngineServerError, FaultProfile, Query, SimulatedEngine
from .estimators import (EstimateResult, OverlapStatistic, RatioModel, english_correction, error_adjust,
                         khabsa_giles_estimate, language_decompose, overlap, ratio_project,
                         round_half_up, scale_by_english_share)
from .fixtures import FixtureEngine, FixtureMissError, data_path, load_hce_fixture
from .studies import FilterPolicy, parse_studies_csv, study_ratios, summarize_ratios
from .universe import (CountFilter, CoveragePolicy, GroundTruthUniverse, IndexView, UniverseConfig,
                       ValidationError, derive_view, generate_universe, true_count)

log = logging.getLogger(__name__)

METHODS = ("A", "B", "C1", "C2", "D1", "D2", "D3")
METHOD_LABELS = {
    "A": "Capture-recapture (citing-set overlap)",
    "B": "Ratio projection from reference index",
    "C1": "Empty query (custom range)",
    "C2": "Empty query (longitudinal)",
    "D1": "Absurd query (total)",
    "D2": "Absurd query (custom range)",
    "D3": "Absurd query (longitudinal)",
}
DISCARDED = ("C1",)
BACKENDS = ("fixture", "simulated", "mock-live")
CATEGORIES = ("articles", "case-law")


class ConfigurationError(ValueError):
    pass


def default_gs_policy() -> dict:
    return {"default": 0.8, "stub_rate": 0.3}


def default_ref_policy() -> dict:
    return {
        "default": 0.1,
        "probabilities": {
            "english|journal-article|article": 0.7,
            "english|conference|article": 0.5,
            "*|*|patent": 0.0,
            "*|*|case-law": 0.0,
        },
    }


@dataclass
class RunConfig:
    backend: str = "fixture"
    methods: list[str] = field(default_factory=lambda: list(METHODS))
    seed: int = 0
    error_rate: float = 0.10
    out: str | None = None
    # fixture inputs
    hce_fixture: str | None = None
    studies_fixture: str | None = None
    inputs: str | None = None
    # simulation
    universe: dict | str | None = None
    gs_policy: dict = field(default_factory=default_gs_policy)
    ref_policy: dict = field(default_factory=default_ref_policy)
    faults: dict = field(default_factory=dict)
    overlap_kind: str = "jaccard"
    sample_size: int = 150
    english_share: float | None = None
    factor: float = 3.0
    # probing
    years: tuple[int, int] | None = None
    d2_period: tuple[int, int] | None = None
    absurd_term: str = "1"
    absurd_site: str = "ssstfsffsdffasdfs.com"
    service_url: str | None = None
    rate_limit_per_minute: float = 30.0
    delay: float = 0.0
    fan_out: int = 1
    audits: bool | None = None  # default: on, except for mock-live where they cost ~1,300 queries

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise ConfigurationError(f"backend must be one of {BACKENDS}, got {self.backend!r}")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ConfigurationError(f"unknown method(s): {', '.join(bad)}")
        if not 0 <= self.error_rate < 1:
            raise ConfigurationError("error_rate must be in [0, 1)")
        for name in ("years", "d2_period"):
            value = getattr(self, name)
            if value is not None:
                setattr(self, name, (int(value[0]), int(value[1])))

    @classmethod
    def from_dict(cls, data: dict, base_dir: str | Path | None = None) -> "RunConfig":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigurationError(f"unknown config key(s): {', '.join(sorted(unknown))}")
        data = dict(data)
        if base_dir is not None:
            for key in ("hce_fixture", "studies_fixture", "inputs", "out"):
                if data.get(key) and not Path(data[key]).is_absolute():
                    data[key] = str(Path(base_dir) / data[key])
            if isinstance(data.get("universe"), str) and not Path(data["universe"]).is_absolute():
                data["universe"] = str(Path(base_dir) / data["universe"])
        return cls(**data)

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        return cls.from_dict(json.loads(path.read_text(encoding="utf-8")), base_dir=path.parent)

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("years", "d2_period"):
            if d[key] is not None:
                d[key] = list(d[key])
        return d

    def with_published_fixtures(self) -> "RunConfig":
        """Fill unset fixture paths with the fixtures shipped in the package."""
        self.hce_fixture = self.hce_fixture or str(data_path("published_hce.csv"))
        self.studies_fixture = self.studies_fixture or str(data_path("studies_catalogue.csv"))
        self.inputs = self.inputs or str(data_path("published_inputs.json"))
        return self


@dataclass
class MethodRow:
    method: str
    label: str
    estimate: int | None
    status: str
    provenance: str
    inputs: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    error: str | None = None


@dataclass
class SummaryReport:
    rows: list[MethodRow]
    consensus: dict
    findings: list[dict]
    extras: dict = field(default_factory=dict)
    backend: str = "fixture"

    def row(self, method: str) -> MethodRow:
        for r in self.rows:
            if r.method == method:
                return r
        raise KeyError(method)

    @property
    def ok(self) -> bool:
        return all(r.status != "error" for r in self.rows)

    def to_dict(self) -> dict:
        return {
            "backend": self.backend,
            "rows": [asdict(r) for r in self.rows],
            "consensus": self.consensus,
            "findings": self.findings,
            "extras": self.extras,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SummaryReport":
        return cls(rows=[MethodRow(**r) for r in data["rows"]], consensus=data["consensus"],
                   findings=data["findings"], extras=data.get("extras", {}),
                   backend=data.get("backend", "fixture"))


def consensus(rows: list[MethodRow], error_rate: float) -> dict:
    """Range of the retained estimates and their median after the error allowance."""
    values = [r.estimate for r in rows if r.status == "ok" and r.estimate is not None]
    if not values:
        return {"n": 0}
    midpoint = statistics.median(values)
    return {
        "n": len(values),
        "min": min(values),
        "max": max(values),
        "midpoint": round_half_up(midpoint),
        "error_rate": error_rate,
        "error_adjusted_midpoint": error_adjust(round_half_up(midpoint), error_rate),
    }


# --- simulation ------------------------------------------------------------------

@dataclass
class Simulation:
    universe: GroundTruthUniverse
    gs_view: IndexView
    ref_view: IndexView
    engine: SimulatedEngine


def universe_config_from(source: dict | str | None, seed: int) -> UniverseConfig:
    if source is None:
        return UniverseConfig(total_docs=100_000, seed=seed)
    if isinstance(source, str):
        return UniverseConfig.from_file(source)
    data = dict(source)
    data.setdefault("seed", seed)
    return UniverseConfig.from_dict(data)


def build_simulation(config: RunConfig) -> Simulation:
    ucfg = universe_config_from(config.universe, config.seed)
    universe = generate_universe(ucfg)
    gs_view = derive_view(universe, CoveragePolicy.from_dict(config.gs_policy), config.seed)
    ref_view = derive_view(universe, CoveragePolicy.from_dict(config.ref_policy), config.seed + 1)
    engine = SimulatedEngine(gs_view, FaultProfile.from_dict(config.faults), config.seed)
    return Simulation(universe, gs_view, ref_view, engine)


def citing_sets(universe: GroundTruthUniverse, first: IndexView, second: IndexView, sample_size: int,
                seed: int, language: str | None = "english") -> tuple[set[int], set[int], np.ndarray]:
    """Citing documents of a cited-document sample, as seen by each of two views.

    The sample is drawn from documents that are full records in both views and
    are cited at least once; citing documents are restricted to ``language``.
    """
    n = len(universe)
    in_first = np.zeros(n, bool)
    in_first[first.full_record_ids()] = True
    in_second = np.zeros(n, bool)
    in_second[second.full_record_ids()] = True
    sources, targets = universe.citing_pairs()
    keep = np.ones(sources.shape[0], bool)
    if language is not None:
        lang_code = ("english", "other").index(language)
        keep = universe.language[sources] == lang_code
    cited = np.unique(targets[keep])
    eligible = cited[in_first[cited] & in_second[cited]]
    if language is not None:
        eligible = eligible[universe.language[eligible] == lang_code]
    rng = np.random.default_rng([seed, 0xC17])
    sample = rng.choice(eligible, size=min(sample_size, eligible.shape[0]), replace=False)
    chosen = np.zeros(n, bool)
    chosen[sample] = True
    citers = np.unique(sources[keep & chosen[targets]])
    return set(citers[in_first[citers]].tolist()), set(citers[in_second[citers]].tolist()), sample


def _simulated_a(sim: Simulation, config: RunConfig) -> MethodRow:
    a_cit, b_cit, sample = citing_sets(sim.universe, sim.gs_view, sim.ref_view, config.sample_size, config.seed)
    ref_full = CountFilter(entry_kind="full-record")
    ref_size = true_count(sim.ref_view, ref_full)
    ref_english = true_count(sim.ref_view, CountFilter(entry_kind="full-record", language="english"))
    english_fraction = ref_english / ref_size if ref_size else 1.0
    c = english_correction(ref_size, english_fraction) if english_fraction > 0 else 0
    stat = overlap(a_cit, b_cit, config.overlap_kind)
    population = khabsa_giles_estimate(c, stat)
    gs_coverage = overlap(a_cit, b_cit, "containment-in-B")
    gs_english = round_half_up(population.estimate * gs_coverage.value)
    gs_full = true_count(sim.gs_view, CountFilter(entry_kind="full-record"))
    share = config.english_share
    if share is None:
        share = true_count(sim.gs_view, CountFilter(entry_kind="full-record", language="english")) / gs_full
    estimate = scale_by_english_share(gs_english, share)
    return MethodRow(
        method="A", label=METHOD_LABELS["A"], estimate=estimate, status="ok",
        provenance=f"simulated universe {sim.universe.universe_id}: {len(sample)} cited documents, "
                   f"{len(a_cit)}/{len(b_cit)} citing documents",
        inputs={"C": c, "overlap_kind": stat.kind, "overlap": stat.value, "english_share": share,
                "sample_size": int(len(sample))},
        diagnostics={"population_estimate": population.estimate,
                     "gs_english_estimate": gs_english,
                     "true_population_english": int(true_count(sim.universe, CountFilter(language="english"))),
                     "true_gs_full_records": gs_full},
    )


def _simulated_b(sim: Simulation, config: RunConfig) -> MethodRow:
    ref_size = true_count(sim.ref_view, CountFilter(entry_kind="full-record"))
    result = ratio_project(RatioModel(factor=config.factor, wos_size=ref_size))
    gs_full = true_count(sim.gs_view, CountFilter(entry_kind="full-record"))
    return MethodRow(
        method="B", label=METHOD_LABELS["B"], estimate=result.estimate, status="ok",
        provenance=f"simulated reference view of universe {sim.universe.universe_id}",
        inputs=result.inputs,
        diagnostics={"true_factor": gs_full / ref_size if ref_size else None},
    )


# --- published inputs ------------------------------------------------------------

def load_inputs(path: str | Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _fixture_a(inputs: dict) -> MethodRow:
    kg = inputs["khabsa_giles"]
    share = inputs["english_share"]
    estimate = scale_by_english_share(kg["gs_english_estimate"], share)
    corrected = english_correction(kg["mas_size"], kg["english_factor"])
    population = khabsa_giles_estimate(kg["mas_english_size_stated"],
                                       OverlapStatistic("jaccard", kg["jaccard"]))
    return MethodRow(
        method="A", label=METHOD_LABELS["A"], estimate=estimate, status="ok",
        provenance="published inputs: English GS estimate and English share",
        inputs={"gs_english_estimate": kg["gs_english_estimate"], "english_share": share},
        diagnostics={
            "variant_estimate": scale_by_english_share(kg["gs_english_estimate_variant"], share),
            "variant_input": kg["gs_english_estimate_variant"],
            "population_estimate": population.estimate,
            "english_corrected_mas": corrected,
            "english_corrected_mas_stated": kg["mas_english_size_stated"],
            "english_correction_discrepancy": kg["mas_english_size_stated"] - corrected,
        },
    )


def _fixture_b(inputs: dict, studies_path: str | None) -> MethodRow:
    r = inputs["ratio"]
    result = ratio_project(RatioModel(factor=r["factor"], wos_size=r["wos_size"]))
    decomposition = language_decompose(RatioModel(
        factor=r["factor"], wos_size=r["wos_size_rounded"],
        wos_english_share=r["wos_english_share"], gs_english_share=inputs["english_share"]))
    diagnostics: dict[str, Any] = {"language_decomposition": decomposition}
    if studies_path:
        records = parse_studies_csv(studies_path).records()
        for unit in ("documents", "unique-citing-documents"):
            try:
                s = summarize_ratios(study_ratios(records, unit, FilterPolicy()))
            except ValueError as exc:
                diagnostics[f"studies_{unit}"] = {"error": str(exc)}
            else:
                diagnostics[f"studies_{unit}"] = {"median": s.median, "geometric_mean": s.geometric_mean, "n": s.n}
    return MethodRow(
        method="B", label=METHOD_LABELS["B"], estimate=result.estimate, status="ok",
        provenance="published inputs: correction factor and reference index size",
        inputs=result.inputs, diagnostics=diagnostics,
    )


# --- engine-driven methods -----------------------------------------------------------

def _sum_categories(fn, method: str, provenance: str) -> MethodRow:
    parts, inputs, diagnostics = 0, {}, {}
    for cat in CATEGORIES:
        result: EstimateResult = fn(cat)
        parts += result.estimate
        inputs[cat] = result.estimate
        if result.diagnostics:
            diagnostics[cat] = result.diagnostics
    status = "discarded" if method in DISCARDED else "ok"
    return MethodRow(method, METHOD_LABELS[method], parts, status, provenance, inputs, diagnostics)


def _engine_methods(engine: EngineBackend, config: RunConfig, years: tuple[int, int],
                    d2_period: tuple[int, int], series_out: dict) -> dict[str, callable]:
    term, site = config.absurd_term, config.absurd_site
    backend = engine.capabilities().get("backend", "engine")
    year_list = probes.years_between(*years)

    def c1(cat):
        hce = engine.count(Query(year_range=years, category=cat))
        return EstimateResult("empty-custom-range", hce.value, diagnostics=hce.diagnostics)

    def c2(cat):
        if engine.capabilities().get("longitudinal_totals"):
            total, _, diag = probes._longitudinal_total(engine, year_list, probes.ALL_FLAGS, cat, "", None)
            return EstimateResult("empty-longitudinal", total, diagnostics=diag)
        series, total = probes.longitudinal_sum(engine, year_list, probes.ALL_FLAGS, cat,
                                                delay=config.delay, fan_out=config.fan_out)
        series_out[f"C2_{cat}"] = series
        if not series.complete:
            raise EngineServerError(f"{len(series.errors)} year(s) failed: {sorted(series.errors)[:5]}")
        return EstimateResult("empty-longitudinal", total)

    def d(mode, period):
        def run(cat):
            if mode == "longitudinal" and not engine.capabilities().get("longitudinal_totals"):
                series, total = probes.longitudinal_sum(engine, year_list, probes.ALL_FLAGS, cat, term, site,
                                                        delay=config.delay, fan_out=config.fan_out)
                series_out[f"D3_{cat}"] = series
                if not series.complete:
                    raise EngineServerError(f"{len(series.errors)} year(s) failed")
                return EstimateResult("absurd-longitudinal", total)
            return probes.absurd_probe(engine, term, site, probes.ALL_FLAGS, mode, cat, period, control=False)
        return run

    return {
        "C1": lambda: _sum_categories(c1, "C1", f"{backend}: empty query, range {years[0]}-{years[1]}"),
        "C2": lambda: _sum_categories(c2, "C2", f"{backend}: empty query per year {years[0]}-{years[1]}"),
        "D1": lambda: _sum_categories(d("total", None), "D1", f"{backend}: {term} -site:{site}, no year filter"),
        "D2": lambda: _sum_categories(d("custom-range", d2_period), "D2",
                                      f"{backend}: {term} -site:{site}, range {d2_period[0]}-{d2_period[1]}"),
        "D3": lambda: _sum_categories(d("longitudinal", years), "D3",
                                      f"{backend}: {term} -site:{site} per year {years[0]}-{years[1]}"),
    }


def _fixture_audits(engine: FixtureEngine) -> tuple[list, dict]:
    findings, extras = [], {}
    ranges = [r.years for r in engine.series("articles", "", "range", probes.ALL_FLAGS)]
    if ranges:
        findings += probes.sectional_probe(engine, ranges).findings
    inc = {r.years[0]: r.hce for r in engine.series("articles", "", "year", probes.ALL_FLAGS)}
    exc = {r.years[0]: r.hce for r in engine.series("articles", "", "year", "records+citations")}
    common = sorted(set(inc) & set(exc))
    if common:
        findings += probes.flag_inconsistencies(
            probes.YearSeries.from_counts({y: inc[y] for y in common}),
            probes.YearSeries.from_counts({y: exc[y] for y in common}, flags="records+citations"))
    try:
        comp = probes.composition_breakdown(engine, probes.years_between(1700, 2013))
    except FixtureMissError:
        pass
    else:
        extras["composition"] = {"totals": comp.totals, "shares": comp.shares}
        findings += comp.findings
    return [f.to_dict() for f in findings], extras


def _decade_table(rows) -> list[dict]:
    totals: dict[str, dict[str, int]] = {}
    for r in rows:
        if r.procedure == "longitudinal" and r.source == "records-by-decade" and r.query == "":
            totals.setdefault(r.period, {})[r.engine] = r.hce
    complete = {p: c for p, c in sorted(totals.items()) if "gs" in c}
    return [asdict(row) for row in probes.decade_ratios(complete, "gs")]


def _simulated_audits(engine: EngineBackend, years: tuple[int, int], config: RunConfig) -> tuple[list, dict]:
    lo, hi = years
    findings = []
    step = max((hi - lo) // 6, 1)
    ranges = [(start, hi) for start in range(lo, hi, step)]
    findings += probes.sectional_probe(engine, ranges).findings
    year_list = probes.years_between(lo, hi)
    findings += probes.patent_flag_audit(engine, year_list)
    findings += probes.citation_toggle_audit(engine, year_list)
    comp = probes.composition_breakdown(engine, year_list)
    findings += comp.findings
    if engine.capabilities().get("supports_paging"):
        q = Query(term=config.absurd_term, excluded_site=config.absurd_site, year_range=(hi, hi), page_size=20)
        findings += probes.false_serp_audit(engine, q, range(1, 6))
    return [f.to_dict() for f in findings], {"composition": {"totals": comp.totals, "shares": comp.shares}}


def _check_requirements(config: RunConfig) -> None:
    """Fail before any probing when a selected method lacks its inputs."""
    needs_engine = [m for m in config.methods if m.startswith(("C", "D"))]
    needs_inputs = [m for m in config.methods if m in ("A", "B")]
    if config.backend == "fixture":
        if needs_engine and not (config.hce_fixture and Path(config.hce_fixture).exists()):
            raise ConfigurationError(f"methods {needs_engine} need an existing hce_fixture (got {config.hce_fixture!r})")
    if config.backend in ("fixture", "mock-live") and needs_inputs:
        if not (config.inputs and Path(config.inputs).exists()):
            raise ConfigurationError(f"methods {needs_inputs} need an existing inputs file (got {config.inputs!r})")
    if config.studies_fixture and not Path(config.studies_fixture).exists():
        raise ConfigurationError(f"studies fixture not found: {config.studies_fixture}")
    if config.backend == "mock-live" and not config.service_url:
        raise ConfigurationError("mock-live backend needs service_url")
    if isinstance(config.universe, str) and not Path(config.universe).exists():
        raise ConfigurationError(f"universe config not found: {config.universe}")


def run(config: RunConfig, engine: EngineBackend | None = None) -> SummaryReport:
    """Execute the selected methods; method failures become ``error`` rows."""
    _check_requirements(config)
    series_out: dict[str, probes.YearSeries] = {}
    rows: list[MethodRow] = []
    findings: list[dict] = []
    extras: dict[str, Any] = {}
    sim = None
    hce_rows = None

    if config.backend == "simulated":
        sim = build_simulation(config)
        engine = engine or sim.engine
        years = config.years or sim.universe.config.year_range
        d2_period = config.d2_period or years
        extras["truth"] = {
            "universe_id": sim.universe.universe_id,
            "universe_size": len(sim.universe),
            "view_entries": len(sim.gs_view),
            "view_hits": int(sim.gs_view.version_counts.sum()),
            "view_full_records": true_count(sim.gs_view, CountFilter(entry_kind="full-record")),
        }
    elif config.backend == "fixture":
        hce_rows = load_hce_fixture(config.hce_fixture) if config.hce_fixture else []
        engine = engine or FixtureEngine(hce_rows, "gs")
        years = config.years or (1700, 2013)
        d2_period = config.d2_period or (1700, 2014)
    else:
        if engine is None:
            from .live import LiveEngineClient
            engine = LiveEngineClient(config.service_url, rate_limit_per_minute=config.rate_limit_per_minute)
        years = config.years or (1700, 2013)
        d2_period = config.d2_period or years

    inputs = load_inputs(config.inputs) if config.inputs and sim is None else None
    engine_methods = _engine_methods(engine, config, years, d2_period, series_out)

    for method in METHODS:
        if method not in config.methods:
            continue
        try:
            if method == "A":
                row = _simulated_a(sim, config) if sim else _fixture_a(inputs)
            elif method == "B":
                row = _simulated_b(sim, config) if sim else _fixture_b(inputs, config.studies_fixture)
            else:
                row = engine_methods[method]()
        except (EngineServerError, FixtureMissError, ArithmeticError, ValueError, KeyError) as exc:
            log.warning("method %s failed: %s", method, exc)
            row = MethodRow(method, METHOD_LABELS[method], None, "error",
                            provenance=f"{config.backend}", error=f"{type(exc).__name__}: {exc}")
        rows.append(row)

    c2 = next((r for r in rows if r.method == "C2" and r.estimate is not None), None)
    if c2 is not None:
        c2.diagnostics["error_adjusted"] = error_adjust(c2.estimate, config.error_rate)

    audits = config.audits if config.audits is not None else config.backend != "mock-live"
    if audits:
        try:
            if isinstance(engine, FixtureEngine):
                f, x = _fixture_audits(engine)
                x["decades"] = _decade_table(hce_rows or engine.rows)
            elif config.backend != "fixture":
                f, x = _simulated_audits(engine, years, config)
            else:
                f, x = [], {}
        except (EngineServerError, FixtureMissError, ValidationError) as exc:
            f, x = [], {"audit_error": str(exc)}
        findings += f
        extras.update(x)

    extras["series"] = {name: [[y, h.value] for y, h in s.points] for name, s in series_out.items()}
    return SummaryReport(rows=rows, consensus=consensus(rows, config.error_rate), findings=findings,
                         extras=extras, backend=config.backend)


REPORT_COLUMNS = ("method", "label", "estimate", "estimate_millions", "status", "provenance")


def emit(report: SummaryReport, out_dir: str | Path, formats: tuple[str, ...] = ("csv", "json")) -> list[Path]:
    """Write the report (and per-year plot data) into ``out_dir``; returns written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "json" in formats:
        path = out / "report.json"
        path.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        written.append(path)
    if "csv" in formats:
        path = out / "report.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(REPORT_COLUMNS)
            for r in report.rows:
                millions = "" if r.estimate is None else f"{r.estimate / 1e6:.2f}"
                writer.writerow([r.method, r.label, "" if r.estimate is None else r.estimate, millions,
                                 r.status, r.provenance])
        written.append(path)
        path = out / "findings.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["kind", "where", "magnitude", "detail"])
            for f in report.findings:
                writer.writerow([f["kind"], f["where"], f["magnitude"], f["detail"]])
        written.append(path)
    for name, points in sorted(report.extras.get("series", {}).items()):
        written.append(write_plot_data(points, out / f"series_{name}.csv"))
    return written


def write_plot_data(points, path: str | Path) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["year", "hce"])
        for year, value in points:
            writer.writerow([year, value])
    return path


def format_table(report: SummaryReport) -> str:
    lines = [f"{'method':<6} {'estimate':>16} {'millions':>9}  status     label"]
    for r in report.rows:
        est = "-" if r.estimate is None else f"{r.estimate:,}"
        mil = "-" if r.estimate is None else f"{r.estimate / 1e6:.1f}"
        lines.append(f"{r.method:<6} {est:>16} {mil:>9}  {r.status:<10} {r.label}")
    c = report.consensus
    if c.get("n"):
        lines.append(f"consensus over {c['n']} methods: {c['min'] / 1e6:.1f}M - {c['max'] / 1e6:.1f}M, "
                     f"median {c['midpoint'] / 1e6:.1f}M, after {c['error_rate']:.0%} error allowance "
                     f"{c['error_adjusted_midpoint'] / 1e6:.1f}M")
    if report.findings:
        kinds: dict[str, int] = {}
        for f in report.findings:
            kinds[f["kind"]] = kinds.get(f["kind"], 0) + 1
        lines.append("findings: " + ", ".join(f"{k}={v}" for k, v in sorted(kinds.items())))
    return "\n".join(lines)
