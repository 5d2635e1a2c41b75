"""Command-line front end: ``indexsize <command> ...``.

Exit codes: 0 success, 1 a method or probe failed, 2 bad configuration.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

from . import probes, report
from .engine import EngineServerError, QueryLog
from .estimators import (CaptureRecaptureInput, OverlapStatistic, RatioModel, UndefinedEstimateError,
                         khabsa_giles_estimate, language_decompose, lincoln_petersen, ratio_project,
                         scale_by_english_share)
from .fixtures import FixtureEngine, FixtureMissError, load_hce_fixture
from .studies import FilterPolicy, parse_studies_csv, study_ratios, summarize_ratios, write_studies_csv
from .universe import ValidationError, write_universe, write_view

log = logging.getLogger("indexsize")


def _span(text: str) -> tuple[int, int]:
    lo, _, hi = text.partition("-")
    try:
        return int(lo), int(hi or lo)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected YEAR or YEAR-YEAR, got {text!r}") from None


def load_config(args) -> report.RunConfig:
    cfg = report.RunConfig.from_file(args.config) if args.config else report.RunConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.backend is not None:
        cfg.backend = args.backend
        cfg.__post_init__()
    if args.out is not None:
        cfg.out = args.out
    if cfg.backend in ("fixture", "mock-live"):
        cfg.with_published_fixtures()
    return cfg


def make_engine(cfg: report.RunConfig):
    if cfg.backend == "fixture":
        return FixtureEngine(load_hce_fixture(cfg.hce_fixture), "gs")
    if cfg.backend == "mock-live":
        if not cfg.service_url:
            raise report.ConfigurationError("mock-live backend needs service_url")
        from .live import LiveEngineClient
        return LiveEngineClient(cfg.service_url, rate_limit_per_minute=cfg.rate_limit_per_minute)
    return report.build_simulation(cfg).engine


def _out_dir(cfg: report.RunConfig, default: str) -> Path:
    out = Path(cfg.out or default)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _print_json(data) -> None:
    print(json.dumps(data, indent=2, sort_keys=True, default=str))


# --- commands ------------------------------------------------------------------

def cmd_simulate(args, cfg) -> int:
    sim = report.build_simulation(cfg)
    out = _out_dir(cfg, "simulation")
    write_universe(sim.universe, out / "universe.ndjson")
    write_view(sim.gs_view, out / "gs_view.ndjson")
    write_view(sim.ref_view, out / "ref_view.ndjson")
    summary = {
        "universe_id": sim.universe.universe_id,
        "documents": len(sim.universe),
        "gs_view_entries": len(sim.gs_view),
        "ref_view_entries": len(sim.ref_view),
        "config": sim.universe.config.to_dict(),
    }
    (out / "simulation.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    _print_json(summary)
    return 0


def _with_log(engine, args):
    if getattr(args, "query_log", None):
        return QueryLog(engine, open(args.query_log, "a", encoding="utf-8"))
    return engine


def cmd_probe(args, cfg) -> int:
    engine = _with_log(make_engine(cfg), args)
    out = _out_dir(cfg, "probe")
    flags = args.flags
    if args.kind == "sectional":
        result = probes.sectional_probe(engine, args.ranges, flags, args.category, args.term, args.site)
        for r, h in result.points:
            print(f"{r[0]}-{r[1]}\t{h.value}")
        for r, err in result.errors.items():
            print(f"{r[0]}-{r[1]}\terror: {err}", file=sys.stderr)
        probes.write_findings_csv(result.findings, out / "findings.csv")
        print(f"{len(result.findings)} finding(s)")
        return 1 if result.errors else 0
    if args.kind == "longitudinal":
        years = probes.years_between(*args.years)
        series, total = probes.longitudinal_sum(engine, years, flags, args.category, args.term, args.site,
                                                delay=cfg.delay, fan_out=cfg.fan_out)
        report.write_plot_data([(y, h.value) for y, h in series.points], out / "series.csv")
        print(f"total {total} over {len(series.points)} year(s)")
        for y, err in sorted(series.errors.items()):
            print(f"{y}\terror: {err}", file=sys.stderr)
        return 0 if series.complete else 1
    result = probes.absurd_probe(engine, args.term or cfg.absurd_term, args.site or cfg.absurd_site, flags,
                                 args.mode, args.category, args.years, control=not args.no_control)
    _print_json(result.to_dict())
    return 0


def cmd_estimate(args, cfg) -> int:
    if args.kind == "cr":
        if args.overlap is not None:
            result = khabsa_giles_estimate(args.C, OverlapStatistic(args.overlap_kind, args.overlap))
        else:
            if args.M is None or args.R is None:
                raise report.ConfigurationError("estimate cr needs --M, --C and --R, or --C and --overlap")
            result = lincoln_petersen(CaptureRecaptureInput(args.M, args.C, args.R))
        data = result.to_dict()
        if args.english_share:
            data["diagnostics"]["scaled_by_english_share"] = scale_by_english_share(result.estimate,
                                                                                   args.english_share)
        _print_json(data)
        return 0
    model = RatioModel(args.factor, args.wos, args.wos_english_share, args.english_share or 0.65)
    data = ratio_project(model).to_dict()
    data["diagnostics"]["language_decomposition"] = language_decompose(model)
    _print_json(data)
    return 0


def cmd_ingest(args, cfg) -> int:
    parsed = parse_studies_csv(args.path)
    for err in parsed.errors:
        print(f"{args.path}:{err.line}: {err.message}", file=sys.stderr)
    records = parsed.records()
    policy = FilterPolicy(min_wos_count=args.min_wos)
    summary = {"rows": len(parsed.rows), "errors": len(parsed.errors), "studies": len(records)}
    for unit in policy.allowed_units:
        try:
            ratios = study_ratios(records, unit, policy)
        except ValueError as exc:
            summary[unit] = {"error": str(exc)}
            continue
        s = summarize_ratios(ratios)
        summary[unit] = {"n": s.n, "median": s.median, "geometric_mean": s.geometric_mean,
                         "ratios": dict(ratios.ratios), "excluded": dict(ratios.excluded)}
    if cfg.out:
        out = _out_dir(cfg, "ingest")
        write_studies_csv(parsed.rows, out / "studies_normalized.csv")
    _print_json(summary)
    return 1 if parsed.errors and not parsed.rows else 0


def cmd_report(args, cfg) -> int:
    if args.methods:
        cfg.methods = [m.strip() for m in args.methods.split(",")]
        cfg.__post_init__()
    result = report.run(cfg)
    out = _out_dir(cfg, "report")
    formats = ("csv", "json") if args.format == "both" else (args.format,)
    report.emit(result, out, formats)
    print(report.format_table(result))
    for r in result.rows:
        if r.status == "error":
            print(f"method {r.method} failed: {r.error}", file=sys.stderr)
    return 0 if result.ok else 1


def cmd_serve(args, cfg) -> int:
    import uvicorn

    from .service import create_app

    if cfg.backend == "mock-live":
        raise report.ConfigurationError("serve wraps a local engine; use --backend simulated or fixture")
    uvicorn.run(create_app(make_engine(cfg)), host=args.host, port=args.port, log_level="warning")
    return 0


# --- parser ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    # SUPPRESS keeps a subcommand from resetting a global flag given before it
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="JSON file with RunConfig keys")
    common.add_argument("--seed", type=int)
    common.add_argument("--backend", choices=report.BACKENDS)
    common.add_argument("--out", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="indexsize", description=__doc__.splitlines()[0], parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("simulate", parents=[common], help="build a universe and two index views")

    p_probe = sub.add_parser("probe", parents=[common], help="query the engine")
    probe_sub = p_probe.add_subparsers(dest="kind", required=True)
    query_args = argparse.ArgumentParser(add_help=False)
    query_args.add_argument("--category", choices=("articles", "case-law"), default="articles")
    query_args.add_argument("--flags", default=probes.ALL_FLAGS,
                            choices=("records+citations+patents", "records+citations", "records+patents", "records"))
    query_args.add_argument("--term", default="")
    query_args.add_argument("--site", default=None, help="excluded site")
    query_args.add_argument("--query-log", help="append JSON lines for every request")
    p = probe_sub.add_parser("sectional", parents=[common, query_args])
    p.add_argument("ranges", nargs="+", type=_span, metavar="FROM-TO")
    p = probe_sub.add_parser("longitudinal", parents=[common, query_args])
    p.add_argument("--years", type=_span, required=True, metavar="FROM-TO")
    p = probe_sub.add_parser("absurd", parents=[common, query_args])
    p.add_argument("--mode", choices=probes.ABSURD_MODES, default="total")
    p.add_argument("--years", type=_span, metavar="FROM-TO")
    p.add_argument("--no-control", action="store_true", help="skip the citation-toggle control queries")

    p_est = sub.add_parser("estimate", parents=[common], help="run an estimator on given numbers")
    est_sub = p_est.add_subparsers(dest="kind", required=True)
    p = est_sub.add_parser("cr", parents=[common], help="capture-recapture")
    p.add_argument("--M", type=int)
    p.add_argument("--C", type=int, required=True)
    p.add_argument("--R", type=int)
    p.add_argument("--overlap", type=float, help="overlap statistic instead of M and R")
    p.add_argument("--overlap-kind", default="jaccard", choices=("jaccard", "containment-in-A", "containment-in-B"))
    p.add_argument("--english-share", type=float)
    p = est_sub.add_parser("ratio", parents=[common], help="ratio projection")
    p.add_argument("--factor", type=float, required=True)
    p.add_argument("--wos", type=int, required=True)
    p.add_argument("--wos-english-share", type=float, default=0.9)
    p.add_argument("--english-share", type=float)

    p = sub.add_parser("ingest", parents=[common], help="parse a studies CSV and summarize ratios")
    p.add_argument("path")
    p.add_argument("--min-wos", type=int, default=10)

    p = sub.add_parser("report", parents=[common], help="run every method and write the summary")
    p.add_argument("--methods", help="comma-separated subset of " + ",".join(report.METHODS))
    p.add_argument("--format", choices=("csv", "json", "both"), default="both")

    p = sub.add_parser("serve", parents=[common], help="serve the engine over HTTP")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    return parser


COMMANDS = {"simulate": cmd_simulate, "probe": cmd_probe, "estimate": cmd_estimate, "ingest": cmd_ingest,
            "report": cmd_report, "serve": cmd_serve}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for name in ("config", "seed", "backend", "out"):
        if not hasattr(args, name):
            setattr(args, name, None)
    args.verbose = getattr(args, "verbose", False)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args)
        return COMMANDS[args.command](args, cfg)
    except (report.ConfigurationError, ValidationError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (EngineServerError, FixtureMissError, UndefinedEstimateError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
