"""Command-line entry point: simulate / experiment / analyze / serve / latin-square.

Configuration precedence is file < environment < flags: the config file
comes from --config or $JAF_CONFIG, then --set dotted-key overrides and
dedicated flags apply on top. Every artifact written carries a metadata
header (version, seed, effective-config digest) sufficient to reproduce it.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .core_model import CONDITIONS, ConfigError, canonical_digest
from .config import (
    apply_overrides,
    build_experiment,
    build_scenario,
    load_config_file,
    server_settings,
)
from .experiment import analyze_results, balanced_latin_square, run_experiment, summarize
from .sim_engine import SimulationTimeout, run


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="config file path (falls back to $JAF_CONFIG)")
    p.add_argument("--set", dest="overrides", action="append", default=[],
                   metavar="KEY.PATH=VALUE", help="override a config value")
    p.add_argument("--seed", type=int, help="master seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jaf", description=__doc__)
    parser.add_argument("--version", action="version", version=f"jaf {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run one simulated trial")
    _add_common(p_sim)
    p_sim.add_argument("--condition", choices=sorted(CONDITIONS), help="experimental condition")
    p_sim.add_argument("--out", default="run.jsonl", help="trace output path (JSONL)")

    p_exp = sub.add_parser("experiment", help="run the full multi-participant batch")
    _add_common(p_exp)
    p_exp.add_argument("--participants", type=int, help="number of simulated participants")
    p_exp.add_argument("--parallel", type=int, default=1, metavar="N", help="worker processes")
    p_exp.add_argument("--out", default="results.csv", help="results table output path (CSV)")
    p_exp.add_argument("--figures", dest="figures", action="store_true", default=True,
                       help="render report figures next to the CSV (default)")
    p_exp.add_argument("--no-figures", dest="figures", action="store_false")

    p_an = sub.add_parser("analyze", help="statistical report from a results CSV")
    _add_common(p_an)
    p_an.add_argument("results", help="results CSV produced by the experiment subcommand")
    p_an.add_argument("--out", default="report.json", help="report output path (JSON)")
    p_an.add_argument("--figures", dest="figures", action="store_true", default=True)
    p_an.add_argument("--no-figures", dest="figures", action="store_false")

    p_srv = sub.add_parser("serve", help="run the live session server")
    _add_common(p_srv)
    p_srv.add_argument("--port", type=int, help="listen port (default 8090)")
    p_srv.add_argument("--host", help="bind address (default 127.0.0.1)")
    p_srv.add_argument("--trace-dir", help="directory for persisted session traces")
    p_srv.add_argument("--static-dir", help="serve these static files over HTTP on the same port")

    p_ls = sub.add_parser("latin-square", help="print a balanced ordering matrix")
    p_ls.add_argument("n", type=int, help="number of conditions")
    return parser


def _load(args) -> dict:
    cfg = load_config_file(args.config)
    return apply_overrides(cfg, args.overrides)


def _meta(seed: int, config: dict) -> dict:
    return {"version": __version__, "seed": seed, "config_digest": canonical_digest(config)}


def cmd_simulate(args) -> int:
    config = _load(args)
    scenario = build_scenario(config, condition=args.condition, seed=args.seed)
    try:
        metrics, trace = run(scenario)
    except SimulationTimeout as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    out = Path(args.out)
    trace.to_jsonl(out, extra_meta=_meta(scenario.master_seed, config))
    metrics_path = out.with_suffix(".metrics.json")
    metrics_doc = {"meta": _meta(scenario.master_seed, config), "metrics": metrics.to_json()}
    metrics_path.write_text(json.dumps(metrics_doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(json.dumps(metrics.to_json(), sort_keys=True))
    print(f"trace: {out}\nmetrics: {metrics_path}", file=sys.stderr)
    return 0


def cmd_experiment(args) -> int:
    config = _load(args)
    exp = build_experiment(config, participants=args.participants, seed=args.seed)
    table = run_experiment(exp, parallel=max(1, args.parallel))
    out = Path(args.out)
    meta = _meta(exp.master_seed, config)
    meta["participants"] = exp.n_participants
    table.to_csv(out, meta=meta)
    summary = {"meta": meta, "summary": summarize(table)}
    summary_path = out.with_suffix(".summary.json")
    summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"results: {out}\nsummary: {summary_path}", file=sys.stderr)
    if args.figures:
        from .figures import render_report_figures

        written = render_report_figures(table, out.parent / (out.stem + "_figures"))
        print("figures: " + ", ".join(str(p) for p in written), file=sys.stderr)
    for cond, metrics in summarize(table).items():
        line = "  ".join(f"{m}={v['formatted']}" for m, v in metrics.items())
        print(f"{cond:5s} {line}")
    return 0


def cmd_analyze(args) -> int:
    from .experiment import ResultsTable

    config = _load(args)
    table = ResultsTable.from_csv(args.results)
    if not table.rows:
        print("error: empty results table", file=sys.stderr)
        return 1
    report = analyze_results(table)
    report["meta"] = _meta(args.seed if args.seed is not None else 0, config)
    out = Path(args.out)
    out.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"report: {out}", file=sys.stderr)
    if args.figures:
        from .figures import render_report_figures

        written = render_report_figures(table, out.parent / (out.stem + "_figures"))
        print("figures: " + ", ".join(str(p) for p in written), file=sys.stderr)
    anova = report["metrics"]["placing_errors"]["anova"]
    if "error" not in anova:
        print(f"placing_errors ANOVA: F({int(anova['dof'][0])}, {int(anova['dof'][1])}) = "
              f"{anova['statistic']:.3f}, p = {anova['p_value']:.4g}")
    return 0


def cmd_serve(args) -> int:
    from .session_server import ServerConfig, serve_forever

    config = _load(args)
    settings = server_settings(config)
    if args.port is not None:
        settings["port"] = args.port
    if args.host is not None:
        settings["host"] = args.host
    if args.trace_dir is not None:
        settings["trace_dir"] = args.trace_dir
    scenario = build_scenario(config, seed=args.seed)
    server_config = ServerConfig(
        host=settings["host"],
        port=int(settings["port"]),
        tick_rate=float(settings["tick_rate"]),
        trace_dir=Path(settings["trace_dir"]),
        base_scenario=scenario,
        static_dir=Path(args.static_dir) if args.static_dir else None,
    )
    serve_forever(server_config)
    return 0


def cmd_latin_square(args) -> int:
    try:
        square = balanced_latin_square(args.n)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    for row in square:
        print(" ".join(str(v) for v in row))
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "simulate": cmd_simulate,
        "experiment": cmd_experiment,
        "analyze": cmd_analyze,
        "serve": cmd_serve,
        "latin-square": cmd_latin_square,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
