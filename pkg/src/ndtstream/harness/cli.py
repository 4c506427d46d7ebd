"""``ndtstream`` command line: gen-trace, run, compare, bench.

Exit codes: 0 success, 1 configuration or usage error, 2 I/O error.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from ..netmodel import ScenarioKind, gen_scenario, save_trace
from .config import ConfigError, ExperimentConfig, load_config, parse_seeds
from .experiment import compare, format_table, run_experiment
from .io import ReportFormatError, ReportIOError, dumps_csv, dumps_json, emit, load_report

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    # usage mistakes are configuration errors; argparse's default 2 means I/O here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def bench_config() -> ExperimentConfig:
    """Canonical suite: every scenario and every controller kind at defaults, seeds 1-10."""
    from ..control import BufferBased, PredictiveMpc, QLearning, RateBased

    return ExperimentConfig(controllers=(RateBased(), BufferBased(), PredictiveMpc(), QLearning()))


def _write(obj, fmt: str, out) -> None:
    if out:
        emit(obj, fmt, out)
    else:
        sys.stdout.write(dumps_json(obj) if fmt == "json" else dumps_csv(obj))


def cmd_gen_trace(args) -> int:
    kind = ScenarioKind.parse(args.scenario)
    trace = gen_scenario(kind, args.duration, args.seed)
    try:
        save_trace(trace, args.out)
    except OSError as exc:
        raise ReportIOError(f"cannot write {args.out}: {exc.strerror or exc}") from exc
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.seed_list:
        cfg = replace(cfg, seeds=parse_seeds(args.seed_list))
    fmt = args.format or cfg.out_format
    out = args.out or cfg.out_path
    report = run_experiment(cfg, single_thread=args.single_thread, workers=args.workers)
    _write(report, fmt, out)
    return EXIT_OK


def cmd_compare(args) -> int:
    report = load_report(args.report)
    try:
        table = compare(report, args.baseline, args.proposed)
    except KeyError as exc:
        raise ConfigError(exc.args[0]) from None
    print(format_table(table))
    if args.out:
        emit(table, args.format, args.out)
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = bench_config()
    report = run_experiment(cfg, single_thread=args.single_thread, workers=args.workers)
    print(format_table(compare(report, args.baseline, args.proposed)))
    if args.out:
        emit(report, args.format, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ndtstream", description="Twin-driven adaptive streaming experiments.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen-trace", help="write a synthetic scenario trace as CSV")
    g.add_argument("--scenario", required=True, help="LowBandwidth, HighLatency, PacketLoss or Stable")
    g.add_argument("--duration", type=float, default=300.0, help="seconds (default 300)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_trace)

    r = sub.add_parser("run", help="run the sweep described by a config file")
    r.add_argument("--config", required=True)
    r.add_argument("--out", help="report path (default: output.path from the config, else stdout)")
    r.add_argument("--format", choices=("csv", "json"))
    r.add_argument("--seed-list", help="override seeds, e.g. 1..10 or 1,4,9")
    r.add_argument("--single-thread", action="store_true", help="run sessions in-process, in order")
    r.add_argument("--workers", type=int, help="worker processes (default: CPU count)")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("compare", help="compare two controllers of a saved report")
    c.add_argument("--report", required=True)
    c.add_argument("--baseline", required=True)
    c.add_argument("--proposed", required=True)
    c.add_argument("--out", help="also write the table here")
    c.add_argument("--format", choices=("csv", "json"), default="json")
    c.set_defaults(func=cmd_compare)

    b = sub.add_parser("bench", help="canonical scenario suite; prints the comparison table")
    b.add_argument("--baseline", default="RateBased")
    b.add_argument("--proposed", default="PredictiveMpc")
    b.add_argument("--out", help="also write the full report here")
    b.add_argument("--format", choices=("csv", "json"), default="json")
    b.add_argument("--single-thread", action="store_true")
    b.add_argument("--workers", type=int)
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ReportIOError, OSError) as exc:
        print(f"ndtstream: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, ReportFormatError, ValueError) as exc:
        print(f"ndtstream: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
