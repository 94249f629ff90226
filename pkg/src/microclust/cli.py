"""Command line entry point: ``microclust {run,measures,cluster,render,synth}``.

Exit status: 0 success, 2 bad configuration, 3 unusable data.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .minimax import PrototypeDendrogram
from .pipeline import (ConfigError, DataError, PipelineConfig, run_cluster, run_measures,
                       run_pipeline)
from .render import render_dendrogram
from .synth import SynthSpec, generate_day

EXIT_OK, EXIT_CONFIG, EXIT_DATA = 0, 2, 3

# flag name -> PipelineConfig field, for everything a config file may also set
_RUN_FLAGS = ("trades", "quotes", "daily", "out", "cut", "interval_secs", "classifier",
              "registry", "symbols", "workers", "seed", "min_coverage", "min_support",
              "shares_normalizer", "iterative", "session")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _add_run_options(p, inputs: bool = True):
    if inputs:
        p.add_argument("--trades", help="trades CSV")
        p.add_argument("--quotes", help="quotes CSV")
        p.add_argument("--daily", help="daily reference CSV")
    p.add_argument("--out", help="output directory")
    p.add_argument("--config", help="TOML file whose keys mirror these flags")
    p.add_argument("--cut", type=float, help="cut height (default 0.7)")
    p.add_argument("--interval-secs", type=float, help="interval length in seconds (default 10)")
    p.add_argument("--classifier", choices=("clnv", "lr", "emo"), help="default clnv")
    p.add_argument("--registry", help="full, reduced, or a file of measure names")
    p.add_argument("--symbols", help="comma-separated symbol filter")
    p.add_argument("--workers", type=int, help="worker processes (default: all CPUs)")
    p.add_argument("--seed", type=int, help="recorded in the report; runs are deterministic")
    p.add_argument("--min-coverage", type=float,
                   help="fraction of intervals a measure needs to count for a symbol (default 0.5)")
    p.add_argument("--min-support", type=int, help="fewest joint intervals per correlation (default 30)")
    p.add_argument("--shares-normalizer", choices=("adtv", "adrv"),
                   help="normalizer of .norm share measures (default adtv)")
    p.add_argument("--session", nargs=2, metavar=("OPEN", "CLOSE"), help="HH:MM:SS HH:MM:SS")
    p.add_argument("--iterative", action="store_true", default=None,
                   help="re-cluster prototypes until nothing merges below the cut")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="microclust", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    _add_run_options(sub.add_parser("run", help="full pipeline: panels, trees, prototypes"))
    _add_run_options(sub.add_parser("measures", help="panels and per-symbol distances only"))

    p = sub.add_parser("cluster", help="cluster cached per-symbol distance matrices")
    p.add_argument("--distances", required=True, help="directory of per-symbol distance CSVs")
    _add_run_options(p, inputs=False)

    p = sub.add_parser("render", help="draw a tree JSON as svg, json or newick")
    p.add_argument("--tree", required=True, help="tree JSON file")
    p.add_argument("--out", required=True, help="output file; format from suffix unless --format")
    p.add_argument("--format", choices=("svg", "json", "newick"))
    p.add_argument("--cut", type=float, help="draw a cut line at this height")
    p.add_argument("--title")

    p = sub.add_parser("synth", help="write a synthetic trading day")
    p.add_argument("--spec", required=True, help="TOML file mirroring SynthSpec fields")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--workers", type=int, default=1)
    return parser


def config_from_args(args) -> PipelineConfig:
    given = {k: getattr(args, k) for k in _RUN_FLAGS if getattr(args, k, None) is not None}
    if args.config:
        return PipelineConfig.from_toml(args.config, **given)
    return PipelineConfig.from_mapping(given)


def _print_summary(report, out):
    counts = report.counts
    print(f"symbols processed: {counts.get('symbols_processed', 0)}"
          f" (failed: {len(report.failed_symbols)})")
    if "prototypes" in counts:
        print(f"measures: {counts.get('measures')} -> clustered {counts.get('measures_clustered')}"
              f" -> reduced {counts.get('measures_reduced')} -> prototypes {counts['prototypes']}")
        for c in report.clusters:
            print(f"  {c.prototype} ({len(c.members)})")
    for stage, secs in report.timings.items():
        print(f"  {stage}: {secs:.2f}s", file=sys.stderr)
    print(f"outputs in {out}")


def _cmd_run(args):
    config = config_from_args(args)
    report = run_pipeline(config)
    _print_summary(report, config.out)


def _cmd_measures(args):
    config = config_from_args(args)
    report = run_measures(config)
    _print_summary(report, config.out)


def _cmd_cluster(args):
    config = config_from_args(args)
    report = run_cluster(args.distances, config)
    _print_summary(report, config.out)


def _cmd_render(args):
    try:
        tree = PrototypeDendrogram.from_json(Path(args.tree).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read {args.tree}: {exc}") from exc
    except (ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
        raise DataError(f"{args.tree}: not a tree JSON ({exc})") from exc
    try:
        render_dendrogram(tree, args.out, fmt=args.format, cut=args.cut, title=args.title)
    except OSError as exc:
        raise ConfigError(f"cannot write {args.out}: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    print(args.out)


def _cmd_synth(args):
    try:
        spec = SynthSpec.from_file(args.spec)
    except OSError as exc:
        raise ConfigError(f"cannot read {args.spec}: {exc}") from exc
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad synth spec {args.spec}: {exc}") from exc
    files = generate_day(spec, args.out, workers=max(1, args.workers))
    for f in files:
        print(f)


COMMANDS = {"run": _cmd_run, "measures": _cmd_measures, "cluster": _cmd_cluster,
            "render": _cmd_render, "synth": _cmd_synth}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
