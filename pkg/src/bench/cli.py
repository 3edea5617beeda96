"""Semi-factual explanation benchmark.

Subcommands:
  run       k-fold benchmark from a JSON config; writes report.json,
            scores.csv, ranks.csv and SVG charts
  report    rewrite the CSV tables from an existing report.json
  charts    re-render the SVG charts from an existing report.json
  fixtures  write the synthetic datasets as CSV + schema JSON
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from typing import List, Optional

from src.data import DatasetError
from src.util.logging import setup_logging
from src.util.settings import load_settings

from .charts import render_charts
from .config import ConfigError, load_config
from .fixtures import write_fixtures
from .report_io import emit_report, load_artifact
from .runner import run_benchmark


logger = logging.getLogger("bench.cli")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_DATASET = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sfbench", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run the benchmark")
    run.add_argument("--config", required=True, help="Experiment config JSON")
    run.add_argument("--out", default=None, help="Output directory (default: config out_dir, then SFB_OUT_DIR)")
    run.add_argument("--seed", type=int, default=None, help="Master seed when the config sets none (default: SFB_SEED)")
    run.add_argument("--jobs", type=int, default=None, help="Parallel query workers (default: SFB_JOBS)")
    run.add_argument("--no-charts", action="store_true", help="Skip SVG rendering")

    report = sub.add_parser("report", help="Rewrite CSV tables from report.json")
    report.add_argument("--artifact", required=True, help="report.json or the directory holding it")
    report.add_argument("--out", default=None, help="Output directory (default: alongside the artifact)")

    charts = sub.add_parser("charts", help="Render SVG charts from report.json")
    charts.add_argument("--artifact", required=True, help="report.json or the directory holding it")
    charts.add_argument("--out", default=None, help="Output directory (default: alongside the artifact)")

    fixtures = sub.add_parser("fixtures", help="Write synthetic datasets")
    fixtures.add_argument("--out", required=True)
    fixtures.add_argument("--n", type=int, default=500, help="Rows per dataset")
    fixtures.add_argument("--seed", type=int, default=0)
    return parser


def _artifact_dir(path: str, out: Optional[str]) -> str:
    if out:
        return out
    return path if os.path.isdir(path) else (os.path.dirname(path) or ".")


def _cmd_run(args: argparse.Namespace) -> int:
    settings = load_settings()
    cfg = load_config(args.config)
    out_dir = args.out or cfg.out_dir or settings.out_dir
    seed = args.seed if args.seed is not None else settings.seed
    jobs = max(1, args.jobs) if args.jobs is not None else settings.jobs
    logger.info("Benchmark starting", extra={"config": args.config, "out_dir": out_dir, "jobs": jobs})
    artifact = run_benchmark(cfg, seed=seed, jobs=jobs)
    emit_report(artifact, out_dir)
    if not args.no_charts:
        render_charts(artifact, out_dir)
    for method in artifact.ranks.ordered():
        print(f"{method:<16} mean rank {artifact.ranks.mean_rank[method]:.3f}")
    return EXIT_OK


def _cmd_report(args: argparse.Namespace) -> int:
    artifact = load_artifact(args.artifact)
    emit_report(artifact, _artifact_dir(args.artifact, args.out))
    return EXIT_OK


def _cmd_charts(args: argparse.Namespace) -> int:
    artifact = load_artifact(args.artifact)
    render_charts(artifact, _artifact_dir(args.artifact, args.out))
    return EXIT_OK


def _cmd_fixtures(args: argparse.Namespace) -> int:
    for kind, path in write_fixtures(args.out, n=args.n, seed=args.seed).items():
        print(f"{kind}: {path}")
    return EXIT_OK


COMMANDS = {"run": _cmd_run, "report": _cmd_report, "charts": _cmd_charts, "fixtures": _cmd_fixtures}


def main(argv: Optional[List[str]] = None) -> int:
    setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        logger.error("Invalid configuration", extra={"reason": str(exc)})
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DatasetError as exc:
        logger.error("Dataset error", extra={"reason": str(exc)})
        print(f"dataset error: {exc}", file=sys.stderr)
        return EXIT_DATASET
    except (OSError, KeyError, ValueError) as exc:
        logger.exception("Command failed")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
