"""Command-line front end: run, validate and oracle subcommands."""
import argparse
import logging
from typing import List, Optional

from config.logging_config import setup_logging
from src.errors import ConfigError
from src.harness.oracles import SUITES, run_oracles
from src.harness.runner import run_experiment
from src.harness.spec import parse_config

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG_ERROR = 1
EXIT_RUNTIME_ERROR = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simulate", description="Multi-IRS RSMA energy-efficiency simulator"
    )
    parser.add_argument("--log-level", default=None, help="Overrides RSMA_LOG_LEVEL")
    parser.add_argument("--log-dir", default="logs")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="Run an experiment file")
    run.add_argument("spec_file")
    run.add_argument("--workers", type=int, default=None, help="Overrides RSMA_WORKERS")
    run.add_argument("--output-dir", default=None, help="Overrides the experiment output_dir")

    validate = commands.add_parser("validate", help="Parse and check an experiment file")
    validate.add_argument("spec_file")

    oracle = commands.add_parser("oracle", help="Run reference checks")
    oracle.add_argument("suite", choices=sorted(SUITES) + ["all"])
    oracle.add_argument("--output", default="data/results/oracle_report.csv")
    return parser


def _run(args: argparse.Namespace) -> int:
    parsed = parse_config(args.spec_file)
    level = args.log_level or parsed.log_settings.get("level")
    setup_logging(level, args.log_dir, parsed.log_settings.get("format"))
    paths = run_experiment(
        parsed.experiment,
        parsed.system,
        parsed.solver,
        parsed.optimizer,
        workers=args.workers,
        output_dir=args.output_dir,
    )
    for kind, path in paths.items():
        logger.info(f"{kind}: {path}")
    return EXIT_OK


def _validate(args: argparse.Namespace) -> int:
    parsed = parse_config(args.spec_file)
    spec = parsed.experiment
    logger.info(
        f"{args.spec_file} is valid: {spec.experiment}, schemes {list(spec.schemes)}, "
        f"grid {list(spec.grid)}, {len(spec.seeds)} seeds"
    )
    return EXIT_OK


def _oracle(args: argparse.Namespace) -> int:
    report = run_oracles([args.suite], args.output)
    failed = int((~report["passed"]).sum())
    logger.info(f"{len(report)} oracle cases, {failed} failed")
    return EXIT_OK if failed == 0 else EXIT_RUNTIME_ERROR


COMMANDS = {"run": _run, "validate": _validate, "oracle": _oracle}


def main(argv: Optional[List[str]] = None) -> int:
    """
    Entry point; returns the process exit code.

    0 on success, 1 for configuration errors, 2 for any other failure.
    """
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level, args.log_dir)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG_ERROR
    except Exception as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_RUNTIME_ERROR
