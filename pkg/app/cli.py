"""Command-line entry point: python -m app.cli <command> --config <file>."""
import argparse
import logging
import sys
from typing import List, Optional

from rich.table import Table

from app.core.errors import BettingError, ConfigError, DomainError, InvariantViolation, OutputError
from app.models.experiment import ExperimentConfig, ExperimentKind, OutputFormat, RunResult
from app.models.distribution import SourceDistribution
from app.utils.config import Settings, apply_overrides, load_config, parse_config
from app.utils.logging_setup import configure_logging, console
from app.utils.result_writer import ResultWriter
from app.utils.simulation import ExperimentRunner, solve_scenario

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INVARIANT = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="betting",
        description="Sequential tests by betting: oracle bets, growth, rejection times, type-I checks and regret audits",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    helps = {
        ExperimentKind.ORACLE: "Print lambda*, gamma* and ell* for a scenario",
        ExperimentKind.GROWTH: "Simulate log-wealth growth traces",
        ExperimentKind.REJECT_TIMES: "Simulate rejection times at level alpha",
        ExperimentKind.TYPE1: "Estimate crossing fractions under a null source",
        ExperimentKind.REGRET_AUDIT: "Check universal-portfolio regret against its pathwise bound",
    }
    for kind, text in helps.items():
        sub = subparsers.add_parser(kind.value, help=text)
        sub.add_argument("--config", help="JSON experiment config")
        sub.add_argument("--seed", type=int, help="Override the root seed")
        sub.add_argument("--out-dir", help="Directory for CSV/JSON outputs")
        sub.add_argument("--format", choices=[f.value for f in OutputFormat], help="Which files to write")
        sub.add_argument("--workers", type=int, help="Processes used for replications")
        sub.add_argument("--log-level", help="Logging level (default from BETTING_LOG_LEVEL or INFO)")
        if kind == ExperimentKind.ORACLE:
            sub.add_argument("--problem", help="Problem string, e.g. bounded2:0.3 (instead of --config)")
            sub.add_argument("--bernoulli", type=float, help="Bernoulli alternative parameter (with --problem)")
    return parser


def _load(args: argparse.Namespace, settings: Settings) -> ExperimentConfig:
    if args.config:
        config = load_config(args.config, settings)
    elif getattr(args, "problem", None) and getattr(args, "bernoulli", None) is not None:
        config = parse_config(
            {"problem": args.problem, "alternative": SourceDistribution(kind="bernoulli", p=args.bernoulli).model_dump()},
            settings,
            source="command line",
        )
    else:
        raise ConfigError("--config is required (oracle also accepts --problem with --bernoulli)")
    return apply_overrides(config, seed=args.seed, out_dir=args.out_dir, output_format=args.format, workers=args.workers)


def _fmt(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def print_oracle(report: dict) -> None:
    table = Table(title="Oracle")
    table.add_column("quantity")
    table.add_column("value", justify="right")
    for key in ("lambda_star", "gamma_star", "ell_star", "ons_ell_star", "delta", "conservative_growth"):
        if key in report:
            table.add_row(key, _fmt(report[key]))
    for alpha, bound in report.get("rejection_benchmarks", {}).items():
        table.add_row(f"log(1/alpha)/ell* at alpha={alpha}", _fmt(bound))
    console.print(table)


def print_summary(result: RunResult) -> None:
    summary = result.summary
    if summary.audit is not None:
        table = Table(title="Regret audit")
        for column in ("family", "sequences", "violations", "min slack", "mean final regret"):
            table.add_column(column)
        for family in summary.audit.families:
            table.add_row(
                family.family,
                str(family.sequences),
                str(family.violations),
                _fmt(family.min_slack),
                _fmt(family.mean_final_regret),
            )
        console.print(table)
        return

    table = Table(title=f"{summary.kind.value}: {summary.scenario.get('problem')} under {summary.scenario.get('alternative')}")
    columns = ["strategy", "mean growth", "se"]
    if summary.kind in (ExperimentKind.REJECT_TIMES, ExperimentKind.TYPE1):
        columns += ["mean tau", "median tau", "censored", "tau/log(1/alpha)", "crossing"]
    for column in columns:
        table.add_column(column)
    for agg in summary.aggregates:
        row = [agg.strategy, _fmt(agg.mean_growth), _fmt(agg.se_growth)]
        if summary.kind in (ExperimentKind.REJECT_TIMES, ExperimentKind.TYPE1):
            row += [
                _fmt(agg.mean_tau) + (" (lower bound)" if agg.mean_tau_is_lower_bound else ""),
                _fmt(agg.median_tau),
                _fmt(agg.censored_fraction),
                _fmt(agg.tau_over_log_inv_alpha),
                _fmt(agg.crossing_fraction),
            ]
        table.add_row(*row)
    console.print(table)
    if summary.oracle:
        print_oracle(summary.oracle)


def run_command(kind: ExperimentKind, config: ExperimentConfig) -> int:
    out_dir = config.outputs.out_dir

    if kind == ExperimentKind.ORACLE:
        report = solve_scenario(config).oracle_report()
        print_oracle(report)
        if out_dir and config.outputs.format != OutputFormat.CSV:
            ResultWriter(out_dir).write_oracle(report)
        return EXIT_OK

    result = ExperimentRunner(config).run(kind)
    print_summary(result)
    if out_dir:
        ResultWriter(out_dir).emit(result, config.outputs.format, traces=config.outputs.traces)

    if kind == ExperimentKind.REGRET_AUDIT and result.summary.audit.violations:
        logger.error(
            "Regret bound violated %d times (min slack %.3g)",
            result.summary.audit.violations,
            result.summary.audit.min_slack,
        )
        return EXIT_INVARIANT
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        settings = Settings.from_env()
    except ConfigError as e:
        configure_logging(args.log_level)
        logger.error(str(e))
        return EXIT_CONFIG
    configure_logging(args.log_level or settings.log_level)

    try:
        config = _load(args, settings)
        return run_command(ExperimentKind(args.command), config)
    except InvariantViolation as e:
        logger.error("Invariant violation: %s", e)
        return EXIT_INVARIANT
    except (ConfigError, FileNotFoundError, PermissionError) as e:
        logger.error("Configuration error: %s", e)
        return EXIT_CONFIG
    except (DomainError, OutputError, BettingError) as e:
        logger.error("%s", e)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
