import argparse
from collections.abc import Sequence
import sys

from loguru import logger
from pydantic import ValidationError

from src.config import settings
from src.constants.modes import Scheme
from src.exceptions import (
    ConfigError,
    InternalInconsistencyError,
    InvalidArgumentError,
    InvalidParameterError,
    NumericFailureError,
)
from src.logger_config import setup_logging
from src.schemas.experiment import ExperimentConfig
from src.services.experiments import (
    MODE_TABLE_COLUMNS,
    SIMULATION_COLUMNS,
    SWEEP_COLUMNS,
    VALIDATION_COLUMNS,
    load_experiment_config,
    mode_rows,
    schemes_for,
    simulation_passes,
    simulation_rows,
    stats_report,
    sweep_rows,
    validation_rows,
)
from src.utils.csv_output import write_csv


EXIT_OK = 0
EXIT_STRICT_FAILURE = 1
EXIT_BAD_INPUT = 2
EXIT_INTERNAL = 3


def cmd_stats(config: ExperimentConfig) -> int:
    for line in stats_report(config):
        print(line)
    return EXIT_OK


def cmd_modes(config: ExperimentConfig, schemes: tuple[Scheme, ...], out: str | None = None) -> int:
    write_csv(mode_rows(config, schemes), MODE_TABLE_COLUMNS, out)
    return EXIT_OK


def cmd_throughput_sweep(
    config: ExperimentConfig,
    schemes: tuple[Scheme, ...],
    out: str | None = None,
) -> int:
    write_csv(sweep_rows(config, schemes), SWEEP_COLUMNS, out)
    return EXIT_OK


def cmd_simulate(
    config: ExperimentConfig,
    schemes: tuple[Scheme, ...],
    out: str | None = None,
    strict: bool = False,
    negative_control: bool = False,
) -> int:
    rows = simulation_rows(config, schemes, negative_control)
    write_csv(rows, SIMULATION_COLUMNS, out)
    failed = [row for row in rows if not simulation_passes(row)]
    if out is not None:
        for row in rows:
            print(
                f"scheme {row['scheme']} replication {row['replication']}: "
                f"tau_t_hat={row['tau_t_hat']:.6g} tau_t={row['tau_t']:.6g} "
                f"rel_err={row['rel_err_tau_t']:.3g} drift={row['occupancy_drift']:.3g} "
                f"stable={'true' if row['stable'] else 'false'}"
            )
    if failed:
        logger.warning(f"{len(failed)} of {len(rows)} simulated rows outside acceptance tolerances")
    return EXIT_STRICT_FAILURE if strict and failed else EXIT_OK


def cmd_validate(
    config: ExperimentConfig,
    schemes: tuple[Scheme, ...],
    out: str | None = None,
    strict: bool = False,
) -> int:
    rows = validation_rows(config, schemes)
    write_csv(rows, VALIDATION_COLUMNS, out)
    failed = [row for row in rows if row["required"] and not row["passed"]]
    for row in failed:
        logger.warning(f"Check {row['check']} failed for scheme {row['scheme']}: {row['value']:.3g}")
    return EXIT_STRICT_FAILURE if strict and failed else EXIT_OK


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crn-relay",
        description="Throughput analysis and simulation of a buffer-aided cognitive relay network",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="experiment config (.json or .toml)")
    common.add_argument("--scheme", choices=["1", "2", "both"], help="override the config scheme")
    common.add_argument("--out", help="CSV output path, stdout when omitted")
    common.add_argument("--seed", type=int, help="override the simulation seed")
    common.add_argument("--slots", type=_positive_int, help="override the slot / sample count")
    common.add_argument("--strict", action="store_true", help="exit 1 when a tolerance is violated")

    subparsers.add_parser("stats", parents=[common], help="print link statistics and the α lattice")
    subparsers.add_parser("modes", parents=[common], help="mode probabilities per α and scheme")
    subparsers.add_parser("throughput-sweep", parents=[common], help="analytic sweep of one parameter")
    simulate = subparsers.add_parser("simulate", parents=[common], help="slot-level simulation")
    simulate.add_argument(
        "--negative-control",
        action="store_true",
        help="run at the top α with unthrottled links to show buffer growth",
    )
    subparsers.add_parser("validate", parents=[common], help="numerical oracle checks")
    return parser


def apply_overrides(config: ExperimentConfig, args: argparse.Namespace) -> ExperimentConfig:
    data = config.model_dump()
    if args.scheme is not None:
        data["scheme"] = args.scheme
    if args.seed is not None:
        data["simulation"]["seed"] = args.seed
    if args.slots is not None:
        data["simulation"]["slots"] = args.slots
    return ExperimentConfig.model_validate(data)


def dispatch(args: argparse.Namespace) -> int:
    config = apply_overrides(load_experiment_config(args.config), args)
    schemes = schemes_for(config.scheme)
    match args.command:
        case "stats":
            return cmd_stats(config)
        case "modes":
            return cmd_modes(config, schemes, args.out)
        case "throughput-sweep":
            return cmd_throughput_sweep(config, schemes, args.out)
        case "simulate":
            return cmd_simulate(config, schemes, args.out, args.strict, args.negative_control)
        case "validate":
            return cmd_validate(config, schemes, args.out, args.strict)
    raise ConfigError(f"Unknown command {args.command}")


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(settings.LOG_DIR, settings.LOG_LEVEL)
    try:
        return dispatch(args)
    except (ConfigError, InvalidParameterError, InvalidArgumentError, ValidationError) as exc:
        logger.error(f"Bad input: {exc}")
        return EXIT_BAD_INPUT
    except (InternalInconsistencyError, NumericFailureError) as exc:
        logger.error(f"Internal failure: {exc}")
        return EXIT_INTERNAL


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
