from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

import numpy as np

from .config import Settings, apply_overrides, config_items, default_config, load_experiment_config, load_settings
from .errors import ConfigError, OpenQubitError
from .experiments import run
from .formatting import format_manifest
from .types import Scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

logger = logging.getLogger(__name__)


def configure_logging(level: str) -> None:
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="driven-qubit-entropy",
        description="Entropy production of a driven qubit under Redfield and completely positive dynamics.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    run_cmd = commands.add_parser("run", help="run the scenario described by a config file")
    run_cmd.add_argument("--config", help="TOML experiment file (defaults to the built-in parameter set)")
    run_cmd.add_argument("--scenario", choices=[s.value for s in Scenario])
    run_cmd.add_argument("--t-max", type=float, dest="t_max")
    run_cmd.add_argument("--dt", type=float)
    run_cmd.add_argument("--seed", type=int)
    run_cmd.add_argument("--out")
    run_cmd.add_argument("--n-points", type=int, dest="n_points")
    run_cmd.add_argument("--workers", type=int)

    commands.add_parser("defaults", help="print the default configuration")

    snapshot = commands.add_parser("snapshot-generators", help="write both 4x4 generators to CSV")
    snapshot.add_argument("--config")
    snapshot.add_argument("--out")
    return parser


def _execute(args: argparse.Namespace, settings: Settings) -> int:
    if args.command == "defaults":
        sys.stdout.write(format_manifest(config_items(default_config())))
        return EXIT_OK

    config = load_experiment_config(args.config) if args.config else default_config()
    if args.config is None:
        config = dataclasses.replace(config, output_dir=settings.output_dir)
    if args.command == "snapshot-generators":
        config = apply_overrides(config, scenario=Scenario.SNAPSHOT_GENERATORS.value, out=args.out)
        workers = settings.num_workers
    else:
        config = apply_overrides(
            config,
            scenario=args.scenario,
            t_max=args.t_max,
            dt=args.dt,
            seed=args.seed,
            out=args.out,
            n_points=args.n_points,
        )
        workers = args.workers if args.workers is not None else settings.num_workers
    result = run(config, workers=workers)
    for path in result.files:
        logger.info("wrote %s", path)
    return EXIT_OK


def _origin(exc: BaseException) -> str:
    """Module in which the exception was raised."""
    tb = exc.__traceback__
    while tb is not None and tb.tb_next is not None:
        tb = tb.tb_next
    return tb.tb_frame.f_globals.get("__name__", "?") if tb is not None else "?"


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    settings = load_settings()
    configure_logging(settings.log_level)
    try:
        return _execute(args, settings)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OpenQubitError, np.linalg.LinAlgError) as exc:
        print(f"numerical error in {_origin(exc)}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except KeyboardInterrupt:
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
