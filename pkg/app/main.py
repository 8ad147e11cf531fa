import argparse
import logging
import math
import sys
import typing
from typing import Dict, List, Optional, Sequence

from pydantic import ValidationError

from app.api import ensemble, gates, kicked_ising, mps, zigzag
from app.api.routing import Command, CommandRouter, RunContext
from app.dependencies.logging import configure_logging
from app.dependencies.settings import get_settings
from app.exceptions import AssertionFailure, LabError, UsageError
from app.schemas.config import ExperimentConfig, ResultEnvelope
from app.services import file_storage

logger = logging.getLogger(__name__)

PROG = "dulab"

# Include routers
ROUTERS: List[CommandRouter] = [
    zigzag.router,
    kicked_ising.router,
    mps.router,
    ensemble.router,
    gates.router,
]


def commands() -> Dict[str, Command]:
    return {command.name: command for router in ROUTERS for command in router.commands}


def _scalar_type(annotation):
    """Unwrap Optional[X] and Literal[...] to something argparse can call."""
    origin = typing.get_origin(annotation)
    if origin is typing.Union:
        args = [a for a in typing.get_args(annotation) if a is not type(None)]
        return _scalar_type(args[0])
    if origin is typing.Literal:
        return type(typing.get_args(annotation)[0])
    return annotation


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="master seed for stochastic experiments")
    common.add_argument("--output", help="write the result here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--assert", dest="check", action="store_true",
                        help="exit 1 unless every acceptance check passes")
    common.add_argument("--tol", action="append", default=[], metavar="NAME=VALUE",
                        help="override one acceptance tolerance")
    common.add_argument("--workers", type=int, help="worker processes for sampling")
    common.add_argument("--units", choices=("nats", "bits"), default="nats",
                        help="units of the stderr summary")
    common.add_argument("--log-level", help="logging level (default from LAB_LOG_LEVEL)")
    return common


def build_parser() -> argparse.ArgumentParser:
    """One subcommand per registered command; its flags come from the params model."""
    parser = argparse.ArgumentParser(
        prog=PROG, description="Dual-unitary circuit entanglement laboratory"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    common = _common_parser()
    for name, command in commands().items():
        sub = subparsers.add_parser(name, help=command.help, parents=[common])
        for field_name, info in command.params.model_fields.items():
            flag = "--" + field_name.replace("_", "-")
            kind = _scalar_type(info.annotation)
            if kind is bool:
                sub.add_argument(flag, dest=field_name, action="store_true",
                                 default=argparse.SUPPRESS)
            else:
                sub.add_argument(flag, dest=field_name, type=kind, default=argparse.SUPPRESS,
                                 help=f"default: {info.default}")
    return parser


def _tolerances(command: Command, overrides: Sequence[str]) -> Dict[str, float]:
    tolerances = dict(command.tolerances)
    for item in overrides:
        name, _, value = item.partition("=")
        if name not in tolerances:
            known = ", ".join(sorted(tolerances)) or "none"
            raise UsageError(f"--tol {item}: unknown tolerance '{name}' (known: {known})")
        try:
            tolerances[name] = float(value)
        except ValueError:
            raise UsageError(f"--tol {item}: '{value}' is not a number")
    return tolerances


def make_config(args: argparse.Namespace, command: Command) -> ExperimentConfig:
    common = {"seed", "output", "format", "check", "tol", "workers", "units", "log_level", "command"}
    params = {key: value for key, value in vars(args).items() if key not in common}
    return ExperimentConfig(
        command=command.name,
        params=params,
        seed=args.seed,
        output=args.output,
        format=args.format,
        tolerances=_tolerances(command, args.tol),
        check=args.check,
        workers=args.workers,
        units=args.units,
    )


def _summarize(summary: Dict[str, float], units: str) -> None:
    scale = 1 / math.log(2) if units == "bits" else 1.0
    for name, value in summary.items():
        sys.stderr.write(f"{name} = {value * scale:.12g} {units}\n")


def execute(config: ExperimentConfig) -> ResultEnvelope:
    """Validate parameters, run the command and write its output."""
    command = commands()[config.command]
    try:
        params = command.params(**config.params)
    except ValidationError as error:
        first = error.errors()[0]
        flag = "--" + str(first["loc"][0]).replace("_", "-") if first["loc"] else config.command
        raise UsageError(f"{flag}: {first['msg']}")
    if command.stochastic and config.seed is None:
        raise UsageError(f"{config.command} is stochastic and needs --seed")
    if config.format == "csv" and not command.csv:
        raise UsageError(f"--format csv is not available for {config.command}")

    context = RunContext(
        seed=config.seed,
        workers=config.workers,
        tolerances=config.tolerances,
        wants_csv=config.format == "csv",
    )
    logger.info("Running %s with %s", config.command, params.model_dump())
    outcome = command.handler(params, context)
    envelope = ResultEnvelope(
        schema_version=get_settings().schema_version,
        experiment=config.command,
        params=params.model_dump(),
        seed=config.seed,
        result=outcome.result,
        checks=outcome.checks,
    )

    text = outcome.csv if config.format == "csv" else file_storage.to_json_text(envelope.to_payload())
    if config.output:
        file_storage.atomic_write(config.output, text)
    else:
        sys.stdout.write(text)
    _summarize(outcome.summary, config.units)

    failed = [check.name for check in envelope.checks if not check.passed]
    if failed:
        logger.warning("Checks not passed: %s", ", ".join(failed))
    if config.check and failed:
        raise AssertionFailure(f"{len(failed)} check(s) failed: {', '.join(failed)}")
    return envelope


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse argv, run one experiment, return the exit status (0, 1 or 2)."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as stop:
        return int(stop.code or 0)

    configure_logging(args.log_level or get_settings().log_level)
    try:
        command = commands()[args.command]
        execute(make_config(args, command))
    except LabError as error:
        sys.stderr.write(f"{PROG} {args.command}: error: {error.detail}\n")
        return error.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(run())
