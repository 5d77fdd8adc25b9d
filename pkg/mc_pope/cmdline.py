import argparse
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Type

from rich.console import Console
from rich.logging import RichHandler
from rich.traceback import install as enable_rich_traceback

from .command import CONFIG_VALUE_TYPES, BaseCommand, get_installed_commands
from .constants import EXIT_ERROR
from .exceptions import McPopeError, McPopeUserError
from .types import ConfigDict
from .utils import get_config, load_yaml_mapping

logger = logging.getLogger(__name__)

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")

error_console = Console(stderr=True)


@dataclass
class RunConfig:
    command: str
    command_class: Type[BaseCommand]
    options: argparse.Namespace
    config: ConfigDict
    log_level: str = "WARNING"
    debugger: bool = False


def check_config_values(config: ConfigDict) -> ConfigDict:
    """Converts numeric values the way their flags would, or raises."""
    for key, convert in CONFIG_VALUE_TYPES.items():
        value = config.get(key)
        if value is None:
            continue
        try:
            if isinstance(value, bool):
                raise argparse.ArgumentTypeError(f"{value!r} is not an integer")
            config[key] = convert(str(value))  # type: ignore[literal-required]
        except argparse.ArgumentTypeError as e:
            raise McPopeUserError(f"Config value {key}: {e}")
    return config


def load_config(path: Optional[Path]) -> ConfigDict:
    """User config file overlaid by the document named with ``--config``."""
    config = get_config()
    if path is not None:
        if not path.is_file():
            raise McPopeUserError(f"Config document {path} does not exist")
        config.update(load_yaml_mapping(path))  # type: ignore[typeddict-item]
    return check_config_values(config)


def build_parser(
    commands: Dict[str, Type[BaseCommand]], config: ConfigDict
) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mc-pope")
    parser.add_argument("--config", type=Path, help="YAML document of defaults")
    parser.add_argument(
        "--log-level",
        type=str.upper,
        choices=LOG_LEVELS,
        default=str(config.get("log_level", "WARNING")).upper(),
    )
    parser.add_argument("--debugger", action="store_true")
    subparsers = parser.add_subparsers(dest="command")
    subparsers.required = True

    for cmd_name, cmd_class in commands.items():
        parser_kwargs = {}

        cmd_help = cmd_class.get_help()
        if cmd_help:
            parser_kwargs["help"] = cmd_help

        subparser = subparsers.add_parser(cmd_name, **parser_kwargs)
        subparser.set_defaults(_parser=subparser)
        cmd_class._add_arguments(subparser, config)

    return parser


def parse_config(
    argv: Optional[Sequence[str]] = None,
    commands: Optional[Dict[str, Type[BaseCommand]]] = None,
) -> RunConfig:
    """Parses flags over config-document defaults.

    Usage errors, malformed values and missing command inputs end the process
    through argparse with exit status 2.
    """
    argv = list(sys.argv[1:] if argv is None else argv)
    commands = commands if commands is not None else get_installed_commands()

    preparser = argparse.ArgumentParser(add_help=False)
    preparser.add_argument("--config", type=Path)
    known, _ = preparser.parse_known_args(argv)
    try:
        config = load_config(known.config)
    except McPopeUserError as e:
        preparser.error(str(e))

    parser = build_parser(commands, config)
    options = parser.parse_args(argv)
    subparser: argparse.ArgumentParser = options.__dict__.pop("_parser")

    command_class = commands[options.command]
    try:
        command_class.check_options(options)
    except McPopeUserError as e:
        subparser.error(str(e))

    return RunConfig(
        command=options.command,
        command_class=command_class,
        options=options,
        config=config,
        log_level=options.log_level,
        debugger=options.debugger,
    )


def configure_logging(level: str) -> None:
    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=error_console, rich_tracebacks=True)],
        force=True,
    )


def run(config: RunConfig) -> int:
    try:
        return config.command_class(config.config, config.options).handle()
    except McPopeError as e:
        error_console.print(f"[red]{e}[/red]")
    except McPopeUserError as e:
        error_console.print(f"[yellow]{e}[/yellow]")
    except OSError as e:
        error_console.print(f"[red]{e}[/red]")
    except Exception:
        error_console.print_exception()
    return EXIT_ERROR


def main(argv: Optional[List[str]] = None):
    enable_rich_traceback()
    config = parse_config(argv)
    configure_logging(config.log_level)

    if config.debugger:
        import debugpy

        debugpy.listen(("0.0.0.0", 5678))
        debugpy.wait_for_client()

    sys.exit(run(config))
