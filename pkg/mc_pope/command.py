from __future__ import annotations

import argparse
import logging
import sys
from abc import ABCMeta, abstractmethod
from contextlib import contextmanager
from importlib.metadata import entry_points
from pathlib import Path
from typing import IO, Callable, Dict, Iterator, Optional, Type

from .constants import (
    DEFAULT_BASE_SAMPLES,
    DEFAULT_BIAS_DEPTH,
    DEFAULT_SEED,
    DEFAULT_WORKERS,
    MAX_BIAS_DEPTH,
)
from .exceptions import McPopeUserError
from .risk import RiskSpec, parse_risk_spec
from .sampler import MAX_SEED, ConstraintSet, SamplerConfig
from .types import ConfigDict
from .utils import load_yaml_mapping

logger = logging.getLogger(__name__)


def get_installed_commands() -> Dict[str, Type[BaseCommand]]:
    possible_commands: Dict[str, Type[BaseCommand]] = {}
    for entry_point in entry_points(group="mc_pope.commands"):
        try:
            loaded_class = entry_point.load()
        except ImportError:
            logger.warning(
                "Attempted to load entrypoint %s, but an ImportError occurred.",
                entry_point,
            )
            continue
        if not issubclass(loaded_class, BaseCommand):
            logger.warning(
                "Loaded entrypoint %s, but loaded class is "
                "not a subclass of `mc_pope.command.BaseCommand`.",
                entry_point,
            )
            continue
        possible_commands[entry_point.name] = loaded_class

    return possible_commands


def seed_type(value: str) -> int:
    try:
        seed = int(value, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{value!r} is not an integer")
    if not 0 <= seed < MAX_SEED:
        raise argparse.ArgumentTypeError(f"{value} is not an unsigned 64-bit integer")
    return seed


def positive_int(value: str) -> int:
    try:
        number = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{value!r} is not an integer")
    if number < 1:
        raise argparse.ArgumentTypeError(f"{value} must be at least 1")
    return number


def bias_depth_type(value: str) -> int:
    try:
        depth = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{value!r} is not an integer")
    if not 0 <= depth <= MAX_BIAS_DEPTH:
        raise argparse.ArgumentTypeError(f"{value} must lie in [0, {MAX_BIAS_DEPTH}]")
    return depth


def risk_spec_type(value: str) -> RiskSpec:
    try:
        return parse_risk_spec(value)
    except McPopeUserError as e:
        raise argparse.ArgumentTypeError(str(e))


# Converters for numeric config values; argparse only converts string defaults.
CONFIG_VALUE_TYPES: Dict[str, Callable[[str], int]] = {
    "seed": seed_type,
    "workers": positive_int,
    "jobs": positive_int,
    "base_samples": positive_int,
    "bias_depth": bias_depth_type,
}


class BaseCommand(metaclass=ABCMeta):
    def __init__(self, config: ConfigDict, options: argparse.Namespace):
        self._options: argparse.Namespace = options
        self._config: ConfigDict = config
        super().__init__()

    @property
    def options(self) -> argparse.Namespace:
        """Provides options provided at the command-line."""
        return self._options

    @property
    def config(self) -> ConfigDict:
        """Returns the merged configuration as a dictionary."""
        return self._config

    @classmethod
    def get_help(cls) -> str:
        """Returns help text for this command."""
        return ""

    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser, config: ConfigDict) -> None:
        """Allows adding additional command-line arguments."""
        pass

    @classmethod
    def _add_arguments(
        cls, parser: argparse.ArgumentParser, config: ConfigDict
    ) -> None:
        cls.add_arguments(parser, config)

    @classmethod
    def check_options(cls, options: argparse.Namespace) -> None:
        """Raises `McPopeUserError` when a required input is missing."""
        pass

    @contextmanager
    def open_output(self, default: Optional[Path] = None) -> Iterator[IO[str]]:
        """Yields ``--output`` opened for writing, or stdout when unset."""
        path = getattr(self.options, "output", None) or default
        if path is None:
            yield sys.stdout
            return
        with open(path, "w", newline="") as outf:
            yield outf

    @abstractmethod
    def handle(self) -> int:
        """This is where the work of your command starts; returns an exit status."""
        ...


def add_seed_argument(parser: argparse.ArgumentParser, config: ConfigDict) -> None:
    parser.add_argument(
        "--seed",
        type=seed_type,
        default=config.get("seed", DEFAULT_SEED),
        help="master seed, an unsigned 64-bit integer; default: %(default)s",
    )


def add_output_argument(
    parser: argparse.ArgumentParser, config: ConfigDict, help: str
) -> None:
    parser.add_argument("--output", type=Path, default=config.get("output"), help=help)


def add_sampler_arguments(
    parser: argparse.ArgumentParser, config: ConfigDict
) -> None:
    parser.add_argument(
        "--base-samples",
        "-k",
        type=positive_int,
        default=config.get("base_samples", DEFAULT_BASE_SAMPLES),
        help="hypercube rows drawn per worker; default: %(default)s",
    )
    parser.add_argument(
        "--bias-depth",
        "-P",
        type=bias_depth_type,
        default=config.get("bias_depth", DEFAULT_BIAS_DEPTH),
        help="edge-vertex bias depth; default: %(default)s",
    )


def add_worker_arguments(parser: argparse.ArgumentParser, config: ConfigDict) -> None:
    parser.add_argument(
        "--workers",
        type=positive_int,
        default=config.get("workers", DEFAULT_WORKERS),
        help="logical workers, each with its own derived seed; default: %(default)s",
    )
    parser.add_argument(
        "--jobs",
        type=positive_int,
        default=config.get("jobs"),
        help="maximum number of workers running at once; default: all of them",
    )


class SearchCommand(BaseCommand):
    """Base for commands that run the candidate search."""

    @classmethod
    def _add_arguments(
        cls, parser: argparse.ArgumentParser, config: ConfigDict
    ) -> None:
        add_seed_argument(parser, config)
        add_sampler_arguments(parser, config)
        add_worker_arguments(parser, config)
        add_output_argument(parser, config, "write the JSON result here")
        parser.add_argument(
            "--constraints",
            type=Path,
            default=config.get("constraints"),
            help="YAML constraints document",
        )
        parser.add_argument(
            "--even-pool",
            action="store_true",
            default=config.get("even_pool", False),
            help="also search an unbiased pool as large as the biased one",
        )
        parser.add_argument(
            "--no-baseline",
            dest="baseline",
            action="store_false",
            default=config.get("baseline", True),
            help="do not add the equal-weight portfolio to the candidates",
        )
        super()._add_arguments(parser, config)

    def sampler_config(self, n_assets: int) -> SamplerConfig:
        return SamplerConfig(
            n_assets,
            self.options.base_samples,
            self.options.bias_depth,
            self.options.seed,
        )

    def load_constraints(self) -> ConstraintSet:
        if not self.options.constraints:
            return ConstraintSet()
        document = load_yaml_mapping(Path(self.options.constraints))
        return ConstraintSet.from_dict(document)
