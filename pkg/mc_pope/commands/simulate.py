import argparse
import logging
from pathlib import Path

from ..command import BaseCommand, add_output_argument, add_seed_argument, positive_int
from ..constants import EXIT_OK
from ..exceptions import McPopeUserError
from ..scenarios import DistributionSpec, random_covariance, simulate
from ..types import ConfigDict
from ..utils import asset_labels, load_yaml_mapping, write_matrix_csv

logger = logging.getLogger(__name__)


class Command(BaseCommand):
    @classmethod
    def get_help(cls) -> str:
        return (
            "Simulates a scenario matrix from a distribution document, or draws a "
            "random covariance matrix."
        )

    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser, config: ConfigDict) -> None:
        source = parser.add_mutually_exclusive_group()
        source.add_argument(
            "--distribution",
            type=Path,
            default=config.get("distribution"),
            help="YAML distribution document",
        )
        source.add_argument(
            "--random-covariance",
            type=positive_int,
            metavar="N",
            help="write an N x N covariance built by squaring a random factor",
        )
        parser.add_argument(
            "--scenarios-count",
            "-J",
            type=positive_int,
            default=10_000,
            help="number of scenario rows; default: %(default)s",
        )
        parser.add_argument(
            "--header", action="store_true", help="write a row of asset labels first"
        )
        add_seed_argument(parser, config)
        add_output_argument(parser, config, "write the CSV here instead of stdout")

    @classmethod
    def check_options(cls, options: argparse.Namespace) -> None:
        if not options.distribution and not options.random_covariance:
            raise McPopeUserError(
                "simulate needs --distribution or --random-covariance"
            )

    def handle(self) -> int:
        if self.options.random_covariance:
            matrix = random_covariance(
                self.options.random_covariance, self.options.seed
            ).matrix
        else:
            path = Path(self.options.distribution)
            spec = DistributionSpec.from_dict(load_yaml_mapping(path), path.parent)
            scenarios = simulate(spec, self.options.scenarios_count, self.options.seed)
            logger.info("Simulated %s", scenarios)
            matrix = scenarios.returns

        labels = asset_labels(matrix.shape[1]) if self.options.header else None
        with self.open_output() as outf:
            write_matrix_csv(matrix, outf, labels)
        return EXIT_OK
