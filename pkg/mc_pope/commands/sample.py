import argparse

from ..command import (
    BaseCommand,
    add_output_argument,
    add_sampler_arguments,
    add_seed_argument,
    positive_int,
)
from ..constants import EXIT_OK
from ..sampler import SAMPLERS, SamplerConfig
from ..types import ConfigDict
from ..utils import asset_labels, write_matrix_csv


class Command(BaseCommand):
    @classmethod
    def get_help(cls) -> str:
        return """Draws portfolios from the unit simplex and writes them as CSV."""

    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser, config: ConfigDict) -> None:
        parser.add_argument(
            "--method",
            choices=sorted(SAMPLERS),
            default="ev",
            help=(
                "sampling scheme (default: ev, the edge-vertex biased pool the "
                "optimizer searches and the only one using --bias-depth; gap is "
                "the fastest unbiased scheme)"
            ),
        )
        parser.add_argument("--assets", "-n", type=positive_int, required=True)
        parser.add_argument(
            "--header", action="store_true", help="write a row of asset labels first"
        )
        add_seed_argument(parser, config)
        add_sampler_arguments(parser, config)
        add_output_argument(parser, config, "write the CSV here instead of stdout")

    def handle(self) -> int:
        config = SamplerConfig(
            self.options.assets,
            self.options.base_samples,
            self.options.bias_depth,
            self.options.seed,
        )
        weights = SAMPLERS[self.options.method](config)

        labels = asset_labels(config.n_assets) if self.options.header else None
        with self.open_output() as outf:
            write_matrix_csv(weights, outf, labels)
        return EXIT_OK
