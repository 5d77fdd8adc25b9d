import argparse
import json
import logging
from pathlib import Path

import numpy as np

from ..command import SearchCommand, positive_int
from ..constants import EXIT_OK
from ..optimizer import stability_diagnostics
from ..scenarios import (
    CovarianceSpec,
    load_scenarios,
    load_scenarios_array,
    simulate_gaussian,
)
from ..types import ConfigDict

logger = logging.getLogger(__name__)


class Command(SearchCommand):
    @classmethod
    def get_help(cls) -> str:
        return (
            "Solves one mean-variance problem several ways and reports how far "
            "the answers drift apart."
        )

    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser, config: ConfigDict) -> None:
        parser.add_argument(
            "--covariance", type=Path, required=True, help="CSV input covariance"
        )
        parser.add_argument("--returns", type=Path, help="CSV row of expected returns")
        parser.add_argument(
            "--lambda",
            dest="lam",
            type=float,
            default=0.0,
            help="return weighting of the mean-variance objective",
        )
        parser.add_argument(
            "--scenarios",
            type=Path,
            help="CSV scenarios; simulated as Gaussian from the inputs when omitted",
        )
        parser.add_argument(
            "--scenarios-count",
            "-J",
            type=positive_int,
            default=100_000,
            help="scenarios simulated when --scenarios is omitted",
        )

    def handle(self) -> int:
        covariance = CovarianceSpec(load_scenarios_array(self.options.covariance))
        returns = None
        if self.options.returns:
            returns = load_scenarios_array(self.options.returns).ravel()

        if self.options.scenarios:
            scenarios = load_scenarios(self.options.scenarios)
        else:
            mean = returns if returns is not None else np.zeros(covariance.N)
            scenarios = simulate_gaussian(
                mean, covariance, self.options.scenarios_count, self.options.seed
            )

        report = stability_diagnostics(
            covariance,
            self.options.lam,
            returns,
            scenarios,
            self.sampler_config(covariance.N),
            self.load_constraints(),
            master_seed=self.options.seed,
            worker_count=self.options.workers,
            n_jobs=self.options.jobs,
        )
        logger.info("Covariance discrepancy %.6g", report.delta)

        with self.open_output() as outf:
            json.dump(report.as_dict(), outf, indent=2)
            outf.write("\n")
        return EXIT_OK
