import argparse
import logging
from pathlib import Path

from ..command import SearchCommand, positive_int, risk_spec_type
from ..constants import EXIT_OK
from ..exceptions import McPopeUserError
from ..optimizer import (
    AnalyticQuadratic,
    Distributional,
    ObjectiveSource,
    OptimizationProblem,
    run_workers,
)
from ..risk import MeanVariance, VarianceOnly
from ..scenarios import (
    CovarianceSpec,
    DistributionSpec,
    load_scenarios,
    load_scenarios_array,
    simulate,
)
from ..types import ConfigDict
from ..utils import load_yaml_mapping

logger = logging.getLogger(__name__)


class Command(SearchCommand):
    @classmethod
    def get_help(cls) -> str:
        return """Searches for the portfolio minimizing a risk functional."""

    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser, config: ConfigDict) -> None:
        parser.add_argument(
            "--risk",
            type=risk_spec_type,
            default=config.get("risk"),
            help=(
                "objective: mv:<lambda>, variance, var:<u>, cvar:<u>, "
                "sharpe:<b>, omega:<b> or phi:<b>,<p>,<q>"
            ),
        )
        parser.add_argument(
            "--scenarios",
            type=Path,
            default=config.get("scenarios"),
            help="CSV scenario matrix, one row per scenario",
        )
        parser.add_argument(
            "--distribution",
            type=Path,
            default=config.get("distribution"),
            help="YAML distribution document to simulate scenarios from",
        )
        parser.add_argument(
            "--scenarios-count",
            "-J",
            type=positive_int,
            default=10_000,
            help="scenarios simulated from --distribution; default: %(default)s",
        )
        parser.add_argument(
            "--covariance",
            type=Path,
            help="CSV covariance matrix; optimizes mv/variance analytically",
        )
        parser.add_argument(
            "--returns", type=Path, help="CSV row of expected returns for --covariance"
        )

    @classmethod
    def check_options(cls, options: argparse.Namespace) -> None:
        if options.risk is None:
            raise McPopeUserError("optimize needs --risk")
        sources = [
            name
            for name in ("scenarios", "distribution", "covariance")
            if getattr(options, name)
        ]
        if len(sources) != 1:
            raise McPopeUserError(
                "optimize needs exactly one of --scenarios, --distribution or "
                "--covariance"
            )
        if options.covariance and not isinstance(
            options.risk, (MeanVariance, VarianceOnly)
        ):
            raise McPopeUserError(
                "--covariance only supports the mv and variance objectives"
            )

    def get_objective(self) -> ObjectiveSource:
        risk = self.options.risk
        if self.options.covariance:
            covariance = CovarianceSpec(load_scenarios_array(self.options.covariance))
            returns = None
            if self.options.returns:
                returns = load_scenarios_array(self.options.returns).ravel()
            lam = risk.lam if isinstance(risk, MeanVariance) else 0.0
            if lam and returns is None:
                raise McPopeUserError("mv with a nonzero lambda needs --returns")
            return AnalyticQuadratic(covariance, lam, returns)

        if self.options.scenarios:
            scenarios = load_scenarios(self.options.scenarios)
        else:
            path = Path(self.options.distribution)
            spec = DistributionSpec.from_dict(load_yaml_mapping(path), path.parent)
            scenarios = simulate(spec, self.options.scenarios_count, self.options.seed)
        return Distributional(scenarios, risk)

    def handle(self) -> int:
        objective = self.get_objective()
        problem = OptimizationProblem(
            objective,
            self.sampler_config(objective.n_assets),
            self.load_constraints(),
            include_equal_weight_baseline=self.options.baseline,
            include_even_pool=self.options.even_pool,
        )
        result = run_workers(
            problem, self.options.workers, self.options.seed, self.options.jobs
        )

        logger.info(
            "Accepted %d of %d candidates",
            result.candidates_accepted,
            result.candidates_evaluated,
        )
        with self.open_output() as outf:
            outf.write(result.as_json())
            outf.write("\n")
        return EXIT_OK
