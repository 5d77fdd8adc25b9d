"""Published experiments, rerun and compared against their reference values.

Each case returns a `CaseReport`: comparison rows (``quantity, paper_value,
computed_value, abs_diff, tolerance, pass``) plus the optimizer results that
produced them.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from typing import IO, Callable, Dict, List, NamedTuple, Optional, Sequence

import numpy as np

from . import tolerances
from .benchmarks import (
    ADMN_ASSETS,
    ADMN_CORRELATION,
    ADMN_MARGINAL_VAR,
    ADMN_MU,
    ADMN_NU,
    ADMN_OMEGA,
    ADMN_SIGMA,
    ADMN_UNSTABLE_THRESHOLD,
    CONSTRAINED_OBJECTIVE,
    CONSTRAINED_R,
    CONSTRAINED_WEIGHTS,
    PATHOLOGICAL_COVARIANCE,
    PATHOLOGICAL_WEIGHTS,
    RU_COVARIANCE,
    RU_CVAR,
    RU_MIN_VARIANCE,
    RU_MIN_VARIANCE_WEIGHTS,
    RU_RETURNS,
    THREE_ASSET_WEIGHTS,
    constrained_three_asset,
    ru_constraints,
    three_asset_covariance,
)
from .constants import DEFAULT_BIAS_DEPTH, DEFAULT_SEED
from .exceptions import McPopeUserError
from .optimizer import (
    AnalyticQuadratic,
    Distributional,
    ObjectiveSource,
    OptimizationProblem,
    OptimizationResult,
    run_workers,
)
from .reference import (
    GridSpec,
    analytic_three_asset,
    grid_oracle,
    quadratic_objective,
    ru_min_variance_reference,
)
from .risk import (
    ConditionalValueAtRisk,
    MeanVariance,
    NegativeOmega,
    NegativeSharpe,
    ValueAtRisk,
    marginal_var_student,
)
from .sampler import ConstraintSet, SamplerConfig
from .scenarios import simulate_gaussian, simulate_student_t
from .types import FloatArray

logger = logging.getLogger(__name__)

COMPARISON_COLUMNS = (
    "quantity",
    "paper_value",
    "computed_value",
    "abs_diff",
    "tolerance",
    "pass",
)


@dataclass(frozen=True)
class ComparisonRow:
    quantity: str
    published_value: float
    computed_value: float
    abs_diff: float
    tolerance: float
    passed: bool

    @classmethod
    def within(
        cls, quantity: str, expected: float, computed: float, tolerance: float
    ) -> ComparisonRow:
        diff = abs(computed - expected)
        return cls(quantity, expected, computed, diff, tolerance, diff <= tolerance)

    @classmethod
    def relative(
        cls, quantity: str, expected: float, computed: float, fraction: float
    ) -> ComparisonRow:
        """Tolerance expressed as a fraction of the expected magnitude."""
        return cls.within(quantity, expected, computed, fraction * abs(expected))

    @classmethod
    def above(
        cls, quantity: str, threshold: float, computed: float, inclusive: bool = False
    ) -> ComparisonRow:
        passed = computed >= threshold if inclusive else computed > threshold
        return cls(quantity, threshold, computed, computed - threshold, 0.0, passed)

    def as_csv_row(self) -> List[str]:
        return [
            self.quantity,
            f"{self.published_value:.17g}",
            f"{self.computed_value:.17g}",
            f"{self.abs_diff:.17g}",
            f"{self.tolerance:.17g}",
            "true" if self.passed else "false",
        ]


@dataclass
class CaseReport:
    name: str
    rows: List[ComparisonRow] = field(default_factory=list)
    results: Dict[str, OptimizationResult] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(row.passed for row in self.rows)

    @property
    def failures(self) -> List[ComparisonRow]:
        return [row for row in self.rows if not row.passed]

    def add_weights(
        self,
        label: str,
        expected: Sequence[float],
        computed: FloatArray,
        tolerance: float,
        indices: Optional[Sequence[int]] = None,
    ) -> None:
        indices = range(len(expected)) if indices is None else indices
        for index in indices:
            self.rows.append(
                ComparisonRow.within(
                    f"{label} w{index + 1}",
                    expected[index],
                    float(computed[index]),
                    tolerance,
                )
            )


@dataclass(frozen=True)
class CaseOptions:
    """Overrides for a case; ``None`` keeps the case's own setting."""

    seed: int = DEFAULT_SEED
    workers: Optional[int] = None
    jobs: Optional[int] = None
    base_samples: Optional[int] = None
    bias_depth: Optional[int] = None
    quantile: Optional[float] = None
    scenarios_count: Optional[int] = None

    def search(
        self,
        objective: ObjectiveSource,
        base_samples: int,
        workers: int,
        constraints: Optional[ConstraintSet] = None,
    ) -> OptimizationResult:
        sampler = SamplerConfig(
            objective.n_assets,
            self.base_samples or base_samples,
            DEFAULT_BIAS_DEPTH if self.bias_depth is None else self.bias_depth,
        )
        problem = OptimizationProblem(
            objective,
            sampler,
            constraints if constraints is not None else ConstraintSet(),
        )
        return run_workers(problem, self.workers or workers, self.seed, self.jobs)


def three_asset_family(options: CaseOptions) -> CaseReport:
    """Minimum variance of the 3-asset family at r = -0.5, 0 and 0.5."""
    report = CaseReport("table1")
    for r, expected in THREE_ASSET_WEIGHTS.items():
        covariance = three_asset_covariance(r)
        result = options.search(AnalyticQuadratic(covariance), 100_000, 4)
        label = f"r={r:g}"
        report.results[label] = result
        report.add_weights(
            label, expected, result.best_weights, tolerances.THREE_ASSET_WEIGHT
        )

        exact = analytic_three_asset(r)
        minimum = float(quadratic_objective(covariance)(exact)[0])
        report.rows.append(
            ComparisonRow.relative(
                f"{label} objective",
                minimum,
                result.best_risk,
                tolerances.THREE_ASSET_OBJECTIVE_RELATIVE,
            )
        )
    return report


def constrained3(options: CaseOptions) -> CaseReport:
    """Minimum variance at r = -0.5 with ``w1 >= 1/3`` and ``w2 + 1.1 w3 >= 1/2``."""
    report = CaseReport("constrained3")
    covariance = three_asset_covariance(CONSTRAINED_R)
    constraints = constrained_three_asset()

    result = options.search(AnalyticQuadratic(covariance), 100_000, 4, constraints)
    report.results["constrained"] = result
    oracle = grid_oracle(
        quadratic_objective(covariance), GridSpec(3, 1000, 40), constraints
    )

    fraction = tolerances.CONSTRAINED_OBJECTIVE_RELATIVE
    report.rows.extend(
        [
            ComparisonRow.relative(
                "objective", CONSTRAINED_OBJECTIVE, result.best_risk, fraction
            ),
            ComparisonRow.relative(
                "grid oracle objective", CONSTRAINED_OBJECTIVE, oracle.value, fraction
            ),
        ]
    )
    report.add_weights(
        "constrained",
        CONSTRAINED_WEIGHTS,
        result.best_weights,
        tolerances.CONSTRAINED_WEIGHT,
    )
    report.rows.append(
        ComparisonRow.above("acceptance rate", 0.0, result.acceptance_rate)
    )
    return report


def pathological6(options: CaseOptions) -> CaseReport:
    """The 6-asset covariance whose optimum sits on an edge of the simplex."""
    report = CaseReport("pathological6")
    result = options.search(AnalyticQuadratic(PATHOLOGICAL_COVARIANCE), 20_000, 8)
    report.results["pathological"] = result
    report.add_weights(
        "pathological",
        PATHOLOGICAL_WEIGHTS,
        result.best_weights,
        tolerances.PATHOLOGICAL_WEIGHT,
    )
    return report


def ru_cvar(options: CaseOptions) -> CaseReport:
    """CVaR-optimal portfolios of the three-asset Gaussian test problem.

    Every portfolio must earn at least `RU_TARGET_RETURN`; under a normal model
    the CVaR optimum then coincides with the minimum-variance portfolio.
    """
    report = CaseReport("ru-cvar")
    if options.quantile is None:
        quantiles = sorted(RU_CVAR, reverse=True)
    elif options.quantile in RU_CVAR:
        quantiles = [options.quantile]
    else:
        raise McPopeUserError(
            f"No published CVaR for quantile {options.quantile}; choose one of "
            + ", ".join(f"{u:g}" for u in sorted(RU_CVAR))
        )

    constraints = ru_constraints()
    for u in quantiles:
        J = options.scenarios_count or (200_000 if u <= 0.01 else 100_000)
        scenarios = simulate_gaussian(RU_RETURNS, RU_COVARIANCE, J, options.seed)
        result = options.search(
            Distributional(scenarios, ConditionalValueAtRisk(u)), 2000, 8, constraints
        )
        label = f"u={u:g}"
        report.results[label] = result
        report.rows.append(
            ComparisonRow.within(
                f"{label} cvar", RU_CVAR[u], result.best_risk, tolerances.RU_CVAR[u]
            )
        )
        if u == 0.05:
            report.add_weights(
                label,
                RU_MIN_VARIANCE_WEIGHTS,
                result.best_weights,
                tolerances.RU_CVAR_WEIGHT,
            )

    reference = ru_min_variance_reference()
    report.add_weights(
        "min variance",
        RU_MIN_VARIANCE_WEIGHTS,
        reference.weights,
        tolerances.RU_MIN_VARIANCE_WEIGHT,
    )
    report.rows.append(
        ComparisonRow.within(
            "min variance",
            RU_MIN_VARIANCE,
            reference.value,
            tolerances.RU_MIN_VARIANCE,
        )
    )
    return report


def omega_admn(options: CaseOptions) -> CaseReport:
    """Omega-optimal weights and marginal VaR of the three-asset t(9) model."""
    report = CaseReport("omega-admn")
    for (asset, u), expected in ADMN_MARGINAL_VAR.items():
        index = ADMN_ASSETS.index(asset)
        computed = marginal_var_student(ADMN_MU[index], ADMN_SIGMA[index], ADMN_NU, u)
        report.rows.append(
            ComparisonRow.within(
                f"{asset} var u={u:g}", expected, computed, tolerances.ADMN_MARGINAL_VAR
            )
        )

    J = options.scenarios_count or 50_000
    scenarios = simulate_student_t(
        ADMN_MU, ADMN_SIGMA, ADMN_CORRELATION, ADMN_NU, J, options.seed, antithetic=True
    )
    for b, (expected_omega, expected_weights) in ADMN_OMEGA.items():
        result = options.search(Distributional(scenarios, NegativeOmega(b)), 2000, 8)
        label = f"b={b:g}"
        report.results[label] = result
        report.add_weights(
            label, expected_weights, result.best_weights, tolerances.ADMN_WEIGHT
        )
        report.rows.append(
            ComparisonRow.relative(
                f"{label} omega",
                expected_omega,
                -result.best_risk,
                tolerances.ADMN_OMEGA_RELATIVE,
            )
        )

    b = ADMN_UNSTABLE_THRESHOLD
    result = options.search(Distributional(scenarios, NegativeOmega(b)), 2000, 8)
    report.results[f"b={b:g}"] = result
    report.rows.append(
        ComparisonRow.above(
            f"b={b:g} largest weight",
            tolerances.ADMN_CONCENTRATION,
            float(np.max(result.best_weights)),
            inclusive=True,
        )
    )
    return report


def risk_session(options: CaseOptions) -> CaseReport:
    """Five objectives on zero-mean Gaussian scenarios of the 6-asset problem.

    For a centred normal model every one of them is minimized by the
    minimum-variance portfolio.
    """
    report = CaseReport("risk-session")
    J = options.scenarios_count or 100_000
    scenarios = simulate_gaussian(
        np.zeros(PATHOLOGICAL_COVARIANCE.N), PATHOLOGICAL_COVARIANCE, J, options.seed
    )
    specs = [
        MeanVariance(0.0),
        ValueAtRisk(0.025),
        ConditionalValueAtRisk(0.025),
        NegativeSharpe(-1.0),
        NegativeOmega(-0.5),
    ]
    for spec in specs:
        result = options.search(Distributional(scenarios, spec), 5000, 8)
        label = spec.as_text()
        report.results[label] = result
        report.add_weights(
            label,
            PATHOLOGICAL_WEIGHTS,
            result.best_weights,
            tolerances.RISK_SESSION_WEIGHT,
            indices=(0, 2),
        )
    return report


class Case(NamedTuple):
    name: str
    run: Callable[[CaseOptions], CaseReport]

    @property
    def description(self) -> str:
        return (self.run.__doc__ or "").strip().splitlines()[0]


CASES: Dict[str, Case] = {
    case.name: case
    for case in [
        Case("table1", three_asset_family),
        Case("constrained3", constrained3),
        Case("pathological6", pathological6),
        Case("ru-cvar", ru_cvar),
        Case("omega-admn", omega_admn),
        Case("risk-session", risk_session),
    ]
}


def run_case(name: str, options: Optional[CaseOptions] = None) -> CaseReport:
    if name not in CASES:
        raise McPopeUserError(
            f"Unknown case {name!r}; expected one of: " + ", ".join(CASES)
        )
    report = CASES[name].run(options or CaseOptions())
    logger.info(
        "Case %s: %d of %d rows pass",
        name,
        len(report.rows) - len(report.failures),
        len(report.rows),
    )
    return report


def write_comparison_csv(rows: Sequence[ComparisonRow], outf: IO[str]) -> None:
    writer = csv.writer(outf, lineterminator="\n")
    writer.writerow(COMPARISON_COLUMNS)
    for row in rows:
        writer.writerow(row.as_csv_row())
