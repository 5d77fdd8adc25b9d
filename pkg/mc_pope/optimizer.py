"""Best-of-best Monte Carlo portfolio search.

Each worker draws ``k`` hypercube rows, expands them into EV-biased portfolios
to depth ``P``, optionally adds the equal-weight portfolio (and an even
simplicial pool), rejects infeasible candidates and keeps the minimizer of the
objective. Workers are merged by minimum risk; ties always go to the
lexicographically smallest weight vector, so the merged answer does not depend
on how or where the workers ran.

Worker ``w`` (1-based) of a run with master seed ``s`` is seeded with the
SplitMix64 finalizer of ``s + w * 0x9E3779B97F4A7C15 (mod 2**64)``.
"""
from __future__ import annotations

import itertools
import json
import logging
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, NamedTuple, Optional, Union

import numpy as np
from joblib import Parallel, delayed

from .constants import EVALUATION_CHUNK_ELEMENTS
from .exceptions import (
    DimensionMismatchError,
    InfeasibleError,
    LatticeTooLargeError,
    McPopeProgrammingError,
    McPopeUserError,
)
from .reference import MAX_GRID_ASSETS, GridSpec, grid_oracle, quadratic_objective
from .risk import MeanVariance, RiskSpec, portfolio_return_matrix
from .sampler import (
    ConstraintSet,
    SamplerConfig,
    filter_constraints,
    is_portfolio_batch,
    lexicographic_argmin,
    sample_edge_vertex,
)
from .scenarios import (
    CovarianceSpec,
    ScenarioMatrix,
    covariance_discrepancy,
    realized_covariance,
)
from .types import FloatArray

logger = logging.getLogger(__name__)

MASK64 = 2**64 - 1


def worker_seed(master_seed: int, worker_index: int) -> int:
    """SplitMix64 mix of a master seed and a worker index."""
    z = (master_seed + worker_index * 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class AnalyticQuadratic:
    covariance: CovarianceSpec
    lam: float = 0.0
    expected_returns: Optional[FloatArray] = None

    def __post_init__(self):
        if self.expected_returns is not None:
            returns = np.asarray(self.expected_returns, dtype=float)
            if returns.shape != (self.covariance.N,):
                raise DimensionMismatchError(
                    "Expected returns must have one entry per asset"
                )
            object.__setattr__(self, "expected_returns", returns)

    @property
    def n_assets(self) -> int:
        return self.covariance.N

    def score(self, batch: FloatArray) -> FloatArray:
        return quadratic_objective(self.covariance, self.lam, self.expected_returns)(
            batch
        )

    def describe(self) -> str:
        return MeanVariance(self.lam).as_text()


@dataclass(frozen=True)
class Distributional:
    scenarios: ScenarioMatrix
    spec: RiskSpec

    @property
    def n_assets(self) -> int:
        return self.scenarios.N

    def score(self, batch: FloatArray) -> FloatArray:
        """Scores candidates in column chunks bounded by the evaluation budget."""
        chunk = max(1, EVALUATION_CHUNK_ELEMENTS // self.scenarios.J)
        values = np.empty(len(batch))
        for start in range(0, len(batch), chunk):
            stop = start + chunk
            returns = portfolio_return_matrix(batch[start:stop], self.scenarios)
            values[start:stop] = self.spec.measure(returns)
        return values

    def describe(self) -> str:
        return self.spec.as_text()


ObjectiveSource = Union[AnalyticQuadratic, Distributional]


@dataclass(frozen=True)
class OptimizationProblem:
    objective: ObjectiveSource
    sampler: SamplerConfig
    constraints: ConstraintSet = field(default_factory=ConstraintSet)
    include_equal_weight_baseline: bool = True
    include_even_pool: bool = False

    def __post_init__(self):
        sizes = {self.objective.n_assets, self.sampler.n_assets}
        if self.constraints.n_assets is not None:
            sizes.add(self.constraints.n_assets)
        if len(sizes) != 1:
            raise DimensionMismatchError(
                f"Problem parts disagree on the asset count: {sorted(sizes)}"
            )

    @property
    def n_assets(self) -> int:
        return self.sampler.n_assets

    def risk_of(self, weights: FloatArray) -> float:
        """Objective value of a single portfolio, +inf when undefined."""
        value = float(self.objective.score(np.atleast_2d(weights))[0])
        return np.inf if np.isnan(value) else value


@dataclass
class OptimizationResult:
    best_weights: FloatArray
    best_risk: float
    candidates_evaluated: int
    candidates_accepted: int
    master_seed: int
    worker_count: int
    elapsed_ms: float
    risk_spec: str = ""

    @property
    def acceptance_rate(self) -> float:
        if not self.candidates_evaluated:
            return 0.0
        return self.candidates_accepted / self.candidates_evaluated

    def as_dict(self) -> Dict[str, Any]:
        return {
            "weights": [float(weight) for weight in self.best_weights],
            "risk": float(self.best_risk),
            "risk_spec": self.risk_spec,
            "candidates_evaluated": int(self.candidates_evaluated),
            "candidates_accepted": int(self.candidates_accepted),
            "master_seed": int(self.master_seed),
            "worker_count": int(self.worker_count),
            "elapsed_ms": float(self.elapsed_ms),
        }

    def as_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> OptimizationResult:
        return cls(
            best_weights=np.asarray(data["weights"], dtype=float),
            best_risk=float(data["risk"]),
            candidates_evaluated=int(data["candidates_evaluated"]),
            candidates_accepted=int(data["candidates_accepted"]),
            master_seed=int(data["master_seed"]),
            worker_count=int(data["worker_count"]),
            elapsed_ms=float(data["elapsed_ms"]),
            risk_spec=data.get("risk_spec", ""),
        )

    def __str__(self):
        weights = ", ".join(f"{weight:.6g}" for weight in self.best_weights)
        return f"{self.best_risk:.6g} at ({weights})"


class _WorkerOutcome(NamedTuple):
    weights: Optional[FloatArray]
    risk: float
    evaluated: int
    accepted: int


def generate_candidates(problem: OptimizationProblem, seed: int) -> FloatArray:
    candidates = sample_edge_vertex(
        problem.sampler.with_seed(seed), even_pool=problem.include_even_pool
    )
    if problem.include_equal_weight_baseline:
        n = problem.n_assets
        candidates = np.vstack([candidates, np.full((1, n), 1.0 / n)])
    return candidates


def _search(problem: OptimizationProblem, seed: int) -> _WorkerOutcome:
    candidates = generate_candidates(problem, seed)
    try:
        accepted, rate = filter_constraints(candidates, problem.constraints)
    except InfeasibleError:
        logger.info("Worker seed %d found no feasible candidates", seed)
        return _WorkerOutcome(None, np.inf, len(candidates), 0)

    risks = problem.objective.score(accepted)
    risks = np.where(np.isnan(risks), np.inf, risks)
    best = lexicographic_argmin(risks, accepted)
    logger.debug(
        "Worker seed %d: best %.10g of %d accepted (rate %.4f)",
        seed,
        risks[best],
        len(accepted),
        rate,
    )
    return _WorkerOutcome(
        accepted[best].copy(), float(risks[best]), len(candidates), len(accepted)
    )


def _merge(
    outcomes: List[_WorkerOutcome],
    problem: OptimizationProblem,
    master_seed: int,
    started: float,
) -> OptimizationResult:
    evaluated = sum(outcome.evaluated for outcome in outcomes)
    feasible = [outcome for outcome in outcomes if outcome.weights is not None]
    if not feasible:
        raise InfeasibleError(
            f"No feasible candidates among {evaluated}; the constraints are "
            "infeasible or too tight for this sample size",
            submitted=evaluated,
        )

    best = feasible[
        lexicographic_argmin(
            [outcome.risk for outcome in feasible],
            np.vstack([outcome.weights for outcome in feasible]),
        )
    ]
    if not is_portfolio_batch(best.weights) or not problem.constraints.is_satisfied(
        best.weights
    ):
        raise McPopeProgrammingError(f"Search selected an infeasible {best.weights}")
    return OptimizationResult(
        best_weights=best.weights,
        best_risk=best.risk,
        candidates_evaluated=evaluated,
        candidates_accepted=sum(outcome.accepted for outcome in outcomes),
        master_seed=master_seed,
        worker_count=len(outcomes),
        elapsed_ms=(time.perf_counter() - started) * 1000.0,
        risk_spec=problem.objective.describe(),
    )


def optimize_single(problem: OptimizationProblem, seed: int) -> OptimizationResult:
    started = time.perf_counter()
    return _merge([_search(problem, seed)], problem, seed, started)


def run_workers(
    problem: OptimizationProblem,
    worker_count: int,
    master_seed: int,
    n_jobs: Optional[int] = None,
) -> OptimizationResult:
    """Runs ``worker_count`` independent searches and keeps the best.

    ``n_jobs`` caps physical parallelism (joblib semantics); ``1`` executes the
    logical workers sequentially with an identical result.
    """
    if worker_count < 1:
        raise McPopeUserError(f"worker_count must be at least 1, got {worker_count}")

    started = time.perf_counter()
    seeds = [worker_seed(master_seed, index) for index in range(1, worker_count + 1)]
    jobs = min(worker_count, n_jobs if n_jobs is not None else worker_count)
    logger.info(
        "Searching %d x %d candidates with %d job(s)",
        worker_count,
        problem.sampler.candidates_per_draw,
        jobs,
    )

    if jobs == 1:
        outcomes = [_search(problem, seed) for seed in seeds]
    else:
        outcomes = Parallel(n_jobs=jobs)(
            delayed(_search)(problem, seed) for seed in seeds
        )

    result = _merge(outcomes, problem, master_seed, started)
    logger.info(
        "Best of %d workers: %s (%.0f ms)", worker_count, result, result.elapsed_ms
    )
    return result


class ComputationOutcome(NamedTuple):
    weights: FloatArray
    objective: float


QP_INPUT = "qp_input"
QP_REALIZED = "qp_realized"
MC_INPUT = "mc_input"
MC_REALIZED = "mc_realized"
MC_DISTRIBUTIONAL = "mc_distributional"


@dataclass
class StabilityReport:
    computations: Dict[str, ComputationOutcome]
    weight_differences: Dict[str, float]
    delta: float
    degenerate: bool = False

    def as_dict(self) -> Dict[str, Any]:
        return {
            "computations": {
                name: {
                    "weights": [float(weight) for weight in outcome.weights],
                    "objective": float(outcome.objective),
                }
                for name, outcome in self.computations.items()
            },
            "weight_differences": dict(self.weight_differences),
            "delta": float(self.delta),
            "degenerate": self.degenerate,
        }


def stability_diagnostics(
    C_input: CovarianceSpec,
    lam: float,
    R: Optional[FloatArray],
    scenarios: ScenarioMatrix,
    sampler: SamplerConfig,
    constraints: Optional[ConstraintSet] = None,
    master_seed: int = 0,
    worker_count: int = 1,
    n_jobs: Optional[int] = None,
    analytic_weights: Optional[FloatArray] = None,
    grid: Optional[GridSpec] = None,
) -> StabilityReport:
    """Cross-checks up to five ways of solving one quadratic problem.

    The exact members come from ``analytic_weights`` when supplied and the grid
    oracle otherwise; they are omitted when the lattice is out of reach. The
    Monte Carlo members search the input covariance, the realized covariance
    and the scenarios themselves (mean-variance on the sampled returns).
    """
    constraints = constraints if constraints is not None else ConstraintSet()
    realized = realized_covariance(scenarios)
    delta = covariance_discrepancy(C_input, realized)
    degenerate = not np.any(realized.matrix)
    if degenerate:
        logger.warning("degenerate scenarios: the realized covariance is zero")

    computations: Dict[str, ComputationOutcome] = {}

    def exact(name: str, covariance: CovarianceSpec, supplied: Optional[FloatArray]):
        objective = quadratic_objective(covariance, lam, R)
        if supplied is not None:
            weights = np.asarray(supplied, dtype=float)
            value = float(objective(weights)[0])
            computations[name] = ComputationOutcome(weights, value)
            return
        if C_input.N > MAX_GRID_ASSETS:
            return
        spec = grid if grid is not None else GridSpec.finest(C_input.N)
        try:
            oracle = grid_oracle(objective, spec, constraints)
        except LatticeTooLargeError as e:
            logger.info("Skipping %s: %s", name, e)
            return
        computations[name] = ComputationOutcome(oracle.weights, oracle.value)

    exact(QP_INPUT, C_input, analytic_weights)
    exact(QP_REALIZED, realized, None)

    sources = {
        MC_INPUT: AnalyticQuadratic(C_input, lam, R),
        MC_REALIZED: AnalyticQuadratic(realized, lam, R),
        MC_DISTRIBUTIONAL: Distributional(scenarios, MeanVariance(lam)),
    }
    for name, source in sources.items():
        result = run_workers(
            OptimizationProblem(source, sampler, constraints),
            worker_count,
            master_seed,
            n_jobs,
        )
        computations[name] = ComputationOutcome(result.best_weights, result.best_risk)

    differences = {
        f"{first}/{second}": float(
            np.max(
                np.abs(computations[first].weights - computations[second].weights)
            )
        )
        for first, second in itertools.combinations(computations, 2)
    }
    return StabilityReport(computations, differences, delta, degenerate)
