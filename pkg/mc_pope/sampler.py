"""Random long-only, fully-invested portfolios on the unit simplex.

Three even samplers (gaps of sorted uniforms, sequential order statistics and
normalized exponentials) share the marginal law ``F(x) = 1 - (1 - x)**(N - 1)``.
The uniform-ratio sampler is biased towards the centre and edge midpoints; it is
kept because it is the ``p = 0`` member of the edge-vertex (EV) family, where
hypercube rows are raised to the powers ``2**p`` before normalization.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .constants import MAX_BIAS_DEPTH, UNIT_SUM_TOLERANCE
from .exceptions import (
    DimensionMismatchError,
    InfeasibleError,
    McPopeProgrammingError,
    McPopeUserError,
)
from .types import FloatArray, WeightPredicate

logger = logging.getLogger(__name__)

MAX_SEED = 2**64


@dataclass(frozen=True)
class SamplerConfig:
    n_assets: int
    base_count: int
    bias_depth: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.n_assets < 1:
            raise McPopeUserError(f"n_assets must be at least 1, got {self.n_assets}")
        if self.base_count < 1:
            raise McPopeUserError(
                f"base_count must be at least 1, got {self.base_count}"
            )
        if not 0 <= self.bias_depth <= MAX_BIAS_DEPTH:
            raise McPopeUserError(
                f"bias_depth must lie in [0, {MAX_BIAS_DEPTH}], got {self.bias_depth}"
            )
        if not 0 <= self.seed < MAX_SEED:
            raise McPopeUserError(
                f"seed must be an unsigned 64-bit integer, got {self.seed}"
            )

    @property
    def candidates_per_draw(self) -> int:
        """Portfolios produced by one EV-biased draw of ``base_count`` rows."""
        return self.base_count * (self.bias_depth + 1)

    def with_seed(self, seed: int) -> SamplerConfig:
        return SamplerConfig(self.n_assets, self.base_count, self.bias_depth, seed)


@dataclass
class ConstraintSet:
    lower_bounds: Optional[FloatArray] = None
    upper_bounds: Optional[FloatArray] = None
    linear_inequalities: List[Tuple[FloatArray, float]] = field(default_factory=list)
    general_predicates: List[WeightPredicate] = field(default_factory=list)

    def __post_init__(self):
        if self.lower_bounds is not None:
            self.lower_bounds = np.asarray(self.lower_bounds, dtype=float)
        if self.upper_bounds is not None:
            self.upper_bounds = np.asarray(self.upper_bounds, dtype=float)
        self.linear_inequalities = [
            (np.asarray(coefficients, dtype=float), float(bound))
            for coefficients, bound in self.linear_inequalities
        ]

        sizes = {len(vector) for vector in self._vectors()}
        if len(sizes) > 1:
            raise DimensionMismatchError(
                f"Constraint vectors disagree on the asset count: {sorted(sizes)}"
            )
        if (
            self.lower_bounds is not None
            and self.upper_bounds is not None
            and np.any(self.lower_bounds > self.upper_bounds)
        ):
            raise McPopeUserError("lower_bounds must not exceed upper_bounds")

    def _vectors(self) -> List[FloatArray]:
        vectors = [coefficients for coefficients, _ in self.linear_inequalities]
        for bounds in (self.lower_bounds, self.upper_bounds):
            if bounds is not None:
                vectors.append(bounds)
        return vectors

    @property
    def n_assets(self) -> Optional[int]:
        vectors = self._vectors()
        return len(vectors[0]) if vectors else None

    def is_empty(self) -> bool:
        return not self._vectors() and not self.general_predicates

    def mask(self, candidates: FloatArray) -> np.ndarray:
        """Returns a boolean row mask of the candidates meeting every constraint."""
        candidates = np.atleast_2d(candidates)
        if self.n_assets is not None and candidates.shape[1] != self.n_assets:
            raise DimensionMismatchError(
                f"Candidates have {candidates.shape[1]} assets; "
                f"constraints expect {self.n_assets}"
            )

        keep = np.ones(len(candidates), dtype=bool)
        if self.lower_bounds is not None:
            keep &= np.all(candidates >= self.lower_bounds, axis=1)
        if self.upper_bounds is not None:
            keep &= np.all(candidates <= self.upper_bounds, axis=1)
        for coefficients, bound in self.linear_inequalities:
            keep &= candidates @ coefficients >= bound
        for predicate in self.general_predicates:
            for index in np.flatnonzero(keep):
                keep[index] = bool(predicate(candidates[index]))
        return keep

    def is_satisfied(self, weights: FloatArray) -> bool:
        return bool(self.mask(np.asarray(weights, dtype=float)[None, :])[0])

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> ConstraintSet:
        """Builds a constraint set from a parsed YAML constraints document.

        Recognized keys are ``lower_bounds``, ``upper_bounds`` and ``linear``;
        the latter is a list of ``{coefficients: [...], bound: c}`` mappings
        meaning ``coefficients . w >= c``.
        """
        unknown = set(data) - {"lower_bounds", "upper_bounds", "linear"}
        if unknown:
            raise McPopeUserError(
                f"Unknown constraint keys: {', '.join(sorted(unknown))}"
            )
        try:
            linear = [
                (row["coefficients"], row["bound"]) for row in data.get("linear", [])
            ]
        except (KeyError, TypeError):
            raise McPopeUserError(
                "Each linear constraint needs 'coefficients' and 'bound'"
            )
        return cls(
            lower_bounds=data.get("lower_bounds"),
            upper_bounds=data.get("upper_bounds"),
            linear_inequalities=linear,
        )


class ConstraintFilterResult(NamedTuple):
    accepted: FloatArray
    acceptance_rate: float


def generator(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def open_uniforms(rng: np.random.Generator, shape: Tuple[int, ...]) -> FloatArray:
    """Uniform draws on the open interval (0, 1)."""
    uniforms = rng.random(shape)
    zeros = uniforms == 0.0
    while zeros.any():
        uniforms[zeros] = rng.random(int(zeros.sum()))
        zeros = uniforms == 0.0
    return uniforms


def is_portfolio_batch(
    batch: FloatArray, tolerance: float = UNIT_SUM_TOLERANCE
) -> bool:
    batch = np.atleast_2d(batch)
    return bool(
        np.all(batch >= 0.0)
        and np.all(np.abs(batch.sum(axis=1) - 1.0) <= tolerance)
    )


def ratio_weights(uniforms: FloatArray) -> FloatArray:
    uniforms = np.atleast_2d(np.asarray(uniforms, dtype=float))
    return uniforms / uniforms.sum(axis=1, keepdims=True)


def gap_weights(uniforms: FloatArray) -> FloatArray:
    """Gaps between sorted interior points, endpoints 0 and 1 included.

    ``uniforms`` has ``N - 1`` columns; the result has ``N``.
    """
    uniforms = np.atleast_2d(np.asarray(uniforms, dtype=float))
    count = len(uniforms)
    points = np.sort(uniforms, axis=1)
    padded = np.hstack([np.zeros((count, 1)), points, np.ones((count, 1))])
    return np.diff(padded, axis=1)


def order_statistic_weights(uniforms: FloatArray) -> FloatArray:
    """Gaps of order statistics drawn from the top down, without sorting.

    The largest of ``N - 1`` points is ``u ** (1 / (N - 1))``; each following
    point is the maximum of one fewer uniform on ``(0, previous)``.
    """
    uniforms = np.atleast_2d(np.asarray(uniforms, dtype=float))
    count, interior = uniforms.shape
    points = np.empty_like(uniforms)
    current = np.ones(count)
    for index in range(interior):
        current = current * uniforms[:, index] ** (1.0 / (interior - index))
        points[:, interior - 1 - index] = current
    padded = np.hstack([np.zeros((count, 1)), points, np.ones((count, 1))])
    return np.diff(padded, axis=1)


def exponential_weights(uniforms: FloatArray) -> FloatArray:
    uniforms = np.atleast_2d(np.asarray(uniforms, dtype=float))
    logs = np.log(uniforms)
    return logs / logs.sum(axis=1, keepdims=True)


def sample_uniform_ratio(config: SamplerConfig) -> FloatArray:
    rng = generator(config.seed)
    return ratio_weights(open_uniforms(rng, (config.base_count, config.n_assets)))


def sample_gap(config: SamplerConfig) -> FloatArray:
    rng = generator(config.seed)
    return gap_weights(open_uniforms(rng, (config.base_count, config.n_assets - 1)))


def sample_order_statistics(config: SamplerConfig) -> FloatArray:
    rng = generator(config.seed)
    return order_statistic_weights(
        open_uniforms(rng, (config.base_count, config.n_assets - 1))
    )


def sample_exponential(config: SamplerConfig) -> FloatArray:
    rng = generator(config.seed)
    return exponential_weights(
        open_uniforms(rng, (config.base_count, config.n_assets))
    )


def apply_ev_bias(base_uniforms: FloatArray, bias_depth: int) -> FloatArray:
    """Edge-vertex biased portfolios from hypercube rows.

    For each row ``U`` and each ``p = 0..bias_depth`` emits
    ``U**(2**p) / sum(U**(2**p))``. Rows are renormalized after every squaring
    so the largest coordinate never underflows. Output rows are ordered by base
    row first, then by ``p``, so the candidates of a shorter draw are a prefix
    of those of a longer one.
    """
    base_uniforms = np.atleast_2d(np.asarray(base_uniforms, dtype=float))
    if not 0 <= bias_depth <= MAX_BIAS_DEPTH:
        raise McPopeUserError(
            f"bias_depth must lie in [0, {MAX_BIAS_DEPTH}], got {bias_depth}"
        )
    if np.any(base_uniforms <= 0.0) or np.any(base_uniforms >= 1.0):
        raise McPopeUserError("EV bias needs uniforms strictly inside (0, 1)")

    count, n_assets = base_uniforms.shape
    levels = np.empty((count, bias_depth + 1, n_assets))
    weights = ratio_weights(base_uniforms)
    levels[:, 0] = weights
    for depth in range(1, bias_depth + 1):
        weights = weights * weights
        weights /= weights.sum(axis=1, keepdims=True)
        levels[:, depth] = weights
    return levels.reshape(count * (bias_depth + 1), n_assets)


def sample_edge_vertex(config: SamplerConfig, even_pool: bool = False) -> FloatArray:
    """The EV candidate pool, optionally merged with an equal-size even pool.

    The even pool (normalized exponentials) comes from an independent stream
    and is appended after the EV candidates.
    """
    ev_seed, even_seed = np.random.SeedSequence(config.seed).spawn(2)
    base = open_uniforms(
        np.random.default_rng(ev_seed), (config.base_count, config.n_assets)
    )
    candidates = apply_ev_bias(base, config.bias_depth)
    if even_pool:
        even = exponential_weights(
            open_uniforms(
                np.random.default_rng(even_seed), (len(candidates), config.n_assets)
            )
        )
        candidates = np.vstack([candidates, even])
    return candidates


SAMPLERS = {
    "uniform-ratio": sample_uniform_ratio,
    "gap": sample_gap,
    "order-statistics": sample_order_statistics,
    "exponential": sample_exponential,
    "ev": sample_edge_vertex,
}


def filter_constraints(
    candidates: FloatArray, constraints: ConstraintSet
) -> ConstraintFilterResult:
    """Rejects every candidate that violates a bound, inequality or predicate.

    Raises `InfeasibleError` when nothing in the batch survives, so callers can
    enlarge the batch or report infeasibility.
    """
    candidates = np.atleast_2d(candidates)
    submitted = len(candidates)
    if constraints.is_empty():
        if submitted == 0:
            raise InfeasibleError("Empty candidate batch", submitted=0)
        return ConstraintFilterResult(candidates, 1.0)

    accepted = candidates[constraints.mask(candidates)]
    if len(accepted) == 0:
        raise InfeasibleError(
            f"No feasible candidates among {submitted}; the constraints are "
            "infeasible or too tight for this sample size",
            submitted=submitted,
        )

    rate = len(accepted) / submitted
    logger.debug("Accepted %d of %d candidates (%.4f)", len(accepted), submitted, rate)
    return ConstraintFilterResult(accepted, rate)


def lexicographic_argmin(values: Sequence[float], weights: FloatArray) -> int:
    """Index of the smallest value, ties going to the lexicographically smallest row."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise McPopeProgrammingError("Cannot select from an empty batch")
    best = values.min()
    tied = np.flatnonzero(values == best)
    if len(tied) == 1:
        return int(tied[0])
    rows = np.atleast_2d(weights)[tied]
    order = np.lexsort(rows.T[::-1])
    return int(tied[order[0]])
