"""Independent ground truth for small problems.

`analytic_three_asset` is the piecewise closed-form minimizer for the 3-asset
covariance family; `grid_oracle` enumerates the simplex lattice
``w_i = k_i / m`` and polishes the winner with pairwise mass transfers.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .benchmarks import RU_COVARIANCE, ru_constraints
from .exceptions import InfeasibleError, LatticeTooLargeError, McPopeUserError
from .sampler import ConstraintSet, lexicographic_argmin
from .scenarios import CovarianceSpec
from .types import BatchObjective, FloatArray

logger = logging.getLogger(__name__)

LOWER_BOUNDARY = -0.383782
UPPER_BOUNDARY = 0.425

MAX_GRID_ASSETS = 8
DEFAULT_LATTICE_CEILING = 2_000_000
MAX_POLISH_MOVES = 10_000


class OracleResult(NamedTuple):
    weights: FloatArray
    value: float


def analytic_three_asset(r: float) -> FloatArray:
    """Exact minimum-variance weights for ``three_asset_covariance(r)``."""
    if not -1.0 <= r <= 1.0:
        raise McPopeUserError(f"r must lie in [-1, 1], got {r}")

    if r < LOWER_BOUNDARY:
        w1 = (225.0 - 120.0 * r) / (289.0 - 240.0 * r)
        w2 = 1.0 - w1
    elif r <= UPPER_BOUNDARY:
        denominator = 576.0 * r * r + 240.0 * r - 1001.0
        w1 = 5.0 * (48.0 * r - 125.0) / denominator
        w2 = 9.0 * (40.0 * r - 17.0) / denominator
    else:
        w1 = 75.0 / 114.0
        w2 = 0.0
    return np.array([w1, w2, 1.0 - w1 - w2])


@dataclass(frozen=True)
class GridSpec:
    n_assets: int
    resolution: int
    polish_steps: int = 0
    ceiling: int = DEFAULT_LATTICE_CEILING

    def __post_init__(self):
        if not 1 <= self.n_assets <= MAX_GRID_ASSETS:
            raise McPopeUserError(
                f"The grid oracle handles 1 to {MAX_GRID_ASSETS} assets, "
                f"got {self.n_assets}"
            )
        if self.resolution < 1:
            raise McPopeUserError(f"resolution must be positive, got {self.resolution}")
        if self.polish_steps < 0:
            raise McPopeUserError("polish_steps must be nonnegative")

    @property
    def lattice_size(self) -> int:
        return math.comb(self.resolution + self.n_assets - 1, self.n_assets - 1)

    @classmethod
    def finest(
        cls,
        n_assets: int,
        polish_steps: int = 40,
        ceiling: int = DEFAULT_LATTICE_CEILING,
        max_resolution: int = 1000,
    ) -> GridSpec:
        """The finest lattice whose size stays under ``ceiling``."""
        resolution = max_resolution
        while (
            resolution > 1
            and math.comb(resolution + n_assets - 1, n_assets - 1) > ceiling
        ):
            resolution = int(resolution * 0.9)
        return cls(n_assets, resolution, polish_steps, ceiling)


def simplex_lattice(grid: GridSpec) -> FloatArray:
    """Every point ``k / m`` of the simplex lattice, via stars and bars."""
    if grid.lattice_size > grid.ceiling:
        raise LatticeTooLargeError(
            f"lattice too large: {grid.lattice_size} points exceeds {grid.ceiling}"
        )

    n, m = grid.n_assets, grid.resolution
    if n == 1:
        return np.ones((1, 1))
    slots = m + n - 1
    bars = np.fromiter(
        itertools.chain.from_iterable(itertools.combinations(range(slots), n - 1)),
        dtype=np.int64,
        count=grid.lattice_size * (n - 1),
    ).reshape(grid.lattice_size, n - 1)
    edges = np.hstack(
        [
            np.full((len(bars), 1), -1, dtype=np.int64),
            bars,
            np.full((len(bars), 1), slots, dtype=np.int64),
        ]
    )
    return (np.diff(edges, axis=1) - 1) / m


def quadratic_objective(
    covariance: CovarianceSpec,
    lam: float = 0.0,
    expected_returns: Optional[FloatArray] = None,
) -> BatchObjective:
    """Batch ``w . C . w - lam * R . w``."""
    matrix = covariance.matrix
    returns = None
    if expected_returns is not None:
        returns = np.asarray(expected_returns, dtype=float)

    def objective(batch: FloatArray) -> FloatArray:
        batch = np.atleast_2d(batch)
        values = np.einsum("ij,jk,ik->i", batch, matrix, batch)
        if returns is not None and lam:
            values = values - lam * (batch @ returns)
        return values

    return objective


def level_set_directions(n: int, constraints: ConstraintSet) -> FloatArray:
    """Pairwise transfers projected so that each linear constraint keeps its level.

    When the optimum sits on a tilted constraint plane no single pairwise
    transfer can slide along it; these directions can. Each is scaled so its
    largest coordinate change is one.
    """
    directions = []
    for coefficients, _ in constraints.linear_inequalities:
        normal = coefficients - coefficients.mean()
        norm = float(normal @ normal)
        if norm == 0.0:
            continue
        for i, j in itertools.combinations(range(n), 2):
            direction = np.zeros(n)
            direction[i], direction[j] = -1.0, 1.0
            direction -= (direction @ normal / norm) * normal
            scale = np.max(np.abs(direction))
            if scale > 1e-12:
                directions.extend([direction / scale, -direction / scale])
    return np.array(directions).reshape(-1, n)


def _polish(
    objective: BatchObjective,
    weights: FloatArray,
    value: float,
    constraints: ConstraintSet,
    resolution: int,
    polish_steps: int,
) -> OracleResult:
    n = len(weights)
    pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
    if not pairs:
        return OracleResult(weights, value)
    sources = np.array([i for i, _ in pairs])
    targets = np.array([j for _, j in pairs])
    sliding = level_set_directions(n, constraints)

    delta = 1.0 / resolution
    for _ in range(polish_steps):
        delta /= 2.0
        for _ in range(MAX_POLISH_MOVES):
            transfer = np.minimum(delta, weights[sources])
            moves = np.repeat(weights[None, :], len(pairs), axis=0)
            moves[np.arange(len(pairs)), sources] -= transfer
            moves[np.arange(len(pairs)), targets] += transfer
            moves = np.clip(moves, 0.0, None)
            movable = transfer > 0.0
            if len(sliding):
                slides = weights + delta * sliding
                moves = np.vstack([moves, slides])
                movable = np.concatenate([movable, np.all(slides >= 0.0, axis=1)])

            values = objective(moves)
            usable = movable & (values < value)
            if not constraints.is_empty():
                usable &= constraints.mask(moves)
            if not usable.any():
                break
            values = np.where(usable, values, np.inf)
            best = lexicographic_argmin(values, moves)
            weights, value = moves[best], float(values[best])

    return OracleResult(weights, value)


def grid_oracle(
    objective: BatchObjective,
    grid: GridSpec,
    constraints: Optional[ConstraintSet] = None,
) -> OracleResult:
    """Exhaustive lattice minimum followed by deterministic pairwise polishing.

    Each polishing round halves the transfer size ``delta`` (starting from half
    the lattice spacing) and keeps taking the best improving feasible
    transfer between two coordinates until none remains. Linear constraints
    add transfers that slide along their level sets.
    """
    constraints = constraints if constraints is not None else ConstraintSet()
    lattice = simplex_lattice(grid)
    if not constraints.is_empty():
        lattice = lattice[constraints.mask(lattice)]
    if len(lattice) == 0:
        raise InfeasibleError("no feasible lattice point", submitted=grid.lattice_size)

    values = objective(lattice)
    best = lexicographic_argmin(values, lattice)
    logger.debug(
        "Lattice winner %s (%.10g) from %d points",
        lattice[best],
        values[best],
        len(lattice),
    )
    return _polish(
        objective,
        lattice[best].copy(),
        float(values[best]),
        constraints,
        grid.resolution,
        grid.polish_steps,
    )


def ru_min_variance_reference(
    resolution: int = 1000, polish_steps: int = 40
) -> OracleResult:
    """Minimum-variance portfolio of the three-asset CVaR test problem.

    Solved under the problem's expected-return floor, ``RU_RETURNS . w >= 0.011``.
    """
    return grid_oracle(
        quadratic_objective(RU_COVARIANCE),
        GridSpec(RU_COVARIANCE.N, resolution, polish_steps),
        ru_constraints(),
    )
