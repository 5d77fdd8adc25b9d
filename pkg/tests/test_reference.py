"""Closed-form and lattice ground truth."""

import numpy as np
import pytest

from mc_pope.benchmarks import (
    CONSTRAINED_OBJECTIVE,
    CONSTRAINED_R,
    RU_COVARIANCE,
    RU_MIN_VARIANCE,
    RU_MIN_VARIANCE_WEIGHTS,
    RU_RETURNS,
    RU_TARGET_RETURN,
    THREE_ASSET_WEIGHTS,
    constrained_three_asset,
    three_asset_covariance,
    three_asset_matrix,
)
from mc_pope.exceptions import (
    InfeasibleError,
    LatticeTooLargeError,
    McPopeUserError,
)
from mc_pope.reference import (
    LOWER_BOUNDARY,
    UPPER_BOUNDARY,
    GridSpec,
    analytic_three_asset,
    grid_oracle,
    level_set_directions,
    quadratic_objective,
    ru_min_variance_reference,
    simplex_lattice,
)
from mc_pope.sampler import ConstraintSet, SamplerConfig, sample_exponential
from mc_pope.scenarios import CovarianceSpec


class TestAnalyticThreeAsset:
    """Piecewise closed-form minimum-variance weights."""

    @pytest.mark.parametrize("r", sorted(THREE_ASSET_WEIGHTS))
    def test_published_weights(self, r):
        """Each region reproduces its published weights."""
        np.testing.assert_allclose(
            analytic_three_asset(r), THREE_ASSET_WEIGHTS[r], atol=5e-6
        )

    @pytest.mark.parametrize("boundary", [LOWER_BOUNDARY, UPPER_BOUNDARY])
    def test_continuous_across_boundaries(self, boundary):
        """Neighbouring branches meet at the region boundaries."""
        below = analytic_three_asset(boundary - 1e-9)
        above = analytic_three_asset(boundary + 1e-9)
        assert np.max(np.abs(below - above)) <= 1e-4

    @pytest.mark.parametrize("r", np.linspace(-1.0, 1.0, 21))
    def test_no_random_portfolio_does_better(self, r):
        """The closed form beats a thousand random portfolios."""
        matrix = three_asset_matrix(r)
        weights = analytic_three_asset(r)
        exact = weights @ matrix @ weights
        random = sample_exponential(SamplerConfig(3, 1000, seed=round(10 * r) + 10))
        variances = np.einsum("ij,jk,ik->i", random, matrix, random)
        assert exact <= variances.min() + 1e-9

    def test_rejects_invalid_correlation(self):
        """r must lie in [-1, 1]."""
        with pytest.raises(McPopeUserError):
            analytic_three_asset(1.5)


class TestLattice:
    """Simplex lattice enumeration."""

    def test_points(self):
        """Every point k / m with nonnegative integers summing to m."""
        lattice = simplex_lattice(GridSpec(3, 2))
        expected = {
            (0.0, 0.0, 1.0),
            (0.0, 0.5, 0.5),
            (0.0, 1.0, 0.0),
            (0.5, 0.0, 0.5),
            (0.5, 0.5, 0.0),
            (1.0, 0.0, 0.0),
        }
        assert {tuple(point) for point in lattice} == expected

    def test_size(self):
        """The lattice holds C(m + N - 1, N - 1) points."""
        grid = GridSpec(4, 10)
        lattice = simplex_lattice(grid)
        assert len(lattice) == grid.lattice_size == 286
        np.testing.assert_allclose(lattice.sum(axis=1), 1.0)

    def test_ceiling(self):
        """Oversized lattices are refused."""
        with pytest.raises(LatticeTooLargeError, match="lattice too large"):
            simplex_lattice(GridSpec(8, 1000))

    def test_finest_stays_under_ceiling(self):
        """The finest admissible resolution respects the ceiling."""
        grid = GridSpec.finest(6, ceiling=100_000)
        assert grid.lattice_size <= 100_000
        assert grid.resolution > 1

    def test_asset_limit(self):
        """More than eight assets are out of reach."""
        with pytest.raises(McPopeUserError):
            GridSpec(9, 10)


class TestGridOracle:
    """Exhaustive lattice search with pairwise polishing."""

    def test_interior_optimum(self):
        """w . w is minimized by the equal-weight portfolio."""
        objective = quadratic_objective(CovarianceSpec(np.eye(3)))
        result = grid_oracle(objective, GridSpec(3, 300))
        np.testing.assert_allclose(result.weights, [1 / 3] * 3, atol=1 / 300)

    def test_matches_closed_form(self):
        """Polishing recovers the analytic optimum."""
        result = grid_oracle(
            quadratic_objective(three_asset_covariance(0.0)), GridSpec(3, 1000, 40)
        )
        np.testing.assert_allclose(result.weights, analytic_three_asset(0.0), atol=5e-4)

    def test_constrained_problem(self):
        """The constrained optimum matches its published objective."""
        result = grid_oracle(
            quadratic_objective(three_asset_covariance(CONSTRAINED_R)),
            GridSpec(3, 1000, 40),
            constrained_three_asset(),
        )
        assert result.value == pytest.approx(CONSTRAINED_OBJECTIVE, rel=1e-3)
        w1, w2, w3 = result.weights
        assert w1 >= 1 / 3 - 1e-12
        assert w2 + 1.1 * w3 >= 0.5 - 1e-12

    def test_level_set_directions(self):
        """Sliding moves keep both the budget and the constraint level."""
        floor = ConstraintSet(linear_inequalities=[(RU_RETURNS, RU_TARGET_RETURN)])
        directions = level_set_directions(3, floor)
        assert len(directions) == 6
        np.testing.assert_allclose(directions.sum(axis=1), 0.0, atol=1e-15)
        np.testing.assert_allclose(directions @ RU_RETURNS, 0.0, atol=1e-15)
        np.testing.assert_allclose(np.abs(directions).max(axis=1), 1.0)

    def test_no_level_set_directions_without_linear_constraints(self):
        """Bounds alone add no sliding moves."""
        constraints = ConstraintSet(lower_bounds=np.zeros(3))
        assert level_set_directions(3, constraints).shape == (0, 3)

    def test_nested_lattices_improve(self):
        """Refining the lattice never makes the optimum worse."""
        objective = quadratic_objective(three_asset_covariance(-0.2))
        values = [grid_oracle(objective, GridSpec(3, m)).value for m in (25, 50, 100)]
        assert values[0] + 1e-12 >= values[1]
        assert values[1] + 1e-12 >= values[2]

    def test_infeasible(self):
        """Constraints no lattice point meets are reported."""
        constraints = ConstraintSet(lower_bounds=np.array([0.6, 0.6, 0.0]))
        with pytest.raises(InfeasibleError, match="no feasible lattice point"):
            grid_oracle(
                quadratic_objective(CovarianceSpec(np.eye(3))),
                GridSpec(3, 10),
                constraints,
            )

    def test_expected_returns_shift_the_optimum(self):
        """A return bonus pulls weight towards the best asset."""
        objective = quadratic_objective(
            CovarianceSpec(np.eye(2)), lam=10.0, expected_returns=np.array([1.0, 0.0])
        )
        result = grid_oracle(objective, GridSpec(2, 100))
        np.testing.assert_allclose(result.weights, [1.0, 0.0])


class TestRuMinimumVariance:
    """Minimum variance of the three-asset CVaR test problem."""

    def test_published_values(self):
        """Weights and variance match the published solution."""
        result = ru_min_variance_reference()
        np.testing.assert_allclose(result.weights, RU_MIN_VARIANCE_WEIGHTS, atol=5e-4)
        assert result.value == pytest.approx(RU_MIN_VARIANCE, abs=1e-6)

    def test_return_floor_binds(self):
        """The optimum earns exactly the target return."""
        result = ru_min_variance_reference()
        assert RU_RETURNS @ result.weights >= RU_TARGET_RETURN
        assert RU_RETURNS @ result.weights == pytest.approx(RU_TARGET_RETURN, abs=1e-8)
        assert RU_RETURNS @ np.array(RU_MIN_VARIANCE_WEIGHTS) == pytest.approx(
            RU_TARGET_RETURN, abs=1e-7
        )

    def test_matches_equality_constrained_solution(self):
        """With the floor active the optimum solves the Lagrange system."""
        ones = np.ones(3)
        system = np.zeros((5, 5))
        system[:3, :3] = 2.0 * RU_COVARIANCE.matrix
        system[:3, 3], system[3, :3] = RU_RETURNS, RU_RETURNS
        system[:3, 4], system[4, :3] = ones, ones
        exact = np.linalg.solve(system, [0.0, 0.0, 0.0, RU_TARGET_RETURN, 1.0])[:3]

        result = ru_min_variance_reference()
        np.testing.assert_allclose(result.weights, exact, atol=1e-4)

    def test_unconstrained_minimum_is_different(self):
        """Without the floor the optimum leans on the low-return asset."""
        result = grid_oracle(quadratic_objective(RU_COVARIANCE), GridSpec(3, 1000, 40))
        assert result.weights[1] > 0.8
        assert result.value < RU_MIN_VARIANCE

    def test_relabeling(self):
        """Permuting the assets permutes the optimal weights."""
        order = [2, 0, 1]
        permuted = CovarianceSpec(RU_COVARIANCE.matrix[np.ix_(order, order)])
        floor = ConstraintSet(
            linear_inequalities=[(RU_RETURNS[order], RU_TARGET_RETURN)]
        )
        grid = GridSpec(3, 1000, 40)
        result = grid_oracle(quadratic_objective(permuted), grid, floor)
        np.testing.assert_allclose(
            result.weights, np.array(RU_MIN_VARIANCE_WEIGHTS)[order], atol=5e-4
        )
