"""Scenario simulation, covariance checks and CSV ingestion."""

import numpy as np
import pytest
from scipy import stats

from mc_pope.benchmarks import (
    ADMN_CORRELATION,
    ADMN_MU,
    ADMN_SIGMA,
    three_asset_covariance,
)
from mc_pope.exceptions import (
    DimensionMismatchError,
    McPopeUserError,
    NotPositiveSemiDefiniteError,
    ScenarioFormatError,
)
from mc_pope.scenarios import (
    CovarianceSpec,
    DistributionKind,
    DistributionSpec,
    ScenarioMatrix,
    cholesky_factor,
    covariance_discrepancy,
    load_scenarios,
    random_covariance,
    realized_covariance,
    save_scenarios,
    simulate,
    simulate_gaussian,
    simulate_student_t,
)


class TestScenarioMatrix:
    """Shape and immutability of scenario matrices."""

    def test_is_read_only(self):
        """Scenarios cannot be modified once built."""
        scenarios = ScenarioMatrix(np.zeros((3, 2)))
        assert (scenarios.J, scenarios.N) == (3, 2)
        with pytest.raises(ValueError):
            scenarios.returns[0, 0] = 1.0

    def test_copies_its_input(self):
        """Later changes to the source array do not leak in."""
        source = np.zeros((2, 2))
        scenarios = ScenarioMatrix(source)
        source[0, 0] = 5.0
        assert scenarios.returns[0, 0] == 0.0

    def test_needs_two_rows(self):
        """A single scenario is not a distribution."""
        with pytest.raises(McPopeUserError):
            ScenarioMatrix(np.zeros((1, 3)))

    def test_rejects_non_finite(self):
        """NaN entries are a format error."""
        with pytest.raises(ScenarioFormatError):
            ScenarioMatrix(np.array([[0.0, np.nan], [1.0, 2.0]]))


class TestCovarianceSpec:
    """Square, symmetric, positive semi-definite."""

    def test_not_square(self):
        """Rectangular matrices are rejected."""
        with pytest.raises(DimensionMismatchError):
            CovarianceSpec(np.zeros((2, 3)))

    def test_not_symmetric(self):
        """Asymmetric matrices are rejected."""
        with pytest.raises(McPopeUserError):
            CovarianceSpec([[1.0, 0.5], [0.4, 1.0]])

    def test_not_positive_semi_definite(self):
        """A negative pivot is reported."""
        with pytest.raises(NotPositiveSemiDefiniteError):
            CovarianceSpec([[1.0, 2.0], [2.0, 1.0]])

    def test_singular_matrix_is_accepted(self):
        """Singular PSD matrices fall back to the clamped sweep."""
        spec = CovarianceSpec([[1.0, 1.0], [1.0, 1.0]])
        factor = cholesky_factor(spec)
        np.testing.assert_allclose(factor @ factor.T, spec.matrix, atol=1e-12)

    def test_zero_matrix_is_accepted(self):
        """The zero matrix is PSD."""
        factor = cholesky_factor(CovarianceSpec(np.zeros((3, 3))))
        np.testing.assert_array_equal(factor, np.zeros((3, 3)))

    def test_factor_reconstructs(self):
        """L . L^T gives the matrix back."""
        spec = three_asset_covariance(0.0)
        factor = cholesky_factor(spec)
        np.testing.assert_allclose(factor @ factor.T, spec.matrix, rtol=1e-12)

    def test_random_covariance(self):
        """Squared random factors are PSD and reproducible."""
        first = random_covariance(6, seed=3)
        second = random_covariance(6, seed=3)
        np.testing.assert_array_equal(first.matrix, second.matrix)
        assert np.linalg.eigvalsh(first.matrix).min() > -1e-12


class TestSimulation:
    """Gaussian and Student-t scenario generators."""

    def test_gaussian_moments(self):
        """Sample mean and covariance approach their inputs."""
        covariance = three_asset_covariance(0.0)
        mean = np.array([1.0, 2.0, 3.0])
        scenarios = simulate_gaussian(mean, covariance, 200_000, seed=1)
        np.testing.assert_allclose(scenarios.returns.mean(axis=0), mean, atol=0.1)
        np.testing.assert_allclose(
            realized_covariance(scenarios).matrix,
            covariance.matrix,
            rtol=0.03,
            atol=2.0,
        )

    def test_gaussian_is_deterministic(self):
        """The same seed gives the same scenarios."""
        covariance = three_asset_covariance(0.5)
        first = simulate_gaussian(np.zeros(3), covariance, 100, seed=9)
        second = simulate_gaussian(np.zeros(3), covariance, 100, seed=9)
        np.testing.assert_array_equal(first.returns, second.returns)

    def test_antithetic_mean_is_exact(self):
        """Mirrored rows cancel, leaving the input mean."""
        mean = np.array([0.5, -0.25, 2.0])
        scenarios = simulate_gaussian(
            mean, three_asset_covariance(0.0), 1000, seed=4, antithetic=True
        )
        np.testing.assert_allclose(scenarios.returns.mean(axis=0), mean, atol=1e-10)

    def test_antithetic_needs_even_count(self):
        """An odd J cannot be mirrored."""
        with pytest.raises(McPopeUserError):
            simulate_gaussian(
                np.zeros(3), three_asset_covariance(0.0), 11, seed=0, antithetic=True
            )

    def test_mean_dimension_mismatch(self):
        """The mean must match the covariance."""
        with pytest.raises(DimensionMismatchError):
            simulate_gaussian(np.zeros(2), three_asset_covariance(0.0), 10, seed=0)

    def test_student_t_scale_and_correlation(self):
        """Marginals have the requested standard deviation and correlation."""
        scenarios = simulate_student_t(
            ADMN_MU, ADMN_SIGMA, ADMN_CORRELATION, 9.0, 200_000, seed=2
        )
        returns = scenarios.returns
        np.testing.assert_allclose(returns.std(axis=0), ADMN_SIGMA, rtol=0.03)
        np.testing.assert_allclose(
            np.corrcoef(returns, rowvar=False), ADMN_CORRELATION, atol=0.02
        )

    def test_student_t_marginal_variance(self):
        """Each marginal variance is within five standard errors of sigma**2."""
        nu, J = 9.0, 100_000
        returns = simulate_student_t(
            ADMN_MU, ADMN_SIGMA, ADMN_CORRELATION, nu, J, seed=17
        ).returns
        # Var(s^2) = sigma^4 (2 + excess kurtosis) / J, excess kurtosis 6 / (nu - 4).
        standard_error = ADMN_SIGMA**2 * np.sqrt((2.0 + 6.0 / (nu - 4.0)) / J)
        deviation = np.abs(returns.var(axis=0) - ADMN_SIGMA**2)
        assert np.all(deviation <= 5.0 * standard_error)

    def test_student_t_approaches_gaussian(self):
        """With a million degrees of freedom the marginals are normal."""
        covariance = CovarianceSpec(np.outer(ADMN_SIGMA, ADMN_SIGMA) * ADMN_CORRELATION)
        t_returns = simulate_student_t(
            ADMN_MU, ADMN_SIGMA, ADMN_CORRELATION, 1e6, 10_000, seed=5
        ).returns
        normal_returns = simulate_gaussian(ADMN_MU, covariance, 10_000, seed=6).returns
        pvalues = [
            stats.ks_2samp(t_returns[:, column], normal_returns[:, column]).pvalue
            for column in range(3)
        ]
        assert min(pvalues) * 3 > 0.01

    def test_student_t_needs_finite_variance(self):
        """nu must exceed 2."""
        with pytest.raises(McPopeUserError):
            simulate_student_t(ADMN_MU, ADMN_SIGMA, ADMN_CORRELATION, 2.0, 10, seed=0)

    def test_student_t_rejects_non_unit_diagonal(self):
        """rho must be a correlation matrix."""
        with pytest.raises(McPopeUserError):
            simulate_student_t(
                ADMN_MU, ADMN_SIGMA, ADMN_CORRELATION * 2.0, 9.0, 10, seed=0
            )

    def test_dispatch_by_kind(self):
        """simulate() routes a distribution document to its generator."""
        spec = DistributionSpec.from_dict(
            {
                "kind": "student_t",
                "mean": ADMN_MU.tolist(),
                "sigma": ADMN_SIGMA.tolist(),
                "rho": ADMN_CORRELATION.tolist(),
                "nu": 9,
            }
        )
        assert spec.kind == DistributionKind.student_t
        expected = simulate_student_t(ADMN_MU, ADMN_SIGMA, ADMN_CORRELATION, 9.0, 50, 3)
        actual = simulate(spec, 50, seed=3)
        np.testing.assert_array_equal(actual.returns, expected.returns)


class TestDistributionSpec:
    """Parsing distribution documents."""

    def test_gaussian_from_sigma_and_rho(self):
        """A covariance is assembled from volatilities and correlations."""
        spec = DistributionSpec.from_dict(
            {"mean": [0.0, 0.0], "sigma": [1.0, 2.0], "rho": [[1.0, 0.5], [0.5, 1.0]]}
        )
        np.testing.assert_allclose(
            spec.resolved_covariance().matrix, [[1.0, 1.0], [1.0, 4.0]]
        )

    def test_covariance_path_is_relative_to_document(self, tmp_path):
        """Matrix files resolve against the document's directory."""
        (tmp_path / "cov.csv").write_text("1,0\n0,1\n")
        spec = DistributionSpec.from_dict(
            {"mean": [0.0, 0.0], "covariance_path": "cov.csv"}, tmp_path
        )
        np.testing.assert_array_equal(spec.resolved_covariance().matrix, np.eye(2))

    def test_student_t_needs_nu(self):
        """Missing parameters are reported."""
        with pytest.raises(McPopeUserError):
            DistributionSpec.from_dict(
                {"kind": "student_t", "mean": [0.0], "sigma": [1.0], "rho": [[1.0]]}
            )

    def test_unknown_kind(self):
        """Unknown kinds list the valid ones."""
        with pytest.raises(McPopeUserError, match="gaussian"):
            DistributionSpec.from_dict({"kind": "cauchy", "mean": [0.0]})

    def test_empirical(self, tmp_path):
        """Empirical distributions replay a scenario file."""
        (tmp_path / "s.csv").write_text("0.1,0.2\n0.3,0.4\n0.5,0.6\n")
        document = {"kind": "empirical", "path": "s.csv"}
        spec = DistributionSpec.from_dict(document, tmp_path)
        assert simulate(spec, 10, seed=0).J == 3


class TestScenarioFiles:
    """CSV reading and writing."""

    def test_save_and_load(self, tmp_path):
        """Seventeen significant digits reproduce every value."""
        scenarios = simulate_gaussian(
            np.zeros(3), three_asset_covariance(-0.5), 25, seed=12
        )
        path = tmp_path / "scenarios.csv"
        save_scenarios(scenarios, path, header=True)
        assert path.read_text().splitlines()[0] == "asset_1,asset_2,asset_3"
        np.testing.assert_array_equal(load_scenarios(path).returns, scenarios.returns)

    def test_line_endings(self, tmp_path):
        """Rows end with LF only."""
        path = tmp_path / "scenarios.csv"
        save_scenarios(ScenarioMatrix(np.eye(2)), path)
        assert b"\r" not in path.read_bytes()

    def test_empty_file(self, tmp_path):
        """An empty file is reported as such."""
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(ScenarioFormatError, match="empty file"):
            load_scenarios(path)

    def test_ragged_rows(self, tmp_path):
        """Rows must all have the same width."""
        path = tmp_path / "ragged.csv"
        path.write_text("1,2\n3\n")
        with pytest.raises(ScenarioFormatError, match="ragged rows"):
            load_scenarios(path)

    def test_non_numeric_cell(self, tmp_path):
        """The offending cell is located by row and column."""
        path = tmp_path / "bad.csv"
        path.write_text("1,2\nabc,4\n")
        with pytest.raises(ScenarioFormatError, match=r"row 2, col 1"):
            load_scenarios(path)

    def test_bad_cell_in_first_row(self, tmp_path):
        """A partly numeric first row is data, not a header."""
        path = tmp_path / "bad.csv"
        path.write_text("1,abc\n3,4\n5,6\n")
        with pytest.raises(ScenarioFormatError, match=r"row 1, col 2"):
            load_scenarios(path)

    def test_header_row_is_skipped(self, tmp_path):
        """A first row without any number is treated as labels."""
        path = tmp_path / "labelled.csv"
        path.write_text("a,b\n3,4\n5,6\n")
        np.testing.assert_array_equal(load_scenarios(path).returns, [[3, 4], [5, 6]])


class TestRealizedCovariance:
    """Population moments of the scenario matrix."""

    def test_divisor_is_j(self):
        """Variance of (1, 3) is 1, not 2."""
        realized = realized_covariance(ScenarioMatrix(np.array([[1.0], [3.0]])))
        assert realized.matrix[0, 0] == pytest.approx(1.0)

    def test_matches_portfolio_variance(self):
        """w . C_realized . w equals the variance of the sampled portfolio."""
        scenarios = simulate_gaussian(
            np.zeros(3), three_asset_covariance(0.0), 500, seed=5
        )
        weights = np.array([0.2, 0.3, 0.5])
        realized = realized_covariance(scenarios).matrix
        assert weights @ realized @ weights == pytest.approx(
            (scenarios.returns @ weights).var(), rel=1e-10
        )

    def test_discrepancy(self):
        """Δ is the largest absolute elementwise gap."""
        first = CovarianceSpec([[1.0, 0.0], [0.0, 1.0]])
        second = CovarianceSpec([[1.5, 0.1], [0.1, 0.8]])
        assert covariance_discrepancy(first, second) == pytest.approx(0.5)

    def test_discrepancy_shrinks_with_more_scenarios(self):
        """The median Δ over twenty seeds falls with every decade of J."""
        covariance = three_asset_covariance(0.0)
        medians = [
            np.median(
                [
                    covariance_discrepancy(
                        covariance,
                        realized_covariance(
                            simulate_gaussian(np.zeros(3), covariance, J, seed=seed)
                        ),
                    )
                    for seed in range(20)
                ]
            )
            for J in (100, 1000, 10_000)
        ]
        assert medians[0] > medians[1] > medians[2]
