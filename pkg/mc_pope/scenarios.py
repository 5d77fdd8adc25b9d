"""Return scenario matrices: simulation, CSV ingestion and covariance checks.

Moments are population moments (divisor ``J``) so that ``w . C_realized . w``
equals the population variance of the sampled portfolio returns exactly.

The Student-t simulator is scaled so each marginal *standard deviation* equals
the supplied ``sigma_i``: a standard t with ``nu`` degrees of freedom has
variance ``nu / (nu - 2)``, so it is multiplied by ``sigma_i * sqrt((nu - 2) / nu)``.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np

from .constants import PSD_TOLERANCE, SYMMETRY_TOLERANCE
from .exceptions import (
    DimensionMismatchError,
    McPopeUserError,
    NotPositiveSemiDefiniteError,
    ScenarioFormatError,
)
from .types import FloatArray
from .utils import asset_labels, write_matrix_csv

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


@dataclass(frozen=True)
class ScenarioMatrix:
    returns: FloatArray

    def __post_init__(self):
        returns = np.array(self.returns, dtype=float, ndmin=2)
        if returns.ndim != 2:
            raise ScenarioFormatError("Scenarios must be a J x N matrix")
        if returns.shape[0] < 2:
            raise McPopeUserError(f"J >= 2 required, got {returns.shape[0]}")
        if returns.shape[1] < 1:
            raise McPopeUserError("Scenarios need at least one asset column")
        if not np.all(np.isfinite(returns)):
            raise ScenarioFormatError("Scenario entries must all be finite")
        returns.setflags(write=False)
        object.__setattr__(self, "returns", returns)

    @property
    def J(self) -> int:
        return self.returns.shape[0]

    @property
    def N(self) -> int:
        return self.returns.shape[1]

    def __str__(self):
        return f"Scenarios ({self.J} x {self.N})"


@dataclass(frozen=True)
class CovarianceSpec:
    matrix: FloatArray

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=float, ndmin=2)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise DimensionMismatchError(
                f"Covariance must be square, got shape {matrix.shape}"
            )
        if np.max(np.abs(matrix - matrix.T)) > SYMMETRY_TOLERANCE:
            raise McPopeUserError("Covariance must be symmetric")
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)
        cholesky_factor(self)

    @property
    def N(self) -> int:
        return self.matrix.shape[0]


class DistributionKind(Enum):
    gaussian = "gaussian"
    student_t = "student_t"
    empirical = "empirical"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class DistributionSpec:
    kind: DistributionKind
    mean: Optional[FloatArray] = None
    covariance: Optional[CovarianceSpec] = None
    sigma: Optional[FloatArray] = None
    rho: Optional[FloatArray] = None
    nu: Optional[float] = None
    path: Optional[Path] = None
    antithetic: bool = False

    def __post_init__(self):
        if self.kind == DistributionKind.empirical:
            if self.path is None:
                raise McPopeUserError("An empirical distribution needs a 'path'")
            return

        if self.mean is None:
            raise McPopeUserError(f"A {self.kind} distribution needs a 'mean'")
        if self.kind == DistributionKind.gaussian:
            if self.covariance is None and (self.sigma is None or self.rho is None):
                raise McPopeUserError(
                    "A gaussian distribution needs 'covariance' or 'sigma' and 'rho'"
                )
        elif self.kind == DistributionKind.student_t:
            if self.sigma is None or self.rho is None:
                raise McPopeUserError(
                    "A student_t distribution needs 'sigma' and 'rho'"
                )
            if self.nu is None or self.nu <= 2:
                raise McPopeUserError("nu must exceed 2")

    def resolved_covariance(self) -> CovarianceSpec:
        if self.covariance is not None:
            return self.covariance
        sigma = np.asarray(self.sigma, dtype=float)
        rho = np.asarray(self.rho, dtype=float)
        return CovarianceSpec(rho * np.outer(sigma, sigma))

    @classmethod
    def from_dict(
        cls, data: Dict[str, Any], base_path: Optional[Path] = None
    ) -> DistributionSpec:
        """Parses a distribution document.

        Matrices may be given inline or as CSV files through ``covariance_path``
        and ``correlation_path``; relative paths resolve against ``base_path``.
        """
        def resolve(value: Any) -> Path:
            path = Path(value)
            if base_path is not None and not path.is_absolute():
                path = base_path / path
            return path

        def read_matrix(value: Any) -> FloatArray:
            return load_scenarios_array(resolve(value))

        try:
            kind = DistributionKind(data.get("kind", "gaussian"))
        except ValueError:
            raise McPopeUserError(
                f"Unknown distribution kind {data.get('kind')!r}; expected one of "
                + ", ".join(str(kind) for kind in DistributionKind)
            )

        covariance = data.get("covariance")
        if "covariance_path" in data:
            covariance = read_matrix(data["covariance_path"])
        rho = data.get("rho")
        if "correlation_path" in data:
            rho = read_matrix(data["correlation_path"])

        def vector(value: Any) -> Optional[FloatArray]:
            return None if value is None else np.asarray(value, dtype=float)

        return cls(
            kind=kind,
            mean=vector(data.get("mean")),
            covariance=None if covariance is None else CovarianceSpec(covariance),
            sigma=vector(data.get("sigma")),
            rho=vector(rho),
            nu=None if data.get("nu") is None else float(data["nu"]),
            path=None if data.get("path") is None else resolve(data["path"]),
            antithetic=bool(data.get("antithetic", False)),
        )


def cholesky_factor(spec: CovarianceSpec) -> FloatArray:
    """Lower-triangular ``L`` with ``L . L^T = C`` for a PSD covariance.

    Falls back to an explicit column sweep when numpy rejects a singular
    matrix; pivots in ``[-PSD_TOLERANCE, 0]`` are clamped to zero.
    """
    matrix = spec.matrix
    try:
        return np.linalg.cholesky(matrix)
    except np.linalg.LinAlgError:
        pass

    size = spec.N
    factor = np.zeros((size, size))
    for column in range(size):
        done = factor[column, :column]
        pivot = matrix[column, column] - done @ done
        if pivot < -PSD_TOLERANCE:
            raise NotPositiveSemiDefiniteError(
                f"Covariance is not positive semi-definite (pivot {pivot:.3g} "
                f"at column {column})"
            )
        diagonal = np.sqrt(max(pivot, 0.0))
        factor[column, column] = diagonal
        residual = (
            matrix[column + 1 :, column]
            - factor[column + 1 :, :column] @ factor[column, :column]
        )
        if diagonal > 0.0:
            factor[column + 1 :, column] = residual / diagonal
        elif residual.size and np.abs(residual).max() > PSD_TOLERANCE:
            raise NotPositiveSemiDefiniteError(
                f"Covariance is not positive semi-definite (zero pivot with "
                f"coupled entries at column {column})"
            )
    return factor


def _check_count(J: int, antithetic: bool) -> None:
    if J < 2:
        raise McPopeUserError(f"J >= 2 required, got {J}")
    if antithetic and J % 2:
        raise McPopeUserError(f"Antithetic sampling needs an even J, got {J}")


def _normals(rng: np.random.Generator, J: int, N: int, antithetic: bool) -> FloatArray:
    if not antithetic:
        return rng.standard_normal((J, N))
    half = rng.standard_normal((J // 2, N))
    return np.vstack([half, -half])


def simulate_gaussian(
    mean: FloatArray,
    cov: CovarianceSpec,
    J: int,
    seed: int,
    antithetic: bool = False,
) -> ScenarioMatrix:
    _check_count(J, antithetic)
    mean = np.asarray(mean, dtype=float)
    if mean.shape != (cov.N,):
        raise DimensionMismatchError(
            f"Mean has shape {mean.shape}; covariance is {cov.N} x {cov.N}"
        )

    factor = cholesky_factor(cov)
    rng = np.random.default_rng(seed)
    normals = _normals(rng, J, cov.N, antithetic)
    return ScenarioMatrix(mean + normals @ factor.T)


def simulate_student_t(
    mu: FloatArray,
    sigma: FloatArray,
    rho: FloatArray,
    nu: float,
    J: int,
    seed: int,
    antithetic: bool = False,
) -> ScenarioMatrix:
    """Multivariate t rows with one chi-square mixing draw per row."""
    if nu <= 2:
        raise McPopeUserError("nu must exceed 2")
    _check_count(J, antithetic)
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    correlation = CovarianceSpec(rho)
    if mu.shape != (correlation.N,) or sigma.shape != (correlation.N,):
        raise DimensionMismatchError("mu, sigma and rho must agree on the asset count")
    if np.any(np.abs(np.diag(correlation.matrix) - 1.0) > SYMMETRY_TOLERANCE):
        raise McPopeUserError("rho must have a unit diagonal")

    factor = cholesky_factor(correlation)
    rng = np.random.default_rng(seed)
    normals = _normals(rng, J, correlation.N, antithetic)
    if antithetic:
        half = rng.chisquare(nu, J // 2)
        chi_square = np.concatenate([half, half])
    else:
        chi_square = rng.chisquare(nu, J)

    scale = sigma * np.sqrt((nu - 2.0) / nu)
    mixed = (normals @ factor.T) * np.sqrt(nu / chi_square)[:, None]
    return ScenarioMatrix(mu + mixed * scale)


def simulate(spec: DistributionSpec, J: int, seed: int) -> ScenarioMatrix:
    if spec.kind == DistributionKind.empirical:
        return load_scenarios(spec.path)
    if spec.kind == DistributionKind.student_t:
        return simulate_student_t(
            spec.mean, spec.sigma, spec.rho, spec.nu, J, seed, spec.antithetic
        )
    return simulate_gaussian(
        spec.mean, spec.resolved_covariance(), J, seed, spec.antithetic
    )


def random_covariance(n: int, seed: int) -> CovarianceSpec:
    """Squares up a random upper-triangular factor with entries on (-1, 1)."""
    rng = np.random.default_rng(seed)
    upper = np.triu(rng.uniform(-1.0, 1.0, size=(n, n)))
    product = upper.T @ upper
    return CovarianceSpec((product + product.T) / 2.0)


def _parse_cell(value: str, row: int, column: int) -> float:
    try:
        return float(value)
    except ValueError:
        raise ScenarioFormatError(
            f"non-numeric cell (row {row}, col {column}): {value!r}"
        )


def _is_number(value: str) -> bool:
    try:
        float(value)
    except ValueError:
        return False
    return True


def load_scenarios_array(path: PathLike) -> FloatArray:
    """Reads a rectangular numeric CSV, skipping a leading row of labels.

    The first row is a header only when none of its cells is a number.
    """
    with open(path, "r", newline="") as inf:
        rows = [row for row in csv.reader(inf) if row]

    if not rows:
        raise ScenarioFormatError(f"empty file: {path}")

    if not any(_is_number(cell) for cell in rows[0]):
        rows = rows[1:]
        if not rows:
            raise ScenarioFormatError(f"empty file: {path}")

    width = len(rows[0])
    for index, row in enumerate(rows, start=1):
        if len(row) != width:
            raise ScenarioFormatError(
                f"ragged rows in {path}: row {index} has {len(row)} columns, "
                f"expected {width}"
            )

    return np.array(
        [
            [
                _parse_cell(cell, row_index, column_index)
                for column_index, cell in enumerate(row, start=1)
            ]
            for row_index, row in enumerate(rows, start=1)
        ],
        dtype=float,
    )


def load_scenarios(path: PathLike) -> ScenarioMatrix:
    scenarios = ScenarioMatrix(load_scenarios_array(path))
    logger.info("Loaded %s from %s", scenarios, path)
    return scenarios


def save_scenarios(
    scenarios: ScenarioMatrix, path: PathLike, header: bool = False
) -> None:
    with open(path, "w", newline="") as outf:
        write_matrix_csv(
            scenarios.returns, outf, asset_labels(scenarios.N) if header else None
        )


def realized_covariance(scenarios: ScenarioMatrix) -> CovarianceSpec:
    """Population covariance (divisor ``J``) of the scenario rows."""
    centred = scenarios.returns - scenarios.returns.mean(axis=0)
    matrix = centred.T @ centred / scenarios.J
    return CovarianceSpec((matrix + matrix.T) / 2.0)


def covariance_discrepancy(input: CovarianceSpec, realized: CovarianceSpec) -> float:
    """Max-abs elementwise gap between two covariances."""
    if input.N != realized.N:
        raise DimensionMismatchError(
            f"Cannot compare {input.N} x {input.N} with {realized.N} x {realized.N}"
        )
    return float(np.max(np.abs(realized.matrix - input.matrix)))
