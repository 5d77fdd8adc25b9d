"""Risk functionals of a sampled portfolio-return distribution.

Every `RiskSpec` variant can score a single return vector (`evaluate`, which
raises on undefined values) or a ``J x M`` matrix holding one return column per
candidate portfolio (`measure`, which reports undefined values as NaN so a
search can skip them). Positive VaR/CVaR numbers denote losses; moments use
divisor ``J``.
"""
from __future__ import annotations

import logging
import math
from abc import ABCMeta, abstractmethod
from dataclasses import dataclass
from typing import Dict, List, Optional, Type

import numpy as np
from scipy import special

from .exceptions import DegenerateRiskError, DimensionMismatchError, McPopeUserError
from .scenarios import ScenarioMatrix
from .types import FloatArray

logger = logging.getLogger(__name__)


def _columns(returns: FloatArray) -> FloatArray:
    returns = np.asarray(returns, dtype=float)
    return returns[:, None] if returns.ndim == 1 else returns


def _check_sample(r: FloatArray) -> FloatArray:
    r = np.asarray(r, dtype=float)
    if r.ndim != 1 or r.size < 2:
        raise McPopeUserError("A return sample needs at least two values")
    if not np.all(np.isfinite(r)):
        raise McPopeUserError("Return samples must be finite")
    return r


def _scalar(values: FloatArray, message: str) -> float:
    value = float(values[0])
    if math.isnan(value):
        raise DegenerateRiskError(message)
    return value


def portfolio_returns(weights: FloatArray, scenarios: ScenarioMatrix) -> FloatArray:
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (scenarios.N,):
        raise DimensionMismatchError(
            f"Weights have shape {weights.shape}; scenarios have {scenarios.N} assets"
        )
    return scenarios.returns @ weights


def portfolio_return_matrix(batch: FloatArray, scenarios: ScenarioMatrix) -> FloatArray:
    """``J x M`` portfolio returns for an ``M x N`` batch of weight vectors."""
    batch = np.atleast_2d(batch)
    if batch.shape[1] != scenarios.N:
        raise DimensionMismatchError(
            f"Batch has {batch.shape[1]} assets; scenarios have {scenarios.N}"
        )
    return (batch @ scenarios.returns.T).T


def tail_count(J: int, u: float) -> int:
    """Number of scenarios in the lower ``u`` tail, ``ceil(u * J)``."""
    count = math.ceil(round(u * J, 9))
    if count < 1:
        raise McPopeUserError(f"Tail u={u} holds no scenario out of {J}")
    return count


def _mean_variance_columns(returns: FloatArray, lam: float) -> FloatArray:
    returns = _columns(returns)
    return returns.var(axis=0) - lam * returns.mean(axis=0)


def _var_columns(returns: FloatArray, u: float) -> FloatArray:
    returns = _columns(returns)
    count = tail_count(len(returns), u)
    return -np.partition(returns, count - 1, axis=0)[count - 1]


def _cvar_columns(returns: FloatArray, u: float) -> FloatArray:
    returns = _columns(returns)
    count = tail_count(len(returns), u)
    return -np.partition(returns, count - 1, axis=0)[:count].mean(axis=0)


def _sharpe_columns(returns: FloatArray, b: float) -> FloatArray:
    returns = _columns(returns)
    deviation = returns.std(axis=0)
    excess = returns.mean(axis=0) - b
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(deviation > 0.0, -excess / deviation, np.nan)
    return ratio


def _one_sided_ratio(upside: FloatArray, downside: FloatArray) -> FloatArray:
    """``upside / downside`` with +inf when only the downside vanishes."""
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = upside / downside
    ratio = np.where(downside > 0.0, ratio, np.inf)
    return np.where((downside > 0.0) | (upside > 0.0), ratio, np.nan)


def _omega_columns(returns: FloatArray, b: float) -> FloatArray:
    returns = _columns(returns)
    upside = np.maximum(returns - b, 0.0).mean(axis=0)
    downside = np.maximum(b - returns, 0.0).mean(axis=0)
    return _one_sided_ratio(upside, downside)


def _omega_put_call_columns(returns: FloatArray, b: float) -> FloatArray:
    returns = _columns(returns)
    downside = np.maximum(b - returns, 0.0).mean(axis=0)
    excess = returns.mean(axis=0) - b
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = excess / downside + 1.0
    ratio = np.where(downside > 0.0, ratio, np.inf)
    return np.where((downside > 0.0) | (excess > 0.0), ratio, np.nan)


def _variability_columns(
    returns: FloatArray, b: float, p: float, q: float
) -> FloatArray:
    returns = _columns(returns)
    upside = (np.maximum(returns - b, 0.0) ** p).mean(axis=0) ** (1.0 / p)
    downside = (np.maximum(b - returns, 0.0) ** q).mean(axis=0) ** (1.0 / q)
    return _one_sided_ratio(upside, downside)


def risk_mean_variance(r: FloatArray, lam: float) -> float:
    """Population variance minus ``lam`` times the mean."""
    return float(_mean_variance_columns(_check_sample(r), lam)[0])


def empirical_var(r: FloatArray, u: float) -> float:
    """Negated ``ceil(u * J)``-th smallest return (no interpolation)."""
    return float(_var_columns(_check_sample(r), u)[0])


def empirical_cvar(r: FloatArray, u: float) -> float:
    """Negated mean of the ``ceil(u * J)`` smallest returns."""
    return float(_cvar_columns(_check_sample(r), u)[0])


def negative_sharpe(r: FloatArray, b: float) -> float:
    return _scalar(
        _sharpe_columns(_check_sample(r), b),
        "zero dispersion: the Sharpe ratio is undefined",
    )


def omega(r: FloatArray, b: float) -> float:
    """``E[(r - b)+] / E[(b - r)+]``; +inf when no return falls below ``b``."""
    return _scalar(
        _omega_columns(_check_sample(r), b),
        f"degenerate at threshold: every return equals {b}",
    )


def omega_put_call(r: FloatArray, b: float) -> float:
    """Omega through put-call parity, ``(mean - b) / E[(b - r)+] + 1``."""
    return _scalar(
        _omega_put_call_columns(_check_sample(r), b),
        f"degenerate at threshold: every return equals {b}",
    )


def variability_ratio(r: FloatArray, b: float, p: float, q: float) -> float:
    if p <= 0 or q <= 0:
        raise McPopeUserError("p and q must be strictly positive")
    r = _check_sample(r)
    if not np.any(r < b):
        raise DegenerateRiskError(f"no downside mass below {b}")
    return float(_variability_columns(r, b, p, q)[0])


def _normal_lower_partial_moment(t: float) -> float:
    """``E[(t - Z)+]`` for standard normal ``Z``, i.e. ``phi(t) + t * Phi(t)``."""
    if t >= 0.0:
        return math.exp(-0.5 * t * t) / math.sqrt(2.0 * math.pi) + t * special.ndtr(t)
    # Scaled complementary error function keeps the left tail accurate.
    return math.exp(-0.5 * t * t) * (
        1.0 / math.sqrt(2.0 * math.pi) + 0.5 * t * special.erfcx(-t / math.sqrt(2.0))
    )


def gaussian_omega(mu: float, sigma: float, b: float) -> float:
    """Closed-form Omega of a normal return, a strictly decreasing function of b."""
    if sigma <= 0:
        raise McPopeUserError("sigma must be strictly positive")
    z = (b - mu) / sigma
    downside = _normal_lower_partial_moment(z)
    if downside == 0.0:
        return math.inf
    return _normal_lower_partial_moment(-z) / downside


def student_t_quantile(u: float, n: float) -> float:
    """Quantile of the standard Student t with ``n`` degrees of freedom.

    Uses the inverse regularized incomplete beta function,
    ``sign(u - 1/2) * sqrt(n * (1 / I^-1_{2 min(u, 1-u)}(n/2, 1/2) - 1))``.
    """
    if not 0.0 < u < 1.0:
        raise McPopeUserError(f"u must lie in (0, 1), got {u}")
    if n <= 0:
        raise McPopeUserError(f"degrees of freedom must be positive, got {n}")
    if u == 0.5:
        return 0.0
    x = special.betaincinv(n / 2.0, 0.5, 2.0 * min(u, 1.0 - u))
    return math.copysign(math.sqrt(n * (1.0 / x - 1.0)), u - 0.5)


def marginal_var_student(mu: float, sigma: float, n: float, u: float) -> float:
    """Signed VaR of a t marginal scaled to standard deviation ``sigma``.

    Negative numbers denote a loss.
    """
    if n <= 2:
        raise McPopeUserError("n must exceed 2")
    if u == 0.5:
        return mu
    return mu + sigma * math.sqrt((n - 2.0) / n) * student_t_quantile(u, n)


def _check_tail(u: float) -> None:
    if not 0.0 < u < 1.0:
        raise McPopeUserError(f"tail u must lie strictly inside (0, 1), got {u}")


class RiskSpec(metaclass=ABCMeta):
    name: str = ""

    @abstractmethod
    def measure(self, returns: FloatArray) -> FloatArray:
        """Column-wise risk of a ``J x M`` return matrix; NaN marks undefined."""
        ...

    @abstractmethod
    def evaluate(self, r: FloatArray) -> float:
        ...

    @abstractmethod
    def parameters(self) -> List[float]:
        ...

    def as_text(self) -> str:
        return f"{self.name}:" + ",".join(repr(float(p)) for p in self.parameters())

    def __str__(self):
        return self.as_text()


@dataclass(frozen=True)
class MeanVariance(RiskSpec):
    """Variance minus ``lam`` times mean.

    ``expected_returns`` is only consulted when the spec drives an analytic
    quadratic objective; on scenarios the sample mean plays that role.
    """

    lam: float = 0.0
    expected_returns: Optional[FloatArray] = None
    name = "mv"

    def measure(self, returns: FloatArray) -> FloatArray:
        return _mean_variance_columns(returns, self.lam)

    def evaluate(self, r: FloatArray) -> float:
        return risk_mean_variance(r, self.lam)

    def parameters(self) -> List[float]:
        return [self.lam]


@dataclass(frozen=True)
class VarianceOnly(RiskSpec):
    name = "variance"

    def measure(self, returns: FloatArray) -> FloatArray:
        return _mean_variance_columns(returns, 0.0)

    def evaluate(self, r: FloatArray) -> float:
        return risk_mean_variance(r, 0.0)

    def parameters(self) -> List[float]:
        return []

    def as_text(self) -> str:
        return self.name


@dataclass(frozen=True)
class ValueAtRisk(RiskSpec):
    u: float
    name = "var"

    def __post_init__(self):
        _check_tail(self.u)

    def measure(self, returns: FloatArray) -> FloatArray:
        return _var_columns(returns, self.u)

    def evaluate(self, r: FloatArray) -> float:
        return empirical_var(r, self.u)

    def parameters(self) -> List[float]:
        return [self.u]


@dataclass(frozen=True)
class ConditionalValueAtRisk(RiskSpec):
    u: float
    name = "cvar"

    def __post_init__(self):
        _check_tail(self.u)

    def measure(self, returns: FloatArray) -> FloatArray:
        return _cvar_columns(returns, self.u)

    def evaluate(self, r: FloatArray) -> float:
        return empirical_cvar(r, self.u)

    def parameters(self) -> List[float]:
        return [self.u]


@dataclass(frozen=True)
class NegativeSharpe(RiskSpec):
    b: float
    name = "sharpe"

    def measure(self, returns: FloatArray) -> FloatArray:
        return _sharpe_columns(returns, self.b)

    def evaluate(self, r: FloatArray) -> float:
        return negative_sharpe(r, self.b)

    def parameters(self) -> List[float]:
        return [self.b]


@dataclass(frozen=True)
class NegativeOmega(RiskSpec):
    b: float
    name = "omega"

    def measure(self, returns: FloatArray) -> FloatArray:
        return -_omega_columns(returns, self.b)

    def evaluate(self, r: FloatArray) -> float:
        return -omega(r, self.b)

    def parameters(self) -> List[float]:
        return [self.b]


@dataclass(frozen=True)
class VariabilityRatio(RiskSpec):
    """Minimized as the negated ratio, so larger ratios rank better."""

    b: float
    p: float = 1.0
    q: float = 1.0
    name = "phi"

    def __post_init__(self):
        if self.p <= 0 or self.q <= 0:
            raise McPopeUserError("p and q must be strictly positive")

    def measure(self, returns: FloatArray) -> FloatArray:
        return -_variability_columns(returns, self.b, self.p, self.q)

    def evaluate(self, r: FloatArray) -> float:
        return -variability_ratio(r, self.b, self.p, self.q)

    def parameters(self) -> List[float]:
        return [self.b, self.p, self.q]


RISK_SPECS: Dict[str, Type[RiskSpec]] = {
    "mv": MeanVariance,
    "variance": VarianceOnly,
    "var": ValueAtRisk,
    "cvar": ConditionalValueAtRisk,
    "sharpe": NegativeSharpe,
    "omega": NegativeOmega,
    "phi": VariabilityRatio,
}

_PARAMETER_NAMES: Dict[str, List[str]] = {
    "mv": ["lambda"],
    "variance": [],
    "var": ["u"],
    "cvar": ["u"],
    "sharpe": ["b"],
    "omega": ["b"],
    "phi": ["b", "p", "q"],
}


def parse_risk_spec(text: str) -> RiskSpec:
    """Parses ``mv:<lambda>``, ``var:<u>``, ``cvar:<u>``, ``sharpe:<b>``,
    ``omega:<b>``, ``phi:<b>,<p>,<q>`` or ``variance``."""
    name, _, raw = text.strip().partition(":")
    if name not in RISK_SPECS:
        raise McPopeUserError(
            f"Unknown risk spec {text!r}; expected one of: "
            + ", ".join(sorted(RISK_SPECS))
        )

    expected = _PARAMETER_NAMES[name]
    fields = [field.strip() for field in raw.split(",")] if raw.strip() else []
    if len(fields) != len(expected):
        missing = expected[len(fields) :] or ["(none)"]
        raise McPopeUserError(
            f"Malformed risk spec {text!r}: expected {len(expected)} value(s) "
            f"({', '.join(expected) or 'none'}); check {', '.join(missing)}"
        )

    values = []
    for field_name, field in zip(expected, fields):
        try:
            values.append(float(field))
        except ValueError:
            raise McPopeUserError(
                f"Malformed risk spec {text!r}: {field_name}={field!r} is not a number"
            )
    return RISK_SPECS[name](*values)


def evaluate(spec: RiskSpec, r: FloatArray) -> float:
    return spec.evaluate(r)

