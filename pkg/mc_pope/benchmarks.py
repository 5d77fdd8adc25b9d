"""Published test problems and their reference answers."""
import numpy as np

from .sampler import ConstraintSet
from .scenarios import CovarianceSpec


def three_asset_matrix(r: float) -> np.ndarray:
    """The 3-asset covariance family parametrized by a correlation ``r``.

    Only positive semi-definite for ``-0.7915 < r < 0.9998``; the closed-form
    solution covers all of ``[-1, 1]`` as a quadratic form on the simplex.
    """
    return np.array(
        [
            [64.0, 120.0 * r, 25.0],
            [120.0 * r, 225.0, 50.0],
            [25.0, 50.0, 100.0],
        ]
    )


def three_asset_covariance(r: float) -> CovarianceSpec:
    return CovarianceSpec(three_asset_matrix(r))


# Minimum-variance weights for three_asset_covariance(r).
THREE_ASSET_WEIGHTS = {
    -0.5: (0.696822, 0.303178, 0.0),
    0.0: (0.624376, 0.152847, 0.222777),
    0.5: (0.657895, 0.0, 0.342105),
}

CONSTRAINED_R = -0.5
CONSTRAINED_OBJECTIVE = 32.2379
CONSTRAINED_WEIGHTS = (0.518873, 0.292396, 0.188731)


def constrained_three_asset() -> ConstraintSet:
    """``w1 >= 1/3`` and ``w2 + 1.1 w3 >= 1/2``."""
    return ConstraintSet(
        lower_bounds=np.array([1.0 / 3.0, 0.0, 0.0]),
        linear_inequalities=[(np.array([0.0, 1.0, 1.1]), 0.5)],
    )


PATHOLOGICAL_COVARIANCE = CovarianceSpec(
    [
        [0.0549686, 0.144599, -0.188442, 0.0846818, 0.21354, 0.0815392],
        [0.144599, 1.00269, -0.837786, 0.188534, 0.23907, -0.376582],
        [-0.188442, -0.837786, 1.65445, 0.404402, 0.34708, -0.350142],
        [0.0846818, 0.188534, 0.404402, 0.709815, 1.13685, -0.177787],
        [0.21354, 0.23907, 0.34708, 1.13685, 2.13408, 0.166434],
        [0.0815392, -0.376582, -0.350142, -0.177787, 0.166434, 0.890896],
    ]
)
PATHOLOGICAL_WEIGHTS = (0.883333, 0.0, 0.11667, 0.0, 0.0, 0.0)

RU_COVARIANCE = CovarianceSpec(
    [
        [0.00324625, 0.00022983, 0.00420395],
        [0.00022983, 0.00049937, 0.00019247],
        [0.00420395, 0.00019247, 0.00764097],
    ]
)
RU_RETURNS = np.array([0.010111, 0.0043532, 0.0137058])
RU_TARGET_RETURN = 0.011
RU_MIN_VARIANCE_WEIGHTS = (0.452013, 0.115573, 0.432414)
RU_MIN_VARIANCE = 0.00378529
# Optimal CVaR by tail probability.
RU_CVAR = {0.1: 0.096975, 0.05: 0.115908, 0.01: 0.152977}


def ru_constraints() -> ConstraintSet:
    """Expected return of at least ``RU_TARGET_RETURN``.

    The published minimum-variance and CVaR portfolios are all solved under
    this floor; the minimum-variance weights sit exactly on it.
    """
    return ConstraintSet(linear_inequalities=[(RU_RETURNS, RU_TARGET_RETURN)])

ADMN_ASSETS = ("A", "B", "C")
ADMN_CORRELATION = np.array(
    [
        [1.00000000, 0.47105463, 0.35635569],
        [0.47105463, 1.00000000, 0.44091699],
        [0.35635569, 0.44091699, 1.00000000],
    ]
)
ADMN_MU = np.array([0.18963989, 0.16829560, 0.2788619])
ADMN_SIGMA = np.array([2.3251341, 2.0430214, 1.8134084])
ADMN_NU = 9.0

# Signed marginal VaR of the t(9) model keyed by (asset, u).
ADMN_MARGINAL_VAR = {
    ("A", 0.05): -3.5693,
    ("B", 0.05): -3.13456,
    ("C", 0.05): -2.65279,
    ("A", 0.01): -5.59593,
    ("B", 0.01): -4.9153,
    ("C", 0.01): -4.2334,
}

# Omega-optimal (omega, weights) keyed by threshold b.
ADMN_OMEGA = {
    -4.0: (662.7, (0.22, 0.26, 0.52)),
    -3.0: (180.0, (0.20, 0.25, 0.55)),
    -2.0: (37.4, (0.19, 0.26, 0.55)),
    -1.0: (7.9, (0.19, 0.23, 0.58)),
}
ADMN_UNSTABLE_THRESHOLD = 1.0
