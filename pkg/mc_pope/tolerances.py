# Tolerances applied by `mc-pope reproduce`.  Bump TOLERANCE_VERSION whenever a
# value changes so archived comparison tables stay interpretable.
TOLERANCE_VERSION = 1

THREE_ASSET_WEIGHT = 0.01
THREE_ASSET_OBJECTIVE_RELATIVE = 0.002

CONSTRAINED_OBJECTIVE_RELATIVE = 0.001
CONSTRAINED_WEIGHT = 0.01

PATHOLOGICAL_WEIGHT = 0.005

RU_CVAR = {0.1: 0.002, 0.05: 0.002, 0.01: 0.003}
RU_CVAR_WEIGHT = 0.03
RU_MIN_VARIANCE_WEIGHT = 5e-4
RU_MIN_VARIANCE = 1e-6

ADMN_WEIGHT = 0.06
ADMN_OMEGA_RELATIVE = 0.15
ADMN_CONCENTRATION = 0.99
ADMN_MARGINAL_VAR = 5e-4

RISK_SESSION_WEIGHT = 0.03
