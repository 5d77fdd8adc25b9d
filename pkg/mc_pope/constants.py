APP_NAME = "mc-pope"
APP_AUTHOR = "mc-pope"

DEFAULT_SEED = 0
DEFAULT_WORKERS = 1
DEFAULT_BASE_SAMPLES = 10_000
DEFAULT_BIAS_DEPTH = 5

MAX_BIAS_DEPTH = 30
UNIT_SUM_TOLERANCE = 1e-12
PSD_TOLERANCE = 1e-10
SYMMETRY_TOLERANCE = 1e-12

# Upper bound on J * M floats held at once when scoring candidates.
EVALUATION_CHUNK_ELEMENTS = 20_000_000

CSV_FLOAT_FORMAT = "%.17g"

EXIT_OK = 0
EXIT_FAILED_ROWS = 1
EXIT_ERROR = 2
