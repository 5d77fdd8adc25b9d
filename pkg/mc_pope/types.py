from __future__ import annotations

from typing import Callable

import numpy as np
import numpy.typing as npt
from typing_extensions import TypedDict

FloatArray = npt.NDArray[np.float64]

# Maps an (M, N) batch of weight vectors to M objective values.
BatchObjective = Callable[[FloatArray], FloatArray]

# A general constraint evaluated on one weight vector.
WeightPredicate = Callable[[FloatArray], bool]


class ConfigDict(TypedDict, total=False):
    seed: int
    workers: int
    jobs: int
    base_samples: int
    bias_depth: int
    risk: str
    scenarios: str
    distribution: str
    constraints: str
    output: str
    log_level: str
    even_pool: bool
    baseline: bool
