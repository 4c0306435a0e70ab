"""Block-wise prequential MDL of labels given inputs, compared across input transforms."""

__version__ = "0.1.0"

from .codelength import (  # noqa: E402
    BoundedContinuous,
    Categorical,
    CategoricalDist,
    Gaussian,
    UniformInterval,
    apply_temperature,
    codelength,
    smooth,
    uniform_prior,
)
from .data import Dataset, Example, load_jsonl  # noqa: E402
from .engine import compare_conditions, run_condition  # noqa: E402
from .learners import discretize_regression_adapter, fit, make_spec, predict  # noqa: E402
from .schedule import make_schedule  # noqa: E402
from .transforms import Transform, apply, matched_control_for  # noqa: E402
