"""Monte-Carlo simulator and analysis toolkit for reconfigurable MRAM PUF arrays."""

__version__ = "0.1.0"

from .device import CellParams, VariationConfig, sample_population
from .array import ArrayState, ReadModel, init_array, reconfigure_dual
from .config import RunConfig, load_config
from .dualpulse import (
    DEFAULT_TANGENT_K,
    DEFAULT_TARGET_WINDOW,
    TangentModel,
    TargetWindow,
    solve_beta,
)

__all__ = [
    "ArrayState",
    "CellParams",
    "DEFAULT_TANGENT_K",
    "DEFAULT_TARGET_WINDOW",
    "ReadModel",
    "RunConfig",
    "TangentModel",
    "TargetWindow",
    "VariationConfig",
    "init_array",
    "load_config",
    "reconfigure_dual",
    "sample_population",
    "solve_beta",
    "__version__",
]
