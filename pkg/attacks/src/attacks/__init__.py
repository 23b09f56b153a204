"""Modeling-attack benchmark for exported PUF challenge-response data."""

__version__ = "0.1.0"

from .dataset import AttackDataset, DatasetError, import_dataset
from .harness import MIN_LABELED_BITS, run_attacks, write_report
from .models import MODEL_NAMES, AttackResult, cma_minimize

__all__ = [
    "AttackDataset",
    "AttackResult",
    "DatasetError",
    "MIN_LABELED_BITS",
    "MODEL_NAMES",
    "cma_minimize",
    "import_dataset",
    "run_attacks",
    "write_report",
    "__version__",
]
