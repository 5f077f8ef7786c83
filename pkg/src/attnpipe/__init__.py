"""Driver attention pipeline: hyper-filtered PPG drowsiness classification,
video saliency prediction and evaluation, and attention/scene fusion alerts.
"""

from .backend import BACKEND, HAS_NUMBA
from .errors import (
    AlignmentError,
    AttnPipeError,
    ConfigError,
    IngestError,
    InvalidArgumentError,
    InvalidDatasetError,
    InvalidSpecError,
    UndefinedMetricError,
)

__all__ = [
    "BACKEND",
    "HAS_NUMBA",
    "AttnPipeError",
    "InvalidSpecError",
    "InvalidArgumentError",
    "IngestError",
    "AlignmentError",
    "InvalidDatasetError",
    "UndefinedMetricError",
    "ConfigError",
]

__version__ = "0.1.0"
