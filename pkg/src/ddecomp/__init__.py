"""Regularized three-factor matrix decomposition ``A ~ P D Q``."""

__version__ = "0.1.0"

from .errors import DDecompError, DataError, IoError, NumericalError  # noqa: E402
from .regularizers import RegularizerConfig, objective, regularizer_value  # noqa: E402
from .solver import (  # noqa: E402
    ConvergenceTrace,
    FactorTriple,
    SolverConfig,
    normalize_gauge,
    solve,
)

__all__ = [
    "ConvergenceTrace",
    "DDecompError",
    "DataError",
    "FactorTriple",
    "IoError",
    "NumericalError",
    "RegularizerConfig",
    "SolverConfig",
    "normalize_gauge",
    "objective",
    "regularizer_value",
    "solve",
]
