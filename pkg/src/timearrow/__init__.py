"""Inference of an intrinsic time direction from information loss.

The core law: given a decision statistic D (a log-likelihood ratio between
the two time orientations of the same record), the posterior probability of
orientation s is 1/(1 + e^{-sD}). Subpackages build D for overdamped
Langevin trajectories (`langevin`), multinomial frequency records
(`classical`), and typical-subspace measurements on i.i.d. quantum states
(`quantum`). `harness` and `cli` wrap them in reproducible experiments.
"""

from . import backends, classical, langevin, quantum
from .arrow import (
    DecisionStatistic,
    FidelityEstimate,
    InformationChange,
    Provenance,
    TimeArrow,
    arrow_probability,
    average_arrow_probability,
    bayes_posterior,
    exact_mean_fidelity,
    log_ratio,
    log_ratio_from_logs,
    mean_fidelity,
    thermodynamic_arrow,
)
from .errors import (
    ConfigError,
    DegenerateSupportError,
    EnumerationLimitError,
    GridMismatchError,
    ValidationError,
)

__version__ = "0.1.0"

__all__ = [
    "TimeArrow",
    "Provenance",
    "InformationChange",
    "DecisionStatistic",
    "FidelityEstimate",
    "arrow_probability",
    "average_arrow_probability",
    "bayes_posterior",
    "exact_mean_fidelity",
    "log_ratio",
    "log_ratio_from_logs",
    "mean_fidelity",
    "thermodynamic_arrow",
    "ValidationError",
    "ConfigError",
    "DegenerateSupportError",
    "EnumerationLimitError",
    "GridMismatchError",
    "backends",
    "langevin",
    "classical",
    "quantum",
    "__version__",
]
