"""Covariant Bayesian time-arrow machinery.

The direction of time s = +/- is treated as a binary hypothesis with the
symmetric prior P0(s) = 1/2. Every inference in the package reduces to the
sigmoid law

    P(s | x) = 1 / (1 + exp(-s * x)),

where x is a log-likelihood-ratio statistic in nats. This module holds the
law itself, the D statistic built from a pair of probabilities (or
log-densities), posteriors, and sample-based fidelity estimates. All
functions are pure; values are immutable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import DegenerateSupportError, ValidationError

__all__ = [
    "TimeArrow",
    "InformationChange",
    "Provenance",
    "DecisionStatistic",
    "FidelityEstimate",
    "negate",
    "thermodynamic_arrow",
    "arrow_probability",
    "log_ratio",
    "log_ratio_from_logs",
    "bayes_posterior",
    "mean_fidelity",
    "average_arrow_probability",
    "exact_mean_fidelity",
]


class TimeArrow(Enum):
    """The time-arrow label: +, -, or undetermined (zero information change)."""

    PLUS = 1
    MINUS = -1
    UNDETERMINED = 0

    @property
    def sign(self) -> int:
        return self.value


def negate(s: TimeArrow) -> TimeArrow:
    """Reverse an arrow; an involution with UNDETERMINED as fixed point."""
    if s is TimeArrow.PLUS:
        return TimeArrow.MINUS
    if s is TimeArrow.MINUS:
        return TimeArrow.PLUS
    return TimeArrow.UNDETERMINED


class Provenance(Enum):
    """Which construction produced a D statistic."""

    THERMODYNAMIC = "thermodynamic"
    JOINT_CLASSICAL = "joint-classical"
    MARGINAL_CLASSICAL = "marginal-classical"
    QUANTUM = "quantum"
    RAW = "raw"


def _require_finite(value: float, name: str) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValidationError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class InformationChange:
    """Information change along a process, in nats. May have either sign."""

    delta_i: float

    def __post_init__(self):
        object.__setattr__(self, "delta_i", _require_finite(self.delta_i, "delta_i"))


@dataclass(frozen=True)
class DecisionStatistic:
    """Log-likelihood ratio log[P(X)/P~(X)] in nats, with its provenance."""

    d_value: float
    provenance: Provenance = Provenance.RAW

    def __post_init__(self):
        object.__setattr__(self, "d_value", _require_finite(self.d_value, "d_value"))


@dataclass(frozen=True)
class FidelityEstimate:
    """Sample mean of a posterior-probability score with its standard error."""

    mean: float
    std_error: float
    sample_count: int

    def __post_init__(self):
        if not (0.0 <= self.mean <= 1.0):
            raise ValidationError(f"mean must lie in [0, 1], got {self.mean}")
        if self.std_error < 0.0:
            raise ValidationError("std_error must be nonnegative")
        if self.sample_count < 1:
            raise ValidationError("sample_count must be positive")


def _as_float(x: Union[float, InformationChange, DecisionStatistic]) -> float:
    if isinstance(x, InformationChange):
        return x.delta_i
    if isinstance(x, DecisionStatistic):
        return x.d_value
    return _require_finite(x, "value")


def thermodynamic_arrow(delta_i: Union[float, InformationChange]) -> TimeArrow:
    """Arrow of the deterministic law: the sign of the information change."""
    value = _as_float(delta_i)
    if value > 0.0:
        return TimeArrow.PLUS
    if value < 0.0:
        return TimeArrow.MINUS
    return TimeArrow.UNDETERMINED


def _sigmoid(t: float) -> float:
    # Exponentiate only non-positive arguments; stable for |t| up to 1e4+.
    if t >= 0.0:
        return 1.0 / (1.0 + math.exp(-t))
    e = math.exp(t)
    return e / (1.0 + e)


def arrow_probability(
    x: Union[float, InformationChange, DecisionStatistic], s: TimeArrow
) -> float:
    """Evaluate the arrow law 1/(1 + exp(-s*x)) for s = PLUS or MINUS.

    Covariant under reference-time reversal by construction:
    arrow_probability(x, s) == arrow_probability(-x, negate(s)) bitwise,
    because both reduce to the same sigmoid call.
    """
    if s is TimeArrow.UNDETERMINED:
        raise ValidationError("arrow_probability requires s = PLUS or MINUS")
    value = _as_float(x)
    return _sigmoid(value if s is TimeArrow.PLUS else -value)


def _checked_positive(p: float, name: str) -> float:
    p = float(p)
    if not math.isfinite(p):
        raise ValidationError(f"{name} must be finite, got {p!r}")
    if p <= 0.0:
        raise DegenerateSupportError(f"{name} must be strictly positive, got {p}")
    return p


def log_ratio(
    p_forward: float,
    p_reversed: float,
    provenance: Provenance = Provenance.RAW,
) -> DecisionStatistic:
    """D = log(p_forward) - log(p_reversed) from two positive probabilities.

    Unnormalized densities are accepted as long as the omitted constant is
    identical on both sides (it cancels). Zero or negative input raises
    DegenerateSupportError; no infinite sentinel is ever returned.
    """
    pf = _checked_positive(p_forward, "p_forward")
    pr = _checked_positive(p_reversed, "p_reversed")
    return DecisionStatistic(-math.log(pr / pf), provenance)


def log_ratio_from_logs(
    log_p_forward: float,
    log_p_reversed: float,
    provenance: Provenance = Provenance.RAW,
) -> DecisionStatistic:
    """D from log-densities directly: log_p_forward - log_p_reversed."""
    lf = _require_finite(log_p_forward, "log_p_forward")
    lr = _require_finite(log_p_reversed, "log_p_reversed")
    return DecisionStatistic(lf - lr, provenance)


def bayes_posterior(p_forward: float, p_reversed: float, s: TimeArrow) -> float:
    """Posterior P(s | X) under the fixed symmetric prior P0(s) = 1/2.

    Equals arrow_probability(log_ratio(p_forward, p_reversed), s); the PLUS
    branch is the ratio p_forward / (p_forward + p_reversed).
    """
    return arrow_probability(log_ratio(p_forward, p_reversed), s)


def _summarize(values: np.ndarray) -> FidelityEstimate:
    count = int(values.size)
    mean = float(np.mean(values))
    if count > 1:
        std_error = float(np.std(values, ddof=1) / math.sqrt(count))
    else:
        std_error = 0.0
    # Guard against round-off pushing a mean of probabilities out of [0, 1].
    mean = min(1.0, max(0.0, mean))
    return FidelityEstimate(mean=mean, std_error=std_error, sample_count=count)


def _d_values(d_samples: Iterable[Union[float, DecisionStatistic]]) -> np.ndarray:
    values = np.asarray([_as_float(d) for d in d_samples], dtype=np.float64)
    if values.size == 0:
        raise ValidationError("at least one D sample is required")
    return values


def mean_fidelity(
    d_samples: Iterable[Union[float, DecisionStatistic]],
) -> FidelityEstimate:
    """Mean of 1/(1+exp(-D)) over D samples drawn under the forward law.

    Estimates the mean fidelity F of the Bayesian arrow estimate.
    """
    values = _d_values(d_samples)
    scores = np.asarray([_sigmoid(v) for v in values])
    return _summarize(scores)


def average_arrow_probability(
    d_samples: Iterable[Union[float, DecisionStatistic]], s: TimeArrow
) -> FidelityEstimate:
    """Mean of arrow_probability(D, s) over the samples.

    On the same samples, result(PLUS).mean + result(MINUS).mean = 1.
    """
    if s is TimeArrow.UNDETERMINED:
        raise ValidationError("average requires s = PLUS or MINUS")
    values = _d_values(d_samples)
    sign = 1.0 if s is TimeArrow.PLUS else -1.0
    scores = np.asarray([_sigmoid(sign * v) for v in values])
    return _summarize(scores)


def exact_mean_fidelity(
    p_forward: Sequence[float], p_reversed: Sequence[float]
) -> float:
    """Exact fidelity sum_X P(X)^2 / (P(X) + P~(X)) for finite distributions.

    Both arguments must be strictly positive and of equal length. When P~ is
    a permutation of P this is >= 1/2, with equality iff P~ = P pointwise.
    """
    pf = np.asarray(p_forward, dtype=np.float64)
    pr = np.asarray(p_reversed, dtype=np.float64)
    if pf.shape != pr.shape or pf.ndim != 1 or pf.size == 0:
        raise ValidationError("distributions must be nonempty 1-d and equal length")
    if not (np.all(np.isfinite(pf)) and np.all(np.isfinite(pr))):
        raise ValidationError("distributions must be finite")
    if np.any(pf <= 0.0) or np.any(pr <= 0.0):
        raise DegenerateSupportError("distributions must be strictly positive")
    return float(math.fsum(pf * pf / (pf + pr)))
