"""Two-snapshot multinomial ensembles and the factor-2 anomaly.

An ensemble of n independent systems is observed twice: counts xi drawn from
multinomial(n, rho1) and counts eta from multinomial(n, rho2). The Shannon
information change is ΔI = n*(H(rho2) - H(rho1)). Approximating both count
distributions by diagonal Gaussians (independent coordinates, no simplex
constraint) gives a log joint density up to a common constant, and the
decision statistic D = log joint(xi, eta) - log joint(eta, xi).

Mean substitution (counts replaced by their forward means) makes D evaluate
to about twice ΔI when rho2 is flat and rho1 is close to it: the anomaly.
Forbidding observation of the first snapshot and comparing only the marginal
laws of eta restores D ≈ ΔI.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ._streams import LANE_CLASSICAL, check_master_seed, substream
from .arrow import DecisionStatistic, InformationChange, Provenance
from .errors import ValidationError

EPSILON_FLOOR = 1e-9
_SUM_TOL = 1e-12


@dataclass(frozen=True)
class SimplexDistribution:
    """Probability vector with every component at or above EPSILON_FLOOR.

    The Gaussian branches divide by the components, so exact zeros are
    rejected rather than regularized.
    """

    probs: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.probs, dtype=np.float64)
        if arr.ndim != 1 or arr.size < 2:
            raise ValidationError("probs must be a 1-d sequence with d >= 2")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("probs must be finite")
        if np.any(arr < EPSILON_FLOOR):
            raise ValidationError(
                f"every probability must be >= {EPSILON_FLOOR} (zero components are excluded, not regularized)"
            )
        if abs(math.fsum(arr) - 1.0) > _SUM_TOL:
            raise ValidationError("probabilities must sum to 1 within 1e-12")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "probs", arr)

    @property
    def dim(self) -> int:
        return int(self.probs.size)

    def entropy(self) -> float:
        """Shannon entropy in nats."""
        p = self.probs
        return -math.fsum(p * np.log(p))


def flat_distribution(d: int) -> SimplexDistribution:
    if not isinstance(d, (int, np.integer)) or d < 2:
        raise ValidationError("d must be an integer >= 2")
    return SimplexDistribution(np.full(d, 1.0 / d))


def _is_flat(rho: SimplexDistribution) -> bool:
    return bool(np.all(np.abs(rho.probs - 1.0 / rho.dim) <= 1e-12))


@dataclass(frozen=True)
class CountVector:
    counts: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.counts)
        if arr.ndim != 1 or arr.size < 2:
            raise ValidationError("counts must be a 1-d sequence with d >= 2")
        if not np.issubdtype(arr.dtype, np.integer):
            if not np.all(np.equal(np.mod(arr, 1), 0)):
                raise ValidationError("counts must be integers")
        arr = arr.astype(np.int64)
        if np.any(arr < 0):
            raise ValidationError("counts must be nonnegative")
        arr.setflags(write=False)
        object.__setattr__(self, "counts", arr)

    @property
    def dim(self) -> int:
        return int(self.counts.size)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class TransitionSample:
    """One observed pair: xi at the first snapshot, eta at the second."""

    xi: CountVector
    eta: CountVector

    def __post_init__(self):
        if self.xi.dim != self.eta.dim:
            raise ValidationError("xi and eta must have the same dimension")
        if self.xi.total != self.eta.total:
            raise ValidationError("xi and eta must count the same ensemble size n")

    def swapped(self) -> "TransitionSample":
        return TransitionSample(xi=self.eta, eta=self.xi)


class Order(Enum):
    FORWARD_XI_ETA = "forward_xi_eta"
    REVERSED_ETA_XI = "reversed_eta_xi"


def _check_n(n) -> int:
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool) or n < 1:
        raise ValidationError("n must be a positive integer")
    return int(n)


def _check_dims(n: int, *objs) -> None:
    d = objs[0].dim
    for o in objs[1:]:
        if o.dim != d:
            raise ValidationError("dimension mismatch between distributions/counts")
    for o in objs:
        if isinstance(o, CountVector) and o.total != n:
            raise ValidationError(f"counts sum to {o.total}, expected n = {n}")


def shannon_information_change(
    rho1: SimplexDistribution, rho2: SimplexDistribution, n: int
) -> InformationChange:
    """ΔI = n*(H(rho2) - H(rho1)) in nats."""
    n = _check_n(n)
    _check_dims(n, rho1, rho2)
    return InformationChange(n * (rho2.entropy() - rho1.entropy()))


def sample_counts(rho: SimplexDistribution, n: int, rng: np.random.Generator) -> CountVector:
    n = _check_n(n)
    return CountVector(rng.multinomial(n, rho.probs))


def _gauss_quad(counts: np.ndarray, rho: SimplexDistribution, n: int) -> float:
    """sum_i (c_i - n rho_i)^2 / (2 n rho_i), the diagonal Gaussian exponent."""
    mu = n * rho.probs
    dev = counts - mu
    return math.fsum(dev * dev / (2.0 * mu))


def log_joint_gaussian(
    sample: TransitionSample,
    rho1: SimplexDistribution,
    rho2: SimplexDistribution,
    n: int,
    order: Order,
    log_constant: float = 0.0,
) -> float:
    """Diagonal-Gaussian log joint density of the two snapshots, up to the
    normalization constant ln C, which is identical in both orders.

    FORWARD_XI_ETA pairs (xi, rho1) and (eta, rho2); REVERSED_ETA_XI
    evaluates the same density at the swapped arguments, pairing (eta, rho1)
    and (xi, rho2). log_constant stands in for ln C; the decision statistic
    never sees it (see d_joint).
    """
    n = _check_n(n)
    _check_dims(n, rho1, rho2, sample.xi, sample.eta)
    if not math.isfinite(log_constant):
        raise ValidationError("log_constant must be finite")
    c1 = sample.xi.counts
    c2 = sample.eta.counts
    if order is Order.FORWARD_XI_ETA:
        qa = _gauss_quad(c1, rho1, n)
        qb = _gauss_quad(c2, rho2, n)
    elif order is Order.REVERSED_ETA_XI:
        qa = _gauss_quad(c2, rho1, n)
        qb = _gauss_quad(c1, rho2, n)
    else:
        raise ValidationError(f"order must be an Order member, got {order!r}")
    return -(qa + qb) + log_constant


def d_joint(
    sample: TransitionSample,
    rho1: SimplexDistribution,
    rho2: SimplexDistribution,
    n: int,
) -> DecisionStatistic:
    """D = log joint(forward order) - log joint(reversed order).

    The constant ln C never enters (both branches are evaluated without it),
    and swapping xi with eta negates the result bitwise.
    """
    fwd = log_joint_gaussian(sample, rho1, rho2, n, Order.FORWARD_XI_ETA)
    rev = log_joint_gaussian(sample, rho1, rho2, n, Order.REVERSED_ETA_XI)
    return DecisionStatistic(fwd - rev, provenance=Provenance.JOINT_CLASSICAL)


def mean_d_joint(rho1: SimplexDistribution, rho2: SimplexDistribution, n: int) -> float:
    """Mean-substitution closed form: D at counts equal to forward means,

        -(n/2) * sum_i ((rho2_i)^2 - (rho1_i)^2) * (1/rho2_i - 1/rho1_i).

    Deliberately excludes the O(1) count-fluctuation contribution.
    """
    n = _check_n(n)
    _check_dims(n, rho1, rho2)
    r1 = rho1.probs
    r2 = rho2.probs
    terms = (r2 * r2 - r1 * r1) * (1.0 / r2 - 1.0 / r1)
    return -(n / 2.0) * math.fsum(terms)


def d_marginal(
    eta: CountVector,
    rho1: SimplexDistribution,
    rho2: SimplexDistribution,
    n: int,
) -> DecisionStatistic:
    """Marginal statistic when observing only the second snapshot.

    Under the diagonal Gaussian approximation the xi-integral contributes the
    same factor to both hypotheses, leaving
    D = [-q(eta; rho2)] - [-q(eta; rho1)] = q(eta; rho1) - q(eta; rho2).
    """
    n = _check_n(n)
    _check_dims(n, rho1, rho2, eta)
    c = eta.counts
    return DecisionStatistic(
        _gauss_quad(c, rho1, n) - _gauss_quad(c, rho2, n),
        provenance=Provenance.MARGINAL_CLASSICAL,
    )


def leading_order_pair(
    rho1: SimplexDistribution, rho2: SimplexDistribution, n: int
) -> tuple[float, float]:
    """Leading-order (di, d) for small deviations from a flat rho2:

        di_leading = (n d / 2) * sum dr_i^2,   d_leading = n d * sum dr_i^2,

    with dr = rho2 - rho1. The 2:1 ratio is the anomaly in closed form.
    Requires rho2 flat; for skewed rho2 the expansion picks up a linear term
    and the pair is not meaningful.
    """
    n = _check_n(n)
    _check_dims(n, rho1, rho2)
    if not _is_flat(rho2):
        raise ValidationError("leading_order_pair requires a flat rho2")
    dr = rho2.probs - rho1.probs
    s = math.fsum(dr * dr)
    d = rho1.dim
    return ((n * d / 2.0) * s, (n * d) * s)


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    m = float(np.mean(values))
    if values.size < 2:
        return m, 0.0
    return m, float(np.std(values, ddof=1) / math.sqrt(values.size))


@dataclass(frozen=True)
class FactorTwoRecord:
    """Per-sample d_joint/d_marginal draws plus the closed-form references."""

    rho1: SimplexDistribution
    rho2: SimplexDistribution
    n: int
    n_samples: int
    master_seed: int
    delta_i: float
    d_joint: np.ndarray
    d_marginal: np.ndarray
    mean_d_joint_closed: float
    di_leading: float
    d_leading: float

    @property
    def mean_d_joint_empirical(self) -> tuple[float, float]:
        return _mean_se(self.d_joint)

    @property
    def mean_d_marginal_empirical(self) -> tuple[float, float]:
        return _mean_se(self.d_marginal)

    @property
    def ratio_joint(self) -> float | None:
        """mean(d_joint)/ΔI, or None in the reversible case ΔI = 0."""
        if self.delta_i == 0.0:
            return None
        return self.mean_d_joint_empirical[0] / self.delta_i

    @property
    def ratio_marginal(self) -> float | None:
        if self.delta_i == 0.0:
            return None
        return self.mean_d_marginal_empirical[0] / self.delta_i


def factor_two_experiment(
    rho1: SimplexDistribution, n: int, n_samples: int, master_seed: int
) -> FactorTwoRecord:
    """Sample xi ~ multinomial(rho1), eta ~ multinomial(flat) pairs and
    accumulate both decision statistics. Each sample index has its own
    counter-based substream, so results do not depend on evaluation order.
    """
    n = _check_n(n)
    if not isinstance(n_samples, (int, np.integer)) or n_samples < 1:
        raise ValidationError("n_samples must be a positive integer")
    master_seed = check_master_seed(master_seed)
    # the 2:1 prediction is leading-order; keep max|rho1 - flat| small (<= 0.1)
    rho2 = flat_distribution(rho1.dim)
    dj = np.empty(n_samples)
    dm = np.empty(n_samples)
    for i in range(int(n_samples)):
        gen = substream(master_seed, LANE_CLASSICAL, i)
        xi = sample_counts(rho1, n, gen)
        eta = sample_counts(rho2, n, gen)
        sample = TransitionSample(xi=xi, eta=eta)
        dj[i] = d_joint(sample, rho1, rho2, n).d_value
        dm[i] = d_marginal(eta, rho1, rho2, n).d_value
    dj.setflags(write=False)
    dm.setflags(write=False)
    di = shannon_information_change(rho1, rho2, n).delta_i
    di_lead, d_lead = leading_order_pair(rho1, rho2, n)
    return FactorTwoRecord(
        rho1=rho1, rho2=rho2, n=n, n_samples=int(n_samples), master_seed=master_seed,
        delta_i=di, d_joint=dj, d_marginal=dm,
        mean_d_joint_closed=mean_d_joint(rho1, rho2, n),
        di_leading=di_lead, d_leading=d_lead,
    )


def brute_force_sign_agreement(
    rho1: SimplexDistribution, rho2: SimplexDistribution, n: int
) -> float:
    """Probability mass on which sign(exact log multinomial ratio) agrees
    with sign(Gaussian d_joint). Exact-enumeration oracle, d = 2 and small n
    only. Ties (either statistic within 1e-12 of zero) count as agreement.
    """
    n = _check_n(n)
    _check_dims(n, rho1, rho2)
    if rho1.dim != 2:
        raise ValidationError("brute-force oracle is implemented for d = 2 only")
    if n > 12:
        raise ValidationError("brute-force oracle supports n <= 12")
    r1 = rho1.probs
    r2 = rho2.probs
    # exact log ratio: the multinomial coefficients cancel between P(xi,eta)
    # and P(eta,xi), leaving (a - b) * [ln r1_0 - ln r1_1 - ln r2_0 + ln r2_1]
    slope = math.log(r1[0]) - math.log(r1[1]) - math.log(r2[0]) + math.log(r2[1])
    agree = 0.0
    for a in range(n + 1):
        pa = math.comb(n, a) * r1[0] ** a * r1[1] ** (n - a)
        for b in range(n + 1):
            pb = math.comb(n, b) * r2[0] ** b * r2[1] ** (n - b)
            exact = (a - b) * slope
            sample = TransitionSample(
                xi=CountVector(np.array([a, n - a])),
                eta=CountVector(np.array([b, n - b])),
            )
            gauss = d_joint(sample, rho1, rho2, n).d_value
            if abs(exact) <= 1e-12 or abs(gauss) <= 1e-12:
                agree += pa * pb
            elif (exact > 0) == (gauss > 0):
                agree += pa * pb
    return agree
