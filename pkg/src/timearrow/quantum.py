"""Tensor-power ensembles, typical subspaces, and the arrow fidelity law.

A quantum ensemble of n systems starts in rho1^{(x)n} and ends maximally
mixed, rho2 = 1/d per system, so ΔI = n*(S(rho2) - S(rho1)) >= 0. All
operators of interest (the typical projector E1, both tensor-power states)
commute: everything reduces exactly to type-class combinatorics over
eigenvalue strings, so nothing d^n-dimensional is ever materialized.

The two-outcome measurement of E1 has idealized laws P(E1=1) = e^{-ΔI}
forward and P(E1=1) = 1 reversed; Bayes inference from one outcome yields
mean fidelity F = 1/(1+e^{-ΔI}). At finite n with a non-flat spectrum the
true traces tr(E1 eta), tr(E1 xi) deviate from the idealized values; the
experiment samples outcomes from the true traces and reports the gap.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from ._streams import LANE_QUANTUM, check_master_seed, substream
from .arrow import FidelityEstimate, InformationChange, TimeArrow, arrow_probability
from .errors import DegenerateSupportError, EnumerationLimitError, ValidationError

MIN_DIM = 2
MAX_DIM = 8
TYPE_CLASS_LIMIT = 10**6
BRUTE_FORCE_LIMIT = 2**17

# float slack on the typicality inclusion rule so that delta = 0 with a flat
# spectrum keeps the full support despite rounding of the log-rate
TYPICALITY_ATOL = 1e-12

_HERMITICITY_TOL = 1e-12
_TRACE_TOL = 1e-12
_EIGENVALUE_TOL = 1e-12


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues of a density matrix, sorted descending, in the eigenbasis
    everything else is diagonal in."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 1 or not MIN_DIM <= arr.size <= MAX_DIM:
            raise ValidationError(f"spectrum must be 1-d with {MIN_DIM} <= d <= {MAX_DIM}")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("spectrum must be finite")
        if np.any(arr < -_EIGENVALUE_TOL):
            raise ValidationError("eigenvalues must be >= 0 (within 1e-12)")
        arr = np.clip(arr, 0.0, None)
        if abs(math.fsum(arr) - 1.0) > 1e-12:
            raise ValidationError("eigenvalues must sum to 1 within 1e-12")
        arr = np.sort(arr)[::-1].copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def dim(self) -> int:
        return int(self.values.size)

    def entropy(self) -> float:
        """von Neumann entropy in nats, with 0*ln(0) = 0."""
        p = self.values[self.values > 0.0]
        return -math.fsum(p * np.log(p))


@dataclass(frozen=True)
class DensityMatrix:
    entries: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.entries, dtype=np.complex128)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValidationError("density matrix must be square")
        d = arr.shape[0]
        if not MIN_DIM <= d <= MAX_DIM:
            raise ValidationError(f"dimension must satisfy {MIN_DIM} <= d <= {MAX_DIM}, got {d}")
        if not np.all(np.isfinite(arr.real)) or not np.all(np.isfinite(arr.imag)):
            raise ValidationError("density matrix entries must be finite")
        if np.max(np.abs(arr - arr.conj().T)) > _HERMITICITY_TOL:
            raise ValidationError("density matrix must be Hermitian within 1e-12")
        if abs(np.trace(arr).real - 1.0) > _TRACE_TOL or abs(np.trace(arr).imag) > _TRACE_TOL:
            raise ValidationError("density matrix must have unit trace within 1e-12")
        if np.min(np.linalg.eigvalsh(arr)) < -_EIGENVALUE_TOL:
            raise ValidationError("density matrix must be positive semidefinite within 1e-12")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @classmethod
    def from_spectrum(cls, values) -> "DensityMatrix":
        return cls(np.diag(np.asarray(values, dtype=np.float64)))

    @property
    def dim(self) -> int:
        return int(self.entries.shape[0])

    def spectrum(self) -> Spectrum:
        return Spectrum(np.linalg.eigvalsh(self.entries))


def _as_spectrum(obj) -> Spectrum:
    if isinstance(obj, Spectrum):
        return obj
    if isinstance(obj, DensityMatrix):
        return obj.spectrum()
    return Spectrum(np.asarray(obj, dtype=np.float64))


def _check_n(n) -> int:
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool) or n < 1:
        raise ValidationError("n must be a positive integer")
    return int(n)


def maximum_information_state(d: int) -> DensityMatrix:
    """The maximally mixed state 1/d: entropy ln d, the largest possible."""
    if not isinstance(d, (int, np.integer)) or not MIN_DIM <= d <= MAX_DIM:
        raise ValidationError(f"d must be an integer in [{MIN_DIM}, {MAX_DIM}]")
    return DensityMatrix(np.eye(int(d)) / float(d))


def von_neumann_information_change(rho1, rho2, n: int) -> InformationChange:
    """ΔI = n*(S(rho2) - S(rho1)). Accepts DensityMatrix or Spectrum inputs."""
    n = _check_n(n)
    s1 = _as_spectrum(rho1)
    s2 = _as_spectrum(rho2)
    if s1.dim != s2.dim:
        raise ValidationError("rho1 and rho2 must have equal dimension")
    return InformationChange(n * (s2.entropy() - s1.entropy()))


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


@dataclass(frozen=True)
class TypicalProjectorSpec:
    """Delta-typical projector for spectrum^{(x)n}, stored as the list of
    included eigenvalue-index type classes (count vectors over the d levels).
    rank is exact (big-integer multinomial sums); log_dim = ln(rank).
    """

    spectrum: np.ndarray
    n: int
    delta: float
    classes: np.ndarray
    multiplicities: tuple
    rank: int
    log_dim: float


def typical_projector(spectrum, n: int, delta: float) -> TypicalProjectorSpec:
    """Enumerate type classes (k_1..k_d), sum k = n, keeping those with

        | -(1/n) sum_j k_j ln p_j  -  S(rho1) | <= delta  (+ 1e-12 slack).

    Classes touching zero eigenvalues are excluded outright (probability 0).
    With a flat spectrum and delta = 0 this is exactly the support projector,
    rank k^n for k nonzero levels.
    """
    spec = _as_spectrum(spectrum)
    n = _check_n(n)
    if not isinstance(delta, (int, float)) or isinstance(delta, bool) or not math.isfinite(delta) or delta < 0:
        raise ValidationError("delta must be a finite nonnegative number (nats per system)")
    delta = float(delta)
    d = spec.dim
    n_classes = math.comb(n + d - 1, d - 1)
    if n_classes > TYPE_CLASS_LIMIT:
        raise EnumerationLimitError(
            f"{n_classes} type classes for (n={n}, d={d}) exceed the enumeration limit {TYPE_CLASS_LIMIT}"
        )
    p = spec.values
    support = [j for j in range(d) if p[j] > 0.0]
    logp = np.log(p[support])
    i1 = spec.entropy()
    fact = [math.factorial(i) for i in range(n + 1)]
    rows = []
    mults = []
    rank = 0
    for ks in _compositions(n, len(support)):
        rate = -math.fsum(k * lp for k, lp in zip(ks, logp)) / n
        if abs(rate - i1) <= delta + TYPICALITY_ATOL:
            mult = fact[n]
            for k in ks:
                mult //= fact[k]
            full = [0] * d
            for j, k in zip(support, ks):
                full[j] = k
            rows.append(full)
            mults.append(mult)
            rank += mult
    classes = np.array(rows, dtype=np.int64).reshape(len(rows), d)
    classes.setflags(write=False)
    log_dim = math.log(rank) if rank > 0 else -math.inf
    return TypicalProjectorSpec(
        spectrum=spec.values, n=n, delta=delta, classes=classes,
        multiplicities=tuple(mults), rank=rank, log_dim=log_dim,
    )


def projector_traces(spec: TypicalProjectorSpec, spectrum, d: int) -> tuple[float, float]:
    """(tr_xi, tr_eta) = (tr(E1 rho1^{(x)n}), tr(E1 (1/d)^{(x)n})).

    tr_xi sums multinomial(n;k) * prod p_j^k_j over included classes, each
    term built in log space; tr_eta is the exact rank divided by d^n. Both
    are clamped into [0, 1] (the mathematical values are; only float
    round-off can stray).
    """
    sp = _as_spectrum(spectrum)
    if not isinstance(d, (int, np.integer)) or int(d) != sp.dim:
        raise ValidationError(f"d = {d} does not match the spectrum dimension {sp.dim}")
    if spec.spectrum.shape != sp.values.shape or not np.array_equal(spec.spectrum, sp.values):
        raise ValidationError("projector was built from a different spectrum")
    n = spec.n
    p = sp.values
    terms = []
    for row, mult in zip(spec.classes, spec.multiplicities):
        log_prob = math.fsum(int(k) * math.log(p[j]) for j, k in enumerate(row) if k > 0)
        if mult <= 2**53:
            terms.append(mult * math.exp(log_prob))
        else:
            terms.append(math.exp(math.log(mult) + log_prob))
    tr_xi = min(1.0, max(0.0, math.fsum(terms)))
    tr_eta = spec.rank / (sp.dim ** n)
    tr_eta = min(1.0, max(0.0, tr_eta))
    return tr_xi, tr_eta


def brute_force_traces(spectrum, n: int, delta: float) -> tuple[float, float]:
    """Oracle: enumerate all d^n eigenstrings directly, applying the same
    typicality rule per string. Small instances only (d^n <= 2^17)."""
    sp = _as_spectrum(spectrum)
    n = _check_n(n)
    d = sp.dim
    total = d**n
    if total > BRUTE_FORCE_LIMIT:
        raise EnumerationLimitError(f"d^n = {total} exceeds the brute-force limit {BRUTE_FORCE_LIMIT}")
    p = sp.values
    i1 = sp.entropy()
    count = 0
    mass = []
    for string in itertools.product(range(d), repeat=n):
        if any(p[s] == 0.0 for s in string):
            continue
        rate = -math.fsum(math.log(p[s]) for s in string) / n
        if abs(rate - i1) <= float(delta) + TYPICALITY_ATOL:
            count += 1
            mass.append(math.prod(p[s] for s in string))
    tr_xi = min(1.0, max(0.0, math.fsum(mass)))
    return tr_xi, count / total


@dataclass(frozen=True)
class OutcomePair:
    """Bernoulli parameters of the E1 measurement under the two idealized
    hypotheses: forward measures the relaxed state, reversed the initial one."""

    p_one_forward: float
    p_one_reversed: float

    def __post_init__(self):
        for name in ("p_one_forward", "p_one_reversed"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not 0.0 <= float(v) <= 1.0:
                raise ValidationError(f"{name} must be a probability in [0, 1]")
            object.__setattr__(self, name, float(v))


def _as_delta_i(delta_i) -> float:
    if isinstance(delta_i, InformationChange):
        v = delta_i.delta_i
    elif isinstance(delta_i, (int, float)) and not isinstance(delta_i, bool):
        v = float(delta_i)
    else:
        raise ValidationError(f"delta_i must be a number or InformationChange, got {delta_i!r}")
    if not math.isfinite(v):
        raise ValidationError("delta_i must be finite")
    if v < 0.0:
        raise ValidationError("delta_i must be nonnegative (the final state is maximally mixed)")
    return v


def outcome_distributions(delta_i) -> OutcomePair:
    """Idealized laws: P(E1=1) = e^{-ΔI} forward, = 1 reversed."""
    di = _as_delta_i(delta_i)
    return OutcomePair(p_one_forward=math.exp(-di), p_one_reversed=1.0)


@dataclass(frozen=True)
class ArrowPosterior:
    p_plus: float
    p_minus: float

    def __post_init__(self):
        for name in ("p_plus", "p_minus"):
            v = float(getattr(self, name))
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"{name} must be a probability in [0, 1]")
            object.__setattr__(self, name, v)

    def probability_of(self, s: TimeArrow) -> float:
        if s is TimeArrow.PLUS:
            return self.p_plus
        if s is TimeArrow.MINUS:
            return self.p_minus
        raise ValidationError("posterior is defined for PLUS and MINUS only")


def infer_arrow_from_outcome(e1, delta_i) -> ArrowPosterior:
    """Bayes posterior after one E1 measurement under the idealized laws.

    Outcome 1 carries statistic D = -ΔI, so P(+|1) = 1/(1 + e^{ΔI}).
    Outcome 0 is impossible under the reversed law; the posterior is the
    point mass on PLUS (no infinite statistic is formed). At ΔI = 0 outcome
    0 is impossible under both laws and is rejected as degenerate.
    """
    di = _as_delta_i(delta_i)
    if isinstance(e1, bool) or (isinstance(e1, (int, np.integer)) and e1 in (0, 1)):
        e1 = int(e1)
    else:
        raise ValidationError(f"e1 must be 0 or 1, got {e1!r}")
    if e1 == 1:
        return ArrowPosterior(
            p_plus=arrow_probability(-di, TimeArrow.PLUS),
            p_minus=arrow_probability(-di, TimeArrow.MINUS),
        )
    if di == 0.0:
        raise DegenerateSupportError(
            "outcome 0 has probability zero under both hypotheses when delta_i = 0"
        )
    return ArrowPosterior(p_plus=1.0, p_minus=0.0)


def fidelity_closed_form(delta_i) -> float:
    """F = 1/(1 + e^{-ΔI})."""
    return arrow_probability(_as_delta_i(delta_i), TimeArrow.PLUS)


def fidelity_two_outcome_sum(delta_i) -> float:
    """Mean fidelity assembled outcome by outcome:
    (1/2) sum_s sum_{E1} P(E1|s) * posterior(s|E1). Algebraically equal to
    fidelity_closed_form; evaluating both is a two-route consistency check.
    """
    di = _as_delta_i(delta_i)
    q = math.exp(-di)
    post_plus_one = arrow_probability(-di, TimeArrow.PLUS)
    post_minus_one = arrow_probability(-di, TimeArrow.MINUS)
    e_plus = (1.0 - q) * 1.0 + q * post_plus_one
    e_minus = 1.0 * post_minus_one
    return 0.5 * (e_plus + e_minus)


@dataclass(frozen=True)
class QuantumFidelityRecord:
    spectrum: Spectrum
    d: int
    n: int
    delta: float
    n_trials: int
    master_seed: int
    delta_i: float
    tr_xi: float
    tr_eta: float
    rank: int
    f_closed: float
    f_empirical: FidelityEstimate
    counts: dict


def fidelity_experiment(
    rho1, d: int, n: int, delta: float, n_trials: int, master_seed: int
) -> QuantumFidelityRecord:
    """Simulate the one-measurement arrow guess.

    Each trial draws the true arrow uniformly, samples E1 from the TRUE trace
    for that arm (forward: Bernoulli(tr_eta); reversed: Bernoulli(tr_xi)),
    applies infer_arrow_from_outcome at the exact ΔI, and scores the
    posterior mass on the truth. In the flat-spectrum delta=0 regime the true
    traces coincide with the idealized laws and the empirical mean estimates
    fidelity_closed_form(ΔI) unbiasedly.
    """
    spec = _as_spectrum(rho1)
    if not isinstance(d, (int, np.integer)) or int(d) != spec.dim:
        raise ValidationError(f"d = {d} does not match the spectrum dimension {spec.dim}")
    if not isinstance(n_trials, (int, np.integer)) or n_trials < 2:
        raise ValidationError("n_trials must be an integer >= 2")
    master_seed = check_master_seed(master_seed)
    proj = typical_projector(spec, n, delta)
    if proj.rank == 0:
        raise DegenerateSupportError(
            "no type class is delta-typical; the measurement is empty (increase delta)"
        )
    tr_xi, tr_eta = projector_traces(proj, spec, int(d))
    di = int(n) * (math.log(spec.dim) - spec.entropy())
    di = max(0.0, di)

    gen = substream(master_seed, LANE_QUANTUM, 0)
    u = gen.random((int(n_trials), 2))
    truth_plus = u[:, 0] < 0.5
    p_one = np.where(truth_plus, tr_eta, tr_xi)
    one = u[:, 1] < p_one

    post_plus_one = arrow_probability(-di, TimeArrow.PLUS)
    post_minus_one = arrow_probability(-di, TimeArrow.MINUS)
    scores = np.where(
        one,
        np.where(truth_plus, post_plus_one, post_minus_one),
        np.where(truth_plus, 1.0, 0.0),
    )
    mean = float(np.mean(scores))
    se = float(np.std(scores, ddof=1) / math.sqrt(scores.size))
    counts = {
        "plus_one": int(np.sum(truth_plus & one)),
        "plus_zero": int(np.sum(truth_plus & ~one)),
        "minus_one": int(np.sum(~truth_plus & one)),
        "minus_zero": int(np.sum(~truth_plus & ~one)),
    }
    return QuantumFidelityRecord(
        spectrum=spec, d=int(d), n=int(n), delta=float(delta),
        n_trials=int(n_trials), master_seed=master_seed,
        delta_i=di, tr_xi=tr_xi, tr_eta=tr_eta, rank=proj.rank,
        f_closed=fidelity_closed_form(di),
        f_empirical=FidelityEstimate(mean=mean, std_error=se, sample_count=int(n_trials)),
        counts=counts,
    )
