"""Overdamped driven Langevin dynamics and its path-functional statistics.

A scalar coordinate relaxes toward a moving anchor X̄(t):

    dX = -lam * (X - X̄(t)) dt + sqrt(2*gamma) dW,

integrated by Euler-Maruyama on a uniform grid t_k = t1 + k*dt,

    X_{k+1} = X_k - lam*(X_k - X̄_k)*dt + sqrt(2*gamma*dt)*Z_k.

The information change along a discrete path uses midpoint (Stratonovich)
evaluation,

    ΔI(X) = (lam/gamma) * sum_k (X̄mid_k - Xmid_k) * (X_{k+1} - X_k),

and the Onsager-Machlup log-weight of a path is

    log w(X) = -(1/(4*gamma)) * sum_k [ΔX_k/dt + lam*(Xmid_k - X̄mid_k)]^2 * dt.

With these conventions log w(X) - log w(X̃) = ΔI(X) holds per path as an
algebraic identity at any finite dt, where X̃ is the reversed path under the
reversed protocol. The decision statistic adds the stationary boundary terms:

    D(X) = ΔI(X) + log P2(eta) - log P1(xi),

with P1, P2 the stationary Gaussians anchored at X̄(t1), X̄(t2) (variance
gamma/lam). D is the log-likelihood ratio entering the arrow posterior.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernel_numpy
from ._streams import (
    LANE_LANGEVIN_FORWARD,
    LANE_LANGEVIN_REVERSE,
    check_master_seed,
    substream,
)
from .arrow import DecisionStatistic, InformationChange, Provenance
from .backends import default_backend, get_kernel
from .errors import GridMismatchError, ValidationError

# target elements per per-chunk noise buffer (~64 MB of float64)
_CHUNK_TARGET = 8_000_000

_INV_SQRT2 = 1.0 / math.sqrt(2.0)


@dataclass(frozen=True)
class LangevinParams:
    """Integration parameters. gamma = 0 is the noise-free limit; the path
    functionals that divide by gamma require gamma > 0."""

    lam: float
    gamma: float
    dt: float
    t1: float = 0.0
    t2: float = 1.0

    def __post_init__(self):
        for name in ("lam", "gamma", "dt", "t1", "t2"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
                raise ValidationError(f"{name} must be a finite number, got {v!r}")
            object.__setattr__(self, name, float(v))
        if self.lam <= 0.0:
            raise ValidationError("lam must be positive")
        if self.gamma < 0.0:
            raise ValidationError("gamma must be nonnegative")
        if self.dt <= 0.0:
            raise ValidationError("dt must be positive")
        span = self.t2 - self.t1
        if span <= 0.0:
            raise ValidationError("t2 must exceed t1")
        n = span / self.dt
        n_round = round(n)
        if n_round < 1 or abs(n - n_round) > 1e-9 * max(1.0, n):
            raise ValidationError(
                f"(t2 - t1)/dt = {n!r} is not a positive integer step count"
            )
        object.__setattr__(self, "_n_steps", int(n_round))

    @property
    def n_steps(self) -> int:
        return self._n_steps

    @property
    def times(self) -> np.ndarray:
        return self.t1 + self.dt * np.arange(self.n_steps + 1)

    @property
    def stationary_variance(self) -> float:
        if self.gamma == 0.0:
            return 0.0
        return self.gamma / self.lam


def _as_grid_values(values, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 2:
        raise ValidationError(f"{what} must be a 1-d sequence of at least 2 values")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{what} contains non-finite values")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Protocol:
    """Anchor values X̄ sampled on the integration grid (length n_steps+1)."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _as_grid_values(self.values, "protocol"))

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class Path:
    """Trajectory values X_k on the integration grid (length n_steps+1)."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _as_grid_values(self.values, "path"))

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class PathWeight:
    """Unnormalized Onsager-Machlup log-weight of one discrete path."""

    log_weight: float

    def __post_init__(self):
        if not math.isfinite(self.log_weight):
            raise ValidationError("log_weight must be finite")


def reverse(seq):
    """Time-reverse a Path or Protocol. An involution: reverse(reverse(s)) == s."""
    if isinstance(seq, Path):
        return Path(seq.values[::-1].copy())
    if isinstance(seq, Protocol):
        return Protocol(seq.values[::-1].copy())
    raise ValidationError(f"reverse expects a Path or Protocol, got {type(seq).__name__}")


def _check_grid(params: LangevinParams, *seqs) -> None:
    want = params.n_steps + 1
    for seq in seqs:
        if len(seq) != want:
            raise GridMismatchError(
                f"{type(seq).__name__} has {len(seq)} grid values, params imply {want}"
            )


def constant_protocol(params: LangevinParams, value: float) -> Protocol:
    return Protocol(np.full(params.n_steps + 1, float(value)))


def protocol_from_points(points, params: LangevinParams, interp: str = "previous") -> Protocol:
    """Sample a piecewise protocol onto the integration grid.

    points: sequence of (t, x) pairs with non-decreasing t. interp "previous"
    holds the most recent value (right-continuous steps; the natural choice
    for quenches) and extends the last value rightward; "linear" interpolates
    and requires the points to cover [t1, t2].
    """
    pts = [(float(t), float(x)) for t, x in points]
    if not pts:
        raise ValidationError("protocol needs at least one point")
    ts = np.array([p[0] for p in pts])
    xs = np.array([p[1] for p in pts])
    if not (np.all(np.isfinite(ts)) and np.all(np.isfinite(xs))):
        raise ValidationError("protocol points must be finite")
    if np.any(np.diff(ts) < 0):
        raise ValidationError("protocol point times must be non-decreasing")
    slack = 1e-9 * max(1.0, abs(params.t1), abs(params.t2))
    if ts[0] > params.t1 + slack:
        raise ValidationError("first protocol point must not start after t1")
    if interp == "previous":
        grid = params.times
        idx = np.searchsorted(ts, grid, side="right") - 1
        idx = np.clip(idx, 0, ts.size - 1)
        return Protocol(xs[idx])
    if interp == "linear":
        if ts[-1] < params.t2 - slack:
            raise ValidationError("linear protocol points must cover t2")
        return Protocol(np.interp(params.times, ts, xs))
    raise ValidationError(f"interp must be 'previous' or 'linear', got {interp!r}")


def stationary_sample(params: LangevinParams, x_bar: float, rng: np.random.Generator) -> float:
    """Draw from the stationary law N(x_bar, gamma/lam) of a frozen anchor."""
    sd = math.sqrt(params.stationary_variance)
    return float(x_bar + sd * rng.standard_normal())


def simulate_path(
    params: LangevinParams,
    protocol: Protocol,
    x0: float,
    rng: np.random.Generator | None = None,
) -> Path:
    """Integrate one trajectory from x0. rng may be omitted only when gamma=0."""
    _check_grid(params, protocol)
    if not math.isfinite(x0):
        raise ValidationError("x0 must be finite")
    n = params.n_steps
    if params.gamma > 0.0:
        if rng is None:
            raise ValidationError("rng is required when gamma > 0")
        z = rng.standard_normal(n)
    else:
        z = np.zeros(n)
    a = params.lam * params.dt
    sigma = math.sqrt(2.0 * params.gamma * params.dt)
    x0v = np.array([float(x0)])
    paths, _ = _kernel_numpy.em_chunk_store(x0v, z.reshape(1, n), protocol.values, a, sigma)
    return Path(paths[0])


def _require_noisy(params: LangevinParams, op: str) -> None:
    if params.gamma <= 0.0:
        raise ValidationError(f"{op} requires gamma > 0")


def entropy_production(path: Path, protocol: Protocol, params: LangevinParams) -> InformationChange:
    """Midpoint-discretized information change ΔI(X) along one path.

    Exactly antisymmetric under joint reversal of path and protocol: the
    reversed evaluation yields the bitwise negation (the term list maps to
    its elementwise negation and fsum is correctly rounded).
    """
    _require_noisy(params, "entropy_production")
    _check_grid(params, path, protocol)
    x = path.values
    xb = protocol.values
    dx = np.diff(x)
    xm = 0.5 * (x[:-1] + x[1:])
    xbm = 0.5 * (xb[:-1] + xb[1:])
    total = math.fsum((xbm - xm) * dx)
    return InformationChange((params.lam / params.gamma) * total)


def om_log_weight(path: Path, protocol: Protocol, params: LangevinParams) -> PathWeight:
    """Onsager-Machlup log-weight (unnormalized; the Gaussian normalization
    constant is protocol-independent and cancels from every ratio used here)."""
    _require_noisy(params, "om_log_weight")
    _check_grid(params, path, protocol)
    x = path.values
    xb = protocol.values
    dt = params.dt
    dxdt = np.diff(x) / dt
    xm = 0.5 * (x[:-1] + x[1:])
    xbm = 0.5 * (xb[:-1] + xb[1:])
    r = dxdt + params.lam * (xm - xbm)
    total = math.fsum(r * r * dt)
    return PathWeight(-total / (4.0 * params.gamma))


def _boundary(xi, eta, m1: float, m2: float, variance: float):
    return (np.square(xi - m1) - np.square(eta - m2)) / (2.0 * variance)


def boundary_log_correction(
    xi: float, eta: float, protocol: Protocol, params: LangevinParams
) -> float:
    """log P2(eta) - log P1(xi) for the stationary Gaussians anchored at the
    protocol endpoints (means X̄(t1), X̄(t2), common variance gamma/lam).
    Subtracting this from ΔI turns the bare path-weight ratio into the full
    trajectory-law ratio: D = ΔI - correction."""
    _require_noisy(params, "boundary_log_correction")
    if not (math.isfinite(xi) and math.isfinite(eta)):
        raise ValidationError("xi and eta must be finite")
    m1 = float(protocol.values[0])
    m2 = float(protocol.values[-1])
    return float(_boundary(xi, eta, m1, m2, params.stationary_variance))


def d_statistic(path: Path, protocol: Protocol, params: LangevinParams) -> DecisionStatistic:
    """Decision statistic D(X) = ΔI(X) - [((xi-m1)^2 - (eta-m2)^2) / (2 v)].

    Equal to log of (forward trajectory law / reversed trajectory law) at X
    when both arms start in the stationary state of their initial anchor.
    """
    di = entropy_production(path, protocol, params).delta_i
    corr = boundary_log_correction(
        float(path.values[0]), float(path.values[-1]), protocol, params
    )
    return DecisionStatistic(di - corr, provenance=Provenance.THERMODYNAMIC)


@dataclass(frozen=True)
class ArmRecord:
    """Per-path results for one experiment arm.

    xi, eta are initial/final coordinates, delta_i the information change,
    d the decision statistic. paths is the full (n_paths, n_steps+1)
    trajectory block when the run stored it, else None.
    """

    xi: np.ndarray
    eta: np.ndarray
    delta_i: np.ndarray
    d: np.ndarray
    paths: np.ndarray | None = None

    @property
    def n_paths(self) -> int:
        return int(self.d.size)


@dataclass(frozen=True)
class ForwardReverseRecord:
    forward: ArmRecord
    reverse: ArmRecord
    params: LangevinParams
    n_paths: int
    master_seed: int
    backend: str


@dataclass(frozen=True)
class CoupledRefinementRecord:
    """Same Brownian forcing integrated at dt and dt/2 (coarse increments are
    pair-sums of the fine ones), isolating the discretization effect from
    Monte Carlo noise."""

    coarse: ArmRecord
    fine: ArmRecord
    params_coarse: LangevinParams
    params_fine: LangevinParams
    n_paths: int
    master_seed: int
    backend: str


def _chunk_size(n_steps: int, n_paths: int, chunk_paths: int | None) -> int:
    if chunk_paths is not None:
        if chunk_paths < 1:
            raise ValidationError("chunk_paths must be positive")
        return min(chunk_paths, n_paths)
    return max(16, min(n_paths, _CHUNK_TARGET // max(1, n_steps)))


def _run_chunks(n_paths: int, chunk: int, threads: int, work) -> None:
    starts = list(range(0, n_paths, chunk))
    if threads <= 1:
        for s in starts:
            work(s, min(s + chunk, n_paths))
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futs = [pool.submit(work, s, min(s + chunk, n_paths)) for s in starts]
        for f in futs:
            f.result()


def _finalize_arm(xi, eta, di, m1, m2, variance, paths=None) -> ArmRecord:
    d = di - _boundary(xi, eta, m1, m2, variance)
    for arr in (xi, eta, di, d):
        arr.setflags(write=False)
    if paths is not None:
        paths.setflags(write=False)
    return ArmRecord(xi=xi, eta=eta, delta_i=di, d=d, paths=paths)


def _run_arm(
    params: LangevinParams,
    protocol: Protocol,
    n_paths: int,
    master_seed: int,
    lane: int,
    kernel,
    store_paths: bool = False,
    threads: int = 1,
    chunk_paths: int | None = None,
) -> ArmRecord:
    n = params.n_steps
    xb = protocol.values
    a = params.lam * params.dt
    sigma = math.sqrt(2.0 * params.gamma * params.dt)
    v = params.stationary_variance
    sd = math.sqrt(v)
    m1 = float(xb[0])
    m2 = float(xb[-1])
    coef = params.lam / params.gamma

    xi = np.empty(n_paths)
    eta = np.empty(n_paths)
    di = np.empty(n_paths)
    paths = np.empty((n_paths, n + 1)) if store_paths else None

    def work(start: int, stop: int) -> None:
        m = stop - start
        z = np.empty((m, n))
        x0 = np.empty(m)
        for j in range(m):
            gen = substream(master_seed, lane, start + j)
            x0[j] = m1 + sd * gen.standard_normal()
            gen.standard_normal(out=z[j])
        if store_paths:
            block, acc = _kernel_numpy.em_chunk_store(x0, z, xb, a, sigma)
            paths[start:stop] = block
            e = block[:, -1].copy()
        else:
            e, acc = kernel(x0, z, xb, a, sigma)
        xi[start:stop] = x0
        eta[start:stop] = e
        di[start:stop] = coef * acc

    chunk = _chunk_size(n, n_paths, chunk_paths)
    _run_chunks(n_paths, chunk, threads, work)
    return _finalize_arm(xi, eta, di, m1, m2, v, paths)


def _check_experiment_args(params: LangevinParams, n_paths: int, threads: int) -> None:
    _require_noisy(params, "path-ensemble experiments")
    if not isinstance(n_paths, (int, np.integer)) or n_paths < 1:
        raise ValidationError("n_paths must be a positive integer")
    if not isinstance(threads, (int, np.integer)) or threads < 1:
        raise ValidationError("threads must be a positive integer")


def forward_reverse_experiment(
    params: LangevinParams,
    protocol: Protocol,
    n_paths: int,
    master_seed: int,
    backend: str | None = None,
    threads: int = 1,
    store_paths: bool = False,
    chunk_paths: int | None = None,
) -> ForwardReverseRecord:
    """Run both arms: forward paths start in the stationary state of X̄(t1)
    and follow the protocol; reverse paths start stationary at X̄(t2) and
    follow the reversed protocol. Each path has its own counter-based
    substream, so results are independent of chunking and thread count.
    """
    _check_experiment_args(params, n_paths, threads)
    _check_grid(params, protocol)
    master_seed = check_master_seed(master_seed)
    kernel = get_kernel(backend)
    name = backend if backend is not None else default_backend()
    fwd = _run_arm(
        params, protocol, n_paths, master_seed, LANE_LANGEVIN_FORWARD,
        kernel, store_paths=store_paths, threads=threads, chunk_paths=chunk_paths,
    )
    rev = _run_arm(
        params, reverse(protocol), n_paths, master_seed, LANE_LANGEVIN_REVERSE,
        kernel, store_paths=store_paths, threads=threads, chunk_paths=chunk_paths,
    )
    return ForwardReverseRecord(
        forward=fwd, reverse=rev, params=params,
        n_paths=int(n_paths), master_seed=master_seed, backend=name,
    )


def sample_forward_paths(
    params: LangevinParams,
    protocol: Protocol,
    n_paths: int,
    master_seed: int,
    threads: int = 1,
) -> ArmRecord:
    """Forward arm only, with full trajectories stored (NumPy path; the
    stored-trajectory kernel matches the fast kernels bitwise)."""
    _check_experiment_args(params, n_paths, threads)
    _check_grid(params, protocol)
    master_seed = check_master_seed(master_seed)
    return _run_arm(
        params, protocol, n_paths, master_seed, LANE_LANGEVIN_FORWARD,
        _kernel_numpy.em_chunk, store_paths=True, threads=threads,
    )


def coupled_refinement_experiment(
    params: LangevinParams,
    protocol_builder,
    n_paths: int,
    master_seed: int,
    backend: str | None = None,
    threads: int = 1,
) -> CoupledRefinementRecord:
    """Integrate the same paths at dt and dt/2.

    protocol_builder(params) -> Protocol must produce the protocol on the
    grid of whatever params it receives; it is called for both resolutions.
    The fine run consumes each path's substream directly; the coarse run uses
    increments Z'_k = (Z_{2k} + Z_{2k+1})/sqrt(2), which leaves the coarse
    law exactly what an independent dt-run would sample while making the
    coarse/fine difference an almost noise-free estimate of the dt effect.
    """
    _check_experiment_args(params, n_paths, threads)
    master_seed = check_master_seed(master_seed)
    params_fine = LangevinParams(
        lam=params.lam, gamma=params.gamma, dt=params.dt / 2.0, t1=params.t1, t2=params.t2
    )
    proto_c = protocol_builder(params)
    proto_f = protocol_builder(params_fine)
    _check_grid(params, proto_c)
    _check_grid(params_fine, proto_f)
    kernel = get_kernel(backend)
    name = backend if backend is not None else default_backend()

    n = params.n_steps
    nf = params_fine.n_steps
    a_c = params.lam * params.dt
    a_f = params_fine.lam * params_fine.dt
    sig_c = math.sqrt(2.0 * params.gamma * params.dt)
    sig_f = math.sqrt(2.0 * params_fine.gamma * params_fine.dt)
    v = params.stationary_variance
    sd = math.sqrt(v)
    m1 = float(proto_c.values[0])
    m2 = float(proto_c.values[-1])

    out = {
        "c": (np.empty(n_paths), np.empty(n_paths), np.empty(n_paths)),
        "f": (np.empty(n_paths), np.empty(n_paths), np.empty(n_paths)),
    }
    coef = params.lam / params.gamma

    def work(start: int, stop: int) -> None:
        m = stop - start
        zf = np.empty((m, nf))
        x0 = np.empty(m)
        for j in range(m):
            gen = substream(master_seed, LANE_LANGEVIN_FORWARD, start + j)
            x0[j] = m1 + sd * gen.standard_normal()
            gen.standard_normal(out=zf[j])
        zc = np.ascontiguousarray((zf[:, 0::2] + zf[:, 1::2]) * _INV_SQRT2)
        for tag, z, xb, a, sig in (
            ("c", zc, proto_c.values, a_c, sig_c),
            ("f", zf, proto_f.values, a_f, sig_f),
        ):
            e, acc = kernel(x0, z, xb, a, sig)
            xi_o, eta_o, di_o = out[tag]
            xi_o[start:stop] = x0
            eta_o[start:stop] = e
            di_o[start:stop] = coef * acc

    chunk = _chunk_size(nf, n_paths, None)
    _run_chunks(n_paths, chunk, threads, work)
    coarse = _finalize_arm(*out["c"], m1, m2, v)
    fine = _finalize_arm(*out["f"], m1, m2, v)
    return CoupledRefinementRecord(
        coarse=coarse, fine=fine, params_coarse=params, params_fine=params_fine,
        n_paths=int(n_paths), master_seed=master_seed, backend=name,
    )
