"""Executable acceptance checks.

Each criterion is a self-contained function returning a CriterionResult with
measured numbers, so the same code drives both the test suite and the
`verify` CLI subcommand. Seeds are fixed constants: the statistical checks
are calibrated, not cherry-picked per run.

Two checks are expected to fail and are flagged as documented defects:

* "5" applies the detailed fluctuation relation to histograms of the bare
  information change ΔI. The relation log[P_F(x)/P_R(-x)] = x holds for the
  full decision statistic D (it is exact per path), but ΔI differs from D by
  stationary boundary terms whose fluctuations do not vanish with more
  sampling; the measured deviation grows roughly like |x|/3 across the
  histogram and exceeds the 0.15 tolerance at every usable bin edge.
  Check "5s" runs the identical histogram procedure on D and passes.

* "9a" asks the criterion-3 residual to shrink by >= 1.9x when dt is halved.
  That residual is an algebraic identity satisfied at every dt; what is
  measured is pure floating-point round-off of ~2500-term sums, which grows
  (roughly doubles) as steps double rather than shrinking. Check "9s"
  confirms the actual first-order convergence on a deterministic relaxation,
  and "9b" covers the distributional dt-dependence.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import classical, langevin, quantum
from .arrow import TimeArrow, arrow_probability, exact_mean_fidelity, log_ratio
from .backends import default_backend

CANONICAL_PARAMS = langevin.LangevinParams(lam=1.0, gamma=0.5, dt=1e-3, t1=0.0, t2=5.0)


def canonical_quench(params: langevin.LangevinParams) -> langevin.Protocol:
    """Unit quench at mid-protocol: X̄ = 0 for t < (t1+t2)/2, then 1."""
    mid = 0.5 * (params.t1 + params.t2)
    return langevin.protocol_from_points(
        [[params.t1, 0.0], [mid, 1.0]], params, interp="previous"
    )


@dataclass
class CriterionResult:
    index: str
    name: str
    passed: bool
    expected_failure: bool
    detail: str
    runtime_seconds: float
    measured: dict = field(default_factory=dict)


def format_line(r: CriterionResult) -> str:
    if r.passed:
        status = "PASS"
    elif r.expected_failure:
        status = "FAIL (expected: documented defect)"
    else:
        status = "FAIL"
    return f"[{r.index:>2}] {status:<34} {r.name}: {r.detail} ({r.runtime_seconds:.2f}s)"


def _result(index, name, passed, detail, start, expected_failure=False, **measured):
    return CriterionResult(
        index=index, name=name, passed=bool(passed),
        expected_failure=expected_failure, detail=detail,
        runtime_seconds=time.monotonic() - start, measured=measured,
    )


def criterion_1(backend=None, threads=1) -> CriterionResult:
    """Pure initial state, d=2: empirical fidelity matches 1/(1+2^-n) within
    3 SE for n = 1..12, and the two-outcome sum equals it to 1e-12."""
    start = time.monotonic()
    max_z = 0.0
    max_sum_dev = 0.0
    ok = True
    for n in range(1, 13):
        rec = quantum.fidelity_experiment([1.0, 0.0], 2, n, 0.0, 100_000, 1101 + n)
        closed = rec.f_closed
        z = abs(rec.f_empirical.mean - closed) / rec.f_empirical.std_error
        max_z = max(max_z, z)
        sum_dev = abs(quantum.fidelity_two_outcome_sum(rec.delta_i) - closed)
        max_sum_dev = max(max_sum_dev, sum_dev)
        ok = ok and z <= 3.0 and sum_dev <= 1e-12
    runtime = time.monotonic() - start
    ok = ok and runtime < 10.0
    return _result(
        "1", "quantum-fidelity-law", ok,
        f"max|z|={max_z:.2f} (<=3), max two-outcome dev={max_sum_dev:.1e} (<=1e-12)",
        start, max_z=max_z, max_sum_dev=max_sum_dev,
    )


def criterion_2(backend=None, threads=1) -> CriterionResult:
    """Flat-on-k spectra: tr_xi = 1 and tr_eta = e^{-ΔI} to 1e-12, matching
    brute-force enumeration of all d^n eigenstrings."""
    start = time.monotonic()
    worst = 0.0
    ok = True
    for k, d, n in ((1, 2, 3), (2, 4, 2), (2, 2, 5)):
        spectrum = [1.0 / k] * k + [0.0] * (d - k)
        proj = quantum.typical_projector(spectrum, n, 0.0)
        tr_xi, tr_eta = quantum.projector_traces(proj, spectrum, d)
        di = n * math.log(d / k)
        bf_xi, bf_eta = quantum.brute_force_traces(spectrum, n, 0.0)
        devs = (
            abs(tr_xi - 1.0),
            abs(tr_eta - math.exp(-di)),
            abs(tr_xi - bf_xi),
            abs(tr_eta - bf_eta),
        )
        worst = max(worst, *devs)
        ok = ok and proj.rank == k**n and all(dev <= 1e-12 for dev in devs)
    runtime = time.monotonic() - start
    ok = ok and runtime < 5.0
    return _result(
        "2", "flat-regime-exactness", ok,
        f"max deviation={worst:.1e} (<=1e-12), ranks exact",
        start, max_deviation=worst,
    )


def _identity_residuals(params: langevin.LangevinParams, n_paths: int, seed: int) -> np.ndarray:
    proto = canonical_quench(params)
    arm = langevin.sample_forward_paths(params, proto, n_paths, seed)
    proto_rev = langevin.reverse(proto)
    res = np.empty(n_paths)
    for i in range(n_paths):
        path = langevin.Path(arm.paths[i])
        om_f = langevin.om_log_weight(path, proto, params).log_weight
        om_r = langevin.om_log_weight(langevin.reverse(path), proto_rev, params).log_weight
        di = langevin.entropy_production(path, proto, params).delta_i
        res[i] = abs((om_f - om_r) - di)
    return res


def criterion_3(backend=None, threads=1) -> CriterionResult:
    """Per-path identity om(fwd) - om(rev) = ΔI to 1e-9 on 1000 sampled
    quench paths."""
    start = time.monotonic()
    res = _identity_residuals(CANONICAL_PARAMS, 1000, 3301)
    max_res = float(np.max(res))
    runtime = time.monotonic() - start
    ok = max_res <= 1e-9 and runtime < 5.0
    return _result(
        "3", "discrete-fluctuation-identity", ok,
        f"max residual={max_res:.2e} (<=1e-9) over 1000 paths",
        start, max_residual=max_res,
    )


def criterion_4(backend=None, threads=1) -> CriterionResult:
    """<e^{-D}> = 1 within 3 SE over 1e5 stationary forward quench paths."""
    start = time.monotonic()
    rec = langevin.forward_reverse_experiment(
        CANONICAL_PARAMS, canonical_quench(CANONICAL_PARAMS), 100_000, 4401,
        backend=backend, threads=threads,
    )
    w = np.exp(-rec.forward.d)
    mean = float(np.mean(w))
    se = float(np.std(w, ddof=1) / math.sqrt(w.size))
    runtime = time.monotonic() - start
    ok = abs(mean - 1.0) <= 3.0 * se and runtime < 60.0
    return _result(
        "4", "integral-relation", ok,
        f"<e^-D>={mean:.4f} +/- {se:.4f} (3 SE window around 1)",
        start, mean=mean, se=se,
    )


def crooks_table(fwd: np.ndarray, rev: np.ndarray, bin_width: float = 0.25,
                 min_count: int = 500) -> list:
    """Histogram check of log[P_F(x)/P_R(-x)] = x on zero-aligned bins.

    Returns rows (center, count_fwd, count_rev_mirror, deviation) for every
    bin where both the bin and its mirror hold >= min_count paths. Equal
    sample counts in both arms let counts stand in for densities.
    """
    if fwd.size != rev.size:
        raise ValueError("arms must have equal path counts")
    bf: dict = {}
    for b in np.floor(fwd / bin_width).astype(np.int64):
        bf[int(b)] = bf.get(int(b), 0) + 1
    br: dict = {}
    for b in np.floor(rev / bin_width).astype(np.int64):
        br[int(b)] = br.get(int(b), 0) + 1
    rows = []
    for b in sorted(bf):
        mirror = -b - 1
        cf = bf[b]
        cr = br.get(mirror, 0)
        if cf >= min_count and cr >= min_count:
            center = (b + 0.5) * bin_width
            rows.append((center, cf, cr, math.log(cf / cr) - center))
    return rows


def _histogram_ft(values_attr: str, index: str, name: str, expected_failure: bool,
                  backend, threads) -> CriterionResult:
    start = time.monotonic()
    rec = langevin.forward_reverse_experiment(
        CANONICAL_PARAMS, canonical_quench(CANONICAL_PARAMS), 100_000, 5501,
        backend=backend, threads=threads,
    )
    fwd = getattr(rec.forward, values_attr)
    rev = getattr(rec.reverse, values_attr)
    rows = crooks_table(fwd, rev)
    if not rows:
        return _result(index, name, False, "no bin pair reached 500 counts", start,
                       expected_failure=expected_failure)
    max_dev = max(abs(r[3]) for r in rows)
    ok = max_dev <= 0.15
    return _result(
        index, name, ok,
        f"max|log-ratio dev|={max_dev:.3f} (<=0.15) over {len(rows)} qualifying bins",
        start, expected_failure=expected_failure, max_deviation=max_dev, bins=len(rows),
    )


def criterion_5(backend=None, threads=1) -> CriterionResult:
    """Histogram fluctuation relation applied to ΔI, as stated. Fails by a
    documented margin: ΔI omits the boundary terms that make the relation
    exact, and their fluctuations tilt the log-ratio by about x/3."""
    return _histogram_ft("delta_i", "5", "histogram-ft-information-change", True,
                         backend, threads)


def criterion_5s(backend=None, threads=1) -> CriterionResult:
    """Same histogram procedure on the full decision statistic D, for which
    the relation is exact per path. Passes; this is the repaired check."""
    return _histogram_ft("d", "5s", "histogram-ft-decision-statistic", False,
                         backend, threads)


def criterion_6(backend=None, threads=1) -> CriterionResult:
    """Factor-2 anomaly: mean d_joint/ΔI in [1.9, 2.1]; resolution:
    mean d_marginal/ΔI in [0.95, 1.05]."""
    start = time.monotonic()
    rho1 = classical.SimplexDistribution(np.array([0.55, 0.45]))
    rec = classical.factor_two_experiment(rho1, 10_000, 10_000, 6601)
    rj = rec.ratio_joint
    rm = rec.ratio_marginal
    runtime = time.monotonic() - start
    ok = (1.9 <= rj <= 2.1) and (0.95 <= rm <= 1.05) and runtime < 30.0
    return _result(
        "6", "factor-two-anomaly-and-resolution", ok,
        f"joint ratio={rj:.4f} (in [1.9,2.1]), marginal ratio={rm:.4f} (in [0.95,1.05])",
        start, ratio_joint=rj, ratio_marginal=rm,
    )


def criterion_7(backend=None, threads=1) -> CriterionResult:
    """Closed forms at d=2, rho1=(0.6,0.4), flat rho2, n=100."""
    start = time.monotonic()
    rho1 = classical.SimplexDistribution(np.array([0.6, 0.4]))
    rho2 = classical.flat_distribution(2)
    md = classical.mean_d_joint(rho1, rho2, 100)
    di = classical.shannon_information_change(rho1, rho2, 100).delta_i
    ok = abs(md - 4.0833) <= 1e-4 and abs(di - 2.0136) <= 1e-3
    return _result(
        "7", "closed-form-checks", ok,
        f"mean_d_joint={md:.6f} (4.0833 +/- 1e-4), delta_i={di:.6f} (2.0136 +/- 1e-3)",
        start, mean_d_joint=md, delta_i=di,
    )


def criterion_8(backend=None, threads=1) -> CriterionResult:
    """arrow-core properties: normalization, sign covariance, monotonicity,
    F >= 1/2 on 1000 random distribution pairs, and sum P e^{-D} = 1."""
    start = time.monotonic()
    rng = np.random.default_rng(8801)
    xs = np.concatenate([np.linspace(-1e4, 1e4, 2001), rng.uniform(-50, 50, 1000)])
    norm_dev = max(
        abs(arrow_probability(float(x), TimeArrow.PLUS)
            + arrow_probability(float(x), TimeArrow.MINUS) - 1.0)
        for x in xs
    )
    covariant = all(
        arrow_probability(float(x), TimeArrow.PLUS)
        == arrow_probability(-float(x), TimeArrow.MINUS)
        for x in xs
    )
    grid = np.linspace(-30.0, 30.0, 121)
    probs = [arrow_probability(float(x), TimeArrow.PLUS) for x in grid]
    monotone = all(b > a for a, b in zip(probs, probs[1:]))
    wide = np.linspace(-50.0, 50.0, 201)
    wide_probs = [arrow_probability(float(x), TimeArrow.PLUS) for x in wide]
    monotone = monotone and all(b >= a for a, b in zip(wide_probs, wide_probs[1:]))

    min_f = 1.0
    max_integral_dev = 0.0
    for _ in range(1000):
        k = int(rng.integers(2, 17))
        p = rng.random(k) + 1e-3
        p /= p.sum()
        q = rng.random(k) + 1e-3
        q /= q.sum()
        min_f = min(min_f, exact_mean_fidelity(p, q))
        terms = [pi * math.exp(-log_ratio(pi, qi).d_value) for pi, qi in zip(p, q)]
        max_integral_dev = max(max_integral_dev, abs(math.fsum(terms) - 1.0))
    runtime = time.monotonic() - start
    ok = (
        norm_dev <= 1e-15 and covariant and monotone
        and min_f >= 0.5 - 1e-15 and max_integral_dev <= 1e-12
        and runtime < 5.0
    )
    return _result(
        "8", "arrow-property-suite", ok,
        f"norm dev={norm_dev:.1e}, covariant={covariant}, monotone={monotone}, "
        f"min F={min_f:.4f} (>=0.5), max|sum P e^-D - 1|={max_integral_dev:.1e}",
        start, norm_dev=norm_dev, min_f=min_f, max_integral_dev=max_integral_dev,
    )


def criterion_9a(backend=None, threads=1) -> CriterionResult:
    """Criterion-3 residual under dt halving, as stated (>= 1.9x shrink).
    Fails by construction: the identity is exact at every dt, so the
    residual is round-off that grows with the number of summed terms."""
    start = time.monotonic()
    res_c = float(np.max(_identity_residuals(CANONICAL_PARAMS, 300, 9901)))
    params_fine = langevin.LangevinParams(lam=1.0, gamma=0.5, dt=5e-4, t1=0.0, t2=5.0)
    res_f = float(np.max(_identity_residuals(params_fine, 300, 9901)))
    ratio = res_c / res_f if res_f > 0 else math.inf
    ok = ratio >= 1.9
    return _result(
        "9a", "dt-halving-residual-scaling", ok,
        f"residual ratio={ratio:.2f} (>=1.9 required; both residuals are round-off: "
        f"{res_c:.1e} at dt, {res_f:.1e} at dt/2)",
        start, expected_failure=True, residual_coarse=res_c, residual_fine=res_f, ratio=ratio,
    )


def criterion_9b(backend=None, threads=1) -> CriterionResult:
    """<e^{-D}> shifts by < 1 SE when dt is halved. Measured on coupled
    noise (coarse increments are pair-sums of fine ones), which estimates
    the dt effect itself instead of comparing two noisy means."""
    start = time.monotonic()
    rec = langevin.coupled_refinement_experiment(
        CANONICAL_PARAMS, canonical_quench, 100_000, 9902,
        backend=backend, threads=threads,
    )
    wc = np.exp(-rec.coarse.d)
    wf = np.exp(-rec.fine.d)
    mean_c = float(np.mean(wc))
    mean_f = float(np.mean(wf))
    se_c = float(np.std(wc, ddof=1) / math.sqrt(wc.size))
    shift = abs(mean_f - mean_c)
    ok = shift < se_c
    return _result(
        "9b", "dt-halving-mean-stability", ok,
        f"|shift|={shift:.5f} < 1 SE={se_c:.5f} (coarse mean {mean_c:.4f}, fine mean {mean_f:.4f})",
        start, mean_coarse=mean_c, mean_fine=mean_f, shift=shift, se=se_c,
    )


def criterion_9s(backend=None, threads=1) -> CriterionResult:
    """Deterministic check of the intended convergence statement: the
    noise-free Euler endpoint error halves when dt is halved (first order)."""
    start = time.monotonic()

    def endpoint_error(dt: float) -> float:
        params = langevin.LangevinParams(lam=1.0, gamma=0.0, dt=dt, t1=0.0, t2=1.0)
        proto = langevin.constant_protocol(params, 0.0)
        path = langevin.simulate_path(params, proto, 1.0)
        return abs(float(path.values[-1]) - math.exp(-1.0))

    e_c = endpoint_error(1e-3)
    e_f = endpoint_error(5e-4)
    ratio = e_c / e_f
    ok = 1.9 <= ratio <= 2.1
    return _result(
        "9s", "euler-order-confirmation", ok,
        f"deterministic endpoint error ratio={ratio:.3f} (first order => ~2)",
        start, error_coarse=e_c, error_fine=e_f, ratio=ratio,
    )


_CRITERIA = {
    "1": criterion_1,
    "2": criterion_2,
    "3": criterion_3,
    "4": criterion_4,
    "5": criterion_5,
    "5s": criterion_5s,
    "6": criterion_6,
    "7": criterion_7,
    "8": criterion_8,
    "9a": criterion_9a,
    "9b": criterion_9b,
    "9s": criterion_9s,
}


def run_all(criteria=None, backend=None, threads=1) -> list:
    """Run the selected criteria (default: all, in order). backend/threads
    are forwarded to the Langevin-ensemble checks."""
    if criteria is None:
        keys = list(_CRITERIA)
    else:
        keys = []
        for c in criteria:
            key = str(c)
            if key not in _CRITERIA:
                raise ValueError(
                    f"unknown criterion {key!r}; available: {', '.join(_CRITERIA)}"
                )
            keys.append(key)
    if backend is None:
        backend = default_backend()
    return [_CRITERIA[k](backend=backend, threads=threads) for k in keys]
