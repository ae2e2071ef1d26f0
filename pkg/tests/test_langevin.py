import math

import numpy as np
import pytest

from timearrow import langevin
from timearrow._streams import substream
from timearrow.errors import GridMismatchError, ValidationError

P_CANON = langevin.LangevinParams(lam=1.0, gamma=0.5, dt=1e-3, t1=0.0, t2=5.0)


def quench(params):
    mid = 0.5 * (params.t1 + params.t2)
    return langevin.protocol_from_points(
        [[params.t1, 0.0], [mid, 1.0]], params, interp="previous"
    )


def test_params_validation():
    with pytest.raises(ValidationError):
        langevin.LangevinParams(lam=0.0, gamma=0.5, dt=1e-3)
    with pytest.raises(ValidationError):
        langevin.LangevinParams(lam=1.0, gamma=-0.1, dt=1e-3)
    with pytest.raises(ValidationError):
        langevin.LangevinParams(lam=1.0, gamma=0.5, dt=1e-3, t1=1.0, t2=1.0)
    # dt must tile [t1, t2] into an integral number of steps
    with pytest.raises(ValidationError):
        langevin.LangevinParams(lam=1.0, gamma=0.5, dt=0.3, t1=0.0, t2=1.0)
    p = langevin.LangevinParams(lam=2.0, gamma=1.0, dt=0.25, t1=0.0, t2=1.0)
    assert p.n_steps == 4
    assert p.stationary_variance == 0.5
    assert np.array_equal(p.times, np.array([0.0, 0.25, 0.5, 0.75, 1.0]))


def test_grid_mismatch_names_lengths():
    p = langevin.LangevinParams(lam=1.0, gamma=0.5, dt=0.25, t1=0.0, t2=1.0)
    proto = langevin.Protocol(np.zeros(3))
    with pytest.raises(GridMismatchError):
        langevin.simulate_path(p, proto, 0.0, rng=np.random.default_rng(0))


def test_deterministic_relaxation():
    # gamma = 0: pure exponential decay, Euler error O(dt)
    p = langevin.LangevinParams(lam=1.0, gamma=0.0, dt=1e-4, t1=0.0, t2=1.0)
    path = langevin.simulate_path(p, langevin.constant_protocol(p, 0.0), 1.0)
    assert abs(float(path.values[-1]) - math.exp(-1.0)) <= 1e-3


def test_constant_fixed_point():
    p = langevin.LangevinParams(lam=1.3, gamma=0.0, dt=1e-2, t1=0.0, t2=2.0)
    path = langevin.simulate_path(p, langevin.constant_protocol(p, 0.7), 0.7)
    assert np.all(path.values == 0.7)


def test_rng_required_iff_noisy():
    noisy = langevin.LangevinParams(lam=1.0, gamma=0.5, dt=1e-2, t1=0.0, t2=1.0)
    with pytest.raises(ValidationError):
        langevin.simulate_path(noisy, langevin.constant_protocol(noisy, 0.0), 0.0)


def test_long_run_stationary_variance():
    """Pooled second-half variance over 12 independent runs must land within
    10% of gamma/lam (a single 200-time-unit path fluctuates by ~14%)."""
    p = langevin.LangevinParams(lam=1.0, gamma=0.5, dt=1e-2, t1=0.0, t2=200.0)
    proto = langevin.constant_protocol(p, 0.0)
    chunks = []
    for j in range(12):
        path = langevin.simulate_path(p, proto, 0.0, rng=substream(78, 0, j))
        chunks.append(path.values[path.values.size // 2 :])
    v = float(np.var(np.concatenate(chunks)))
    assert abs(v - 0.5) <= 0.05


def test_stationary_sample_moments():
    p = langevin.LangevinParams(lam=1.0, gamma=0.5, dt=1e-3, t1=0.0, t2=1.0)
    gen = substream(11, 0, 0)
    draws = np.array([langevin.stationary_sample(p, 2.0, gen) for _ in range(100_000)])
    assert abs(draws.mean() - 2.0) <= 3.0 * math.sqrt(0.5 / 100_000)
    assert abs(draws.var() - 0.5) <= 0.05 * 0.5
    # identical stream, identical draws
    gen2 = substream(11, 0, 0)
    again = np.array([langevin.stationary_sample(p, 2.0, gen2) for _ in range(10)])
    assert np.array_equal(draws[:10], again)


def test_entropy_production_constant_path_is_zero():
    p = langevin.LangevinParams(lam=1.0, gamma=0.5, dt=0.1, t1=0.0, t2=1.0)
    proto = langevin.constant_protocol(p, 0.4)
    path = langevin.Path(np.full(p.n_steps + 1, 0.4))
    assert langevin.entropy_production(path, proto, p).delta_i == 0.0


def test_entropy_production_deterministic_relaxation():
    """Midpoint rule telescopes on a noise-free path: ΔI = (lam/2 gamma)
    (x0^2 - X_T^2), which is 1.0 up to the e^{-20} tail."""
    p_sim = langevin.LangevinParams(lam=1.0, gamma=0.0, dt=1e-3, t1=0.0, t2=10.0)
    proto = langevin.constant_protocol(p_sim, 0.0)
    path = langevin.simulate_path(p_sim, proto, 1.0)
    p_eval = langevin.LangevinParams(lam=1.0, gamma=0.5, dt=1e-3, t1=0.0, t2=10.0)
    di = langevin.entropy_production(path, proto, p_eval).delta_i
    assert abs(di - 1.0) <= 1e-3


def test_entropy_production_antisymmetric_bitwise():
    rng = np.random.default_rng(5)
    p = langevin.LangevinParams(lam=1.0, gamma=0.5, dt=1e-2, t1=0.0, t2=3.0)
    proto = langevin.Protocol(rng.standard_normal(p.n_steps + 1))
    path = langevin.Path(rng.standard_normal(p.n_steps + 1))
    fwd = langevin.entropy_production(path, proto, p).delta_i
    rev = langevin.entropy_production(
        langevin.reverse(path), langevin.reverse(proto), p
    ).delta_i
    assert rev == -fwd


def test_om_weight_zero_on_drift_path():
    # a path satisfying the midpoint drift relation step by step has zero action
    p = langevin.LangevinParams(lam=1.0, gamma=0.5, dt=0.01, t1=0.0, t2=1.0)
    c = (1.0 - 0.5 * p.lam * p.dt) / (1.0 + 0.5 * p.lam * p.dt)
    values = [1.0]
    for _ in range(p.n_steps):
        values.append(values[-1] * c)
    path = langevin.Path(np.array(values))
    proto = langevin.constant_protocol(p, 0.0)
    assert abs(langevin.om_log_weight(path, proto, p).log_weight) <= 1e-12


def test_om_identity_three_point_regression():
    """Hand-checked case: values (0, 0.5, 0.25), lam=1, gamma=0.5, dt=0.1,
    anchor 0. ΔI = -0.0625 and the forward/reverse weight difference equals
    it; both quadratic sums were evaluated by hand."""
    p = langevin.LangevinParams(lam=1.0, gamma=0.5, dt=0.1, t1=0.0, t2=0.2)
    path = langevin.Path(np.array([0.0, 0.5, 0.25]))
    proto = langevin.constant_protocol(p, 0.0)
    di = langevin.entropy_production(path, proto, p).delta_i
    assert abs(di - (-0.0625)) <= 1e-12
    om_f = langevin.om_log_weight(path, proto, p).log_weight
    om_r = langevin.om_log_weight(
        langevin.reverse(path), langevin.reverse(proto), p
    ).log_weight
    assert abs(om_f - (-1.60390625)) <= 1e-12
    assert abs((om_f - om_r) - di) <= 1e-12


def test_om_identity_random_paths():
    # rough O(1)-increment paths have actions ~1e4, so bound the residual
    # relative to that scale; simulated paths are covered at 1e-9 absolute
    # by the acceptance suite
    rng = np.random.default_rng(17)
    p = langevin.LangevinParams(lam=0.7, gamma=0.3, dt=0.02, t1=0.0, t2=2.0)
    for _ in range(50):
        path = langevin.Path(rng.standard_normal(p.n_steps + 1))
        proto = langevin.Protocol(rng.standard_normal(p.n_steps + 1))
        om_f = langevin.om_log_weight(path, proto, p).log_weight
        om_r = langevin.om_log_weight(
            langevin.reverse(path), langevin.reverse(proto), p
        ).log_weight
        di = langevin.entropy_production(path, proto, p).delta_i
        scale = max(1.0, abs(om_f), abs(om_r))
        assert abs((om_f - om_r) - di) <= 1e-14 * scale


def test_reverse_examples():
    path = langevin.Path(np.array([1.0, 2.0, 3.0]))
    assert np.array_equal(langevin.reverse(path).values, [3.0, 2.0, 1.0])
    assert np.array_equal(langevin.reverse(langevin.reverse(path)).values, path.values)
    const = langevin.Protocol(np.full(5, 2.0))
    assert np.array_equal(langevin.reverse(const).values, const.values)
    with pytest.raises(ValidationError):
        langevin.reverse([1.0, 2.0])


def test_boundary_log_correction_examples():
    p = langevin.LangevinParams(lam=1.0, gamma=0.5, dt=0.5, t1=0.0, t2=1.0)
    proto = langevin.Protocol(np.array([0.3, 0.5, 0.9]))
    m1, m2 = 0.3, 0.9
    assert langevin.boundary_log_correction(m1, m2, proto, p) == 0.0
    assert abs(langevin.boundary_log_correction(m1, m2 + 1.0, proto, p) - (-1.0)) <= 1e-12
    # equal displacements from the two means cancel
    a = 0.37
    assert abs(langevin.boundary_log_correction(m1 + a, m2 + a, proto, p)) <= 1e-12


def test_d_statistic_constant_path():
    p = langevin.LangevinParams(lam=1.0, gamma=0.5, dt=0.1, t1=0.0, t2=1.0)
    proto = langevin.constant_protocol(p, 0.2)
    path = langevin.Path(np.full(p.n_steps + 1, 0.2))
    assert langevin.d_statistic(path, proto, p).d_value == 0.0


def test_d_statistic_decomposition():
    rng = np.random.default_rng(23)
    p = langevin.LangevinParams(lam=1.0, gamma=0.5, dt=0.05, t1=0.0, t2=1.0)
    proto = langevin.Protocol(rng.standard_normal(p.n_steps + 1))
    path = langevin.Path(rng.standard_normal(p.n_steps + 1))
    d = langevin.d_statistic(path, proto, p).d_value
    di = langevin.entropy_production(path, proto, p).delta_i
    corr = langevin.boundary_log_correction(
        float(path.values[0]), float(path.values[-1]), proto, p
    )
    assert d == di - corr


def test_protocol_from_points():
    p = langevin.LangevinParams(lam=1.0, gamma=0.5, dt=0.25, t1=0.0, t2=1.0)
    step = langevin.protocol_from_points([[0.0, 0.0], [0.5, 1.0]], p)
    assert np.array_equal(step.values, [0.0, 0.0, 1.0, 1.0, 1.0])
    lin = langevin.protocol_from_points([[0.0, 0.0], [1.0, 1.0]], p, interp="linear")
    assert np.allclose(lin.values, [0.0, 0.25, 0.5, 0.75, 1.0])
    with pytest.raises(ValidationError):
        langevin.protocol_from_points([[0.5, 0.0]], p)  # starts after t1
    with pytest.raises(ValidationError):
        langevin.protocol_from_points([[0.0, 0.0], [0.6, 1.0]], p, interp="linear")
    with pytest.raises(ValidationError):
        langevin.protocol_from_points([[0.0, 0.0], [1.0, 1.0]], p, interp="cubic")


def test_forward_reverse_determinism():
    rec1 = langevin.forward_reverse_experiment(P_CANON, quench(P_CANON), 500, 99)
    rec2 = langevin.forward_reverse_experiment(P_CANON, quench(P_CANON), 500, 99)
    assert np.array_equal(rec1.forward.d, rec2.forward.d)
    assert np.array_equal(rec1.reverse.delta_i, rec2.reverse.delta_i)
    rec3 = langevin.forward_reverse_experiment(P_CANON, quench(P_CANON), 500, 100)
    assert not np.array_equal(rec1.forward.d, rec3.forward.d)


def test_static_protocol_symmetric():
    # no driving: both arms' mean information change is 0 within 3 SE
    rec = langevin.forward_reverse_experiment(
        P_CANON, langevin.constant_protocol(P_CANON, 0.3), 4000, 606
    )
    for arm in (rec.forward, rec.reverse):
        m = float(np.mean(arm.delta_i))
        se = float(np.std(arm.delta_i, ddof=1) / math.sqrt(arm.n_paths))
        assert abs(m) <= 3.0 * se


def test_quench_mean_entropy_production_positive():
    rec = langevin.forward_reverse_experiment(P_CANON, quench(P_CANON), 10_000, 707)
    m = float(np.mean(rec.forward.delta_i))
    se = float(np.std(rec.forward.delta_i, ddof=1) / math.sqrt(10_000))
    assert m > 3.0 * se


def test_integral_relation_small_ensemble():
    rec = langevin.forward_reverse_experiment(P_CANON, quench(P_CANON), 4000, 808)
    w = np.exp(-rec.forward.d)
    se = float(np.std(w, ddof=1) / math.sqrt(w.size))
    assert abs(float(np.mean(w)) - 1.0) <= 3.0 * se


def test_long_protocol_boundary_negligible():
    """For T = 50/lam the boundary correction averages to ~0 while <ΔI> is
    order 1, so the two means agree to within 5%."""
    p = langevin.LangevinParams(lam=1.0, gamma=0.5, dt=5e-3, t1=0.0, t2=50.0)
    proto = langevin.protocol_from_points([[0.0, 0.0], [25.0, 1.0]], p)
    rec = langevin.forward_reverse_experiment(p, proto, 2000, 505)
    md = float(np.mean(rec.forward.d))
    mdi = float(np.mean(rec.forward.delta_i))
    assert abs(md - mdi) / abs(mdi) < 0.05


def test_pathwise_d_reversal_antisymmetry():
    """Reversing a sampled trajectory and the protocol negates D exactly:
    ΔI flips bitwise and the boundary correction swaps roles."""
    arm = langevin.sample_forward_paths(P_CANON, quench(P_CANON), 20, 33)
    proto = quench(P_CANON)
    proto_rev = langevin.reverse(proto)
    for i in range(arm.n_paths):
        path = langevin.Path(arm.paths[i])
        d_f = langevin.d_statistic(path, proto, P_CANON).d_value
        d_r = langevin.d_statistic(langevin.reverse(path), proto_rev, P_CANON).d_value
        assert abs(d_f + d_r) <= 1e-12
        assert abs(d_f - arm.d[i]) <= 1e-12


def test_sample_forward_paths_consistency():
    arm = langevin.sample_forward_paths(P_CANON, quench(P_CANON), 50, 44)
    assert arm.paths is not None and arm.paths.shape == (50, P_CANON.n_steps + 1)
    assert np.array_equal(arm.paths[:, 0], arm.xi)
    assert np.array_equal(arm.paths[:, -1], arm.eta)
    # same seed and lane as the experiment's forward arm
    rec = langevin.forward_reverse_experiment(P_CANON, quench(P_CANON), 50, 44)
    assert np.array_equal(arm.d, rec.forward.d)


def test_coupled_refinement_shapes_and_coupling():
    rec = langevin.coupled_refinement_experiment(P_CANON, quench, 300, 21)
    assert rec.params_fine.dt == P_CANON.dt / 2.0
    assert rec.coarse.n_paths == rec.fine.n_paths == 300
    # same Brownian path: endpoints differ only by the integration error
    assert np.max(np.abs(rec.coarse.eta - rec.fine.eta)) < 0.2
    assert np.array_equal(rec.coarse.xi, rec.fine.xi)


def test_functionals_require_noise():
    p0 = langevin.LangevinParams(lam=1.0, gamma=0.0, dt=0.1, t1=0.0, t2=1.0)
    proto = langevin.constant_protocol(p0, 0.0)
    path = langevin.Path(np.linspace(1.0, 0.0, p0.n_steps + 1))
    with pytest.raises(ValidationError):
        langevin.entropy_production(path, proto, p0)
    with pytest.raises(ValidationError):
        langevin.om_log_weight(path, proto, p0)
    with pytest.raises(ValidationError):
        langevin.d_statistic(path, proto, p0)
