import math

import numpy as np
import pytest

from timearrow import classical
from timearrow._streams import LANE_CLASSICAL, substream
from timearrow.classical import (
    CountVector,
    Order,
    SimplexDistribution,
    TransitionSample,
    flat_distribution,
)
from timearrow.errors import ValidationError


def dist(*probs):
    return SimplexDistribution(np.array(probs, dtype=np.float64))


def sample(xi, eta):
    return TransitionSample(
        xi=CountVector(np.asarray(xi, dtype=np.int64)),
        eta=CountVector(np.asarray(eta, dtype=np.int64)),
    )


def test_simplex_validation():
    with pytest.raises(ValidationError):
        dist(0.5, 0.6)  # does not sum to 1
    with pytest.raises(ValidationError):
        dist(1.0, 0.0)  # zero is below the floor
    with pytest.raises(ValidationError):
        dist(1.0 - 1e-10, 1e-10)
    d = dist(1.0 - 1e-9, 1e-9)  # exactly at the floor is allowed
    assert d.dim == 2
    assert abs(flat_distribution(4).entropy() - math.log(4.0)) <= 1e-15


def test_shannon_information_change_examples():
    r = dist(0.6, 0.4)
    assert classical.shannon_information_change(r, r, 100).delta_i == 0.0
    # near-pure initial state: n ln 2 up to the floor's entropy dent
    near_pure = dist(1.0 - 1e-9, 1e-9)
    di = classical.shannon_information_change(near_pure, flat_distribution(2), 100).delta_i
    assert abs(di - 100.0 * math.log(2.0)) <= 1e-3
    assert abs(di - 69.31) <= 5e-3
    di2 = classical.shannon_information_change(dist(0.6, 0.4), flat_distribution(2), 100).delta_i
    assert abs(di2 - 2.0136) <= 1e-3
    # sign flips when the entropy decreases
    di3 = classical.shannon_information_change(flat_distribution(2), dist(0.6, 0.4), 100).delta_i
    assert di3 == -di2


def test_sample_counts():
    gen = substream(1, LANE_CLASSICAL, 0)
    c = classical.sample_counts(dist(0.999, 0.001), 10, gen)
    assert c.total == 10 and c.dim == 2
    gen_a = substream(2, LANE_CLASSICAL, 5)
    gen_b = substream(2, LANE_CLASSICAL, 5)
    ca = classical.sample_counts(dist(0.6, 0.4), 100, gen_a)
    cb = classical.sample_counts(dist(0.6, 0.4), 100, gen_b)
    assert np.array_equal(ca.counts, cb.counts)


def test_sample_counts_mean():
    gen = substream(3, LANE_CLASSICAL, 0)
    first = [classical.sample_counts(dist(0.6, 0.4), 100, gen).counts[0] for _ in range(10_000)]
    # SE = sqrt(n p q / draws) = sqrt(24 / 1e4)
    assert abs(float(np.mean(first)) - 60.0) <= 3.0 * math.sqrt(24.0 / 10_000)


def test_log_joint_gaussian_examples():
    r1, r2 = dist(0.6, 0.4), flat_distribution(2)
    at_means = sample([60, 40], [50, 50])
    assert classical.log_joint_gaussian(at_means, r1, r2, 100, Order.FORWARD_XI_ETA) == 0.0
    # hand value: -[(50-60)^2/120 + (50-40)^2/80] - [(60-50)^2/100 + (40-50)^2/100]
    rev = classical.log_joint_gaussian(at_means, r1, r2, 100, Order.REVERSED_ETA_XI)
    assert abs(rev - (-49.0 / 12.0)) <= 1e-12
    # equal laws make the two orders coincide sample by sample
    s = sample([57, 43], [52, 48])
    assert classical.log_joint_gaussian(s, r1, r1, 100, Order.FORWARD_XI_ETA) == \
        classical.log_joint_gaussian(s, r1, r1, 100, Order.REVERSED_ETA_XI)
    # the normalization constant shifts both orders identically
    shifted = classical.log_joint_gaussian(s, r1, r2, 100, Order.FORWARD_XI_ETA, log_constant=-3.7)
    bare = classical.log_joint_gaussian(s, r1, r2, 100, Order.FORWARD_XI_ETA)
    assert abs(shifted - (bare - 3.7)) <= 1e-12


def test_d_joint_examples():
    r1, r2 = dist(0.6, 0.4), flat_distribution(2)
    at_means = sample([60, 40], [50, 50])
    d = classical.d_joint(at_means, r1, r2, 100)
    assert abs(d.d_value - 49.0 / 12.0) <= 1e-12
    s = sample([55, 45], [48, 52])
    assert classical.d_joint(s, r1, r1, 100).d_value == 0.0
    # swapping the snapshots negates D bitwise
    assert classical.d_joint(s.swapped(), r1, r2, 100).d_value == \
        -classical.d_joint(s, r1, r2, 100).d_value


def test_d_joint_ignores_normalization_constant():
    r1, r2 = dist(0.55, 0.45), flat_distribution(2)
    s = sample([53, 47], [49, 51])
    for c in (0.0, 12.3):
        fwd = classical.log_joint_gaussian(s, r1, r2, 100, Order.FORWARD_XI_ETA, log_constant=c)
        rev = classical.log_joint_gaussian(s, r1, r2, 100, Order.REVERSED_ETA_XI, log_constant=c)
        assert abs((fwd - rev) - classical.d_joint(s, r1, r2, 100).d_value) <= 1e-12


def test_mean_d_joint_closed_form():
    got = classical.mean_d_joint(dist(0.6, 0.4), flat_distribution(2), 100)
    assert abs(got - 4.0833) <= 1e-4
    assert abs(got - 49.0 / 12.0) <= 1e-12
    assert classical.mean_d_joint(dist(0.6, 0.4), dist(0.6, 0.4), 100) == 0.0


def test_d_marginal_examples():
    r1, r2 = dist(0.6, 0.4), flat_distribution(2)
    at_mean = CountVector(np.array([50, 50]))
    d = classical.d_marginal(at_mean, r1, r2, 100)
    assert abs(d.d_value - 25.0 / 12.0) <= 1e-12  # 2.0833
    assert classical.d_marginal(at_mean, r1, r1, 100).d_value == 0.0


def test_d_marginal_sampled_mean_matches_leading_order():
    r1, r2 = dist(0.55, 0.45), flat_distribution(2)
    n = 100
    di_lead, _ = classical.leading_order_pair(r1, r2, n)
    gen = substream(9, LANE_CLASSICAL, 0)
    vals = [
        classical.d_marginal(classical.sample_counts(r2, n, gen), r1, r2, n).d_value
        for _ in range(10_000)
    ]
    m = float(np.mean(vals))
    se = float(np.std(vals, ddof=1) / math.sqrt(len(vals)))
    assert abs(m - di_lead) <= 3.0 * se


def test_leading_order_pair():
    flat = flat_distribution(2)
    assert classical.leading_order_pair(flat, flat, 50) == (0.0, 0.0)
    di_lead, d_lead = classical.leading_order_pair(dist(0.6, 0.4), flat, 100)
    assert abs(di_lead - 2.0) <= 1e-12
    assert abs(d_lead - 4.0) <= 1e-12
    assert d_lead == 2.0 * di_lead  # exact: power-of-two scaling
    with pytest.raises(ValidationError):
        classical.leading_order_pair(dist(0.6, 0.4), dist(0.6, 0.4), 100)


def test_leading_order_tracks_exact_closed_form():
    # exact mean and leading order agree to ~0.5% at drho = 0.05
    r1, flat = dist(0.55, 0.45), flat_distribution(2)
    exact = classical.mean_d_joint(r1, flat, 100)
    _, d_lead = classical.leading_order_pair(r1, flat, 100)
    assert abs(exact - d_lead) / exact <= 0.02


def test_factor_two_experiment():
    rec = classical.factor_two_experiment(dist(0.55, 0.45), 10_000, 2000, 61)
    assert 1.9 <= rec.ratio_joint <= 2.1
    assert 0.95 <= rec.ratio_marginal <= 1.05
    mean_emp, se = rec.mean_d_joint_empirical
    assert abs(mean_emp - rec.mean_d_joint_closed) <= 4.0 * se
    # determinism in the sample arrays
    again = classical.factor_two_experiment(dist(0.55, 0.45), 10_000, 2000, 61)
    assert np.array_equal(rec.d_joint, again.d_joint)
    assert np.array_equal(rec.d_marginal, again.d_marginal)


def test_factor_two_flat_initial():
    # reversible case: no information change, both means consistent with 0
    rec = classical.factor_two_experiment(flat_distribution(2), 10_000, 2000, 62)
    assert rec.delta_i == 0.0
    assert rec.ratio_joint is None and rec.ratio_marginal is None
    m_j, se_j = rec.mean_d_joint_empirical
    m_m, se_m = rec.mean_d_marginal_empirical
    assert abs(m_j) <= 3.0 * se_j
    assert abs(m_m) <= 3.0 * se_m


def test_brute_force_sign_agreement():
    """Exact-enumeration check that the Gaussian joint statistic nearly
    always points the arrow the same way as the exact multinomial ratio."""
    r1, flat = dist(0.7, 0.3), flat_distribution(2)
    assert classical.brute_force_sign_agreement(r1, flat, 6) >= 0.99
    assert classical.brute_force_sign_agreement(r1, r1, 4) == pytest.approx(1.0)
    with pytest.raises(ValidationError):
        classical.brute_force_sign_agreement(dist(0.5, 0.3, 0.2), flat_distribution(3), 4)
    with pytest.raises(ValidationError):
        classical.brute_force_sign_agreement(r1, flat, 13)


def test_dimension_mismatch_rejected():
    with pytest.raises(ValidationError):
        classical.shannon_information_change(dist(0.6, 0.4), flat_distribution(3), 10)
    with pytest.raises(ValidationError):
        classical.d_joint(sample([6, 4], [5, 5]), dist(0.6, 0.4), flat_distribution(2), 11)
