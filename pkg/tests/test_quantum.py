import math

import numpy as np
import pytest

from timearrow import quantum
from timearrow.errors import (
    DegenerateSupportError,
    EnumerationLimitError,
    ValidationError,
)
from timearrow.quantum import DensityMatrix, Spectrum


def test_spectrum_validation():
    s = Spectrum(np.array([0.3, 0.7]))
    assert np.array_equal(s.values, [0.7, 0.3])  # stored sorted descending
    assert s.dim == 2
    with pytest.raises(ValidationError):
        Spectrum(np.array([0.6, 0.6]))
    with pytest.raises(ValidationError):
        Spectrum(np.array([1.1, -0.1]))
    with pytest.raises(ValidationError):
        Spectrum(np.array([1.0 / 9.0] * 9))  # d > 8


def test_density_matrix_validation():
    rho = DensityMatrix(np.array([[0.7, 0.0], [0.0, 0.3]], dtype=complex))
    assert rho.dim == 2
    assert np.allclose(rho.spectrum().values, [0.7, 0.3])
    with pytest.raises(ValidationError):
        DensityMatrix(np.array([[0.7, 0.5], [0.0, 0.3]], dtype=complex))  # not Hermitian
    with pytest.raises(ValidationError):
        DensityMatrix(np.array([[1.2, 0.0], [0.0, -0.2]], dtype=complex))  # not PSD
    off = np.array([[0.5, 0.5], [0.5, 0.5]], dtype=complex)  # pure |+><+|
    assert np.allclose(DensityMatrix(off).spectrum().values, [1.0, 0.0], atol=1e-12)


def test_information_change_examples():
    flat = quantum.maximum_information_state(2)
    assert quantum.von_neumann_information_change(flat, flat, 7).delta_i == 0.0
    di = quantum.von_neumann_information_change([1.0, 0.0], flat, 3).delta_i
    assert abs(di - 3.0 * math.log(2.0)) <= 1e-12
    di2 = quantum.von_neumann_information_change([0.7, 0.3], flat, 10).delta_i
    assert abs(di2 - 0.8223) <= 1e-3


def test_maximum_information_state():
    for d in (2, 3, 4):
        rho = quantum.maximum_information_state(d)
        assert np.array_equal(rho.entries, np.eye(d) / d)
        assert abs(rho.spectrum().entropy() - math.log(d)) <= 1e-12
    # its typical projector is the full space
    proj = quantum.typical_projector([0.25] * 4, 3, 0.0)
    assert proj.rank == 4**3


def test_typical_projector_examples():
    pure = quantum.typical_projector([1.0, 0.0], 5, 0.0)
    assert pure.rank == 1 and len(pure.multiplicities) == 1
    flat2of4 = quantum.typical_projector([0.5, 0.5, 0.0, 0.0], 2, 0.0)
    assert flat2of4.rank == 4


def test_typical_projector_binomial_rank():
    """(0.7, 0.3), n = 12, delta = 0.1: the qualifying classes are a contiguous
    band of head-counts m; the rank must equal sum of binomial(12, m)."""
    spec = [0.7, 0.3]
    proj = quantum.typical_projector(spec, 12, 0.1)
    i1 = -(0.7 * math.log(0.7) + 0.3 * math.log(0.3))
    expected = 0
    for m in range(13):
        rate = -(m * math.log(0.7) + (12 - m) * math.log(0.3)) / 12.0
        if abs(rate - i1) <= 0.1 + 1e-12:
            expected += math.comb(12, m)
    assert expected > 0
    assert proj.rank == expected


def test_projector_traces_examples():
    spec = [1.0, 0.0]
    proj = quantum.typical_projector(spec, 3, 0.0)
    tr_xi, tr_eta = quantum.projector_traces(proj, spec, 2)
    assert tr_xi == 1.0
    assert abs(tr_eta - 0.125) <= 1e-15

    spec4 = [0.5, 0.5, 0.0, 0.0]
    proj4 = quantum.typical_projector(spec4, 2, 0.0)
    tr_xi4, tr_eta4 = quantum.projector_traces(proj4, spec4, 4)
    di = quantum.von_neumann_information_change(spec4, quantum.maximum_information_state(4), 2).delta_i
    assert abs(tr_xi4 - 1.0) <= 1e-12
    assert abs(tr_eta4 - math.exp(-di)) <= 1e-12

    flat = [0.5, 0.5]
    pf = quantum.typical_projector(flat, 4, 0.0)
    txi, teta = quantum.projector_traces(pf, flat, 2)
    assert txi == 1.0 and teta == 1.0


def test_traces_match_brute_force():
    for spec, d, n, delta in (
        ([0.7, 0.3], 2, 10, 0.2),
        ([0.5, 0.3, 0.2], 3, 7, 0.15),
        ([1.0, 0.0], 2, 6, 0.0),
    ):
        proj = quantum.typical_projector(spec, n, delta)
        tr_xi, tr_eta = quantum.projector_traces(proj, spec, d)
        bf_xi, bf_eta = quantum.brute_force_traces(spec, n, delta)
        assert abs(tr_xi - bf_xi) <= 1e-12
        assert abs(tr_eta - bf_eta) <= 1e-12


def test_typicality_boundary_is_inclusive():
    # place delta exactly on a class boundary; the class must stay included
    spec = [0.75, 0.25]
    n = 4
    i1 = -(0.75 * math.log(0.75) + 0.25 * math.log(0.25))
    rates = [
        -(m * math.log(0.75) + (n - m) * math.log(0.25)) / n for m in range(n + 1)
    ]
    target = min(abs(r - i1) for r in rates if abs(r - i1) > 0)
    proj = quantum.typical_projector(spec, n, target)
    included = sum(
        1 for r in rates if abs(r - i1) <= target + quantum.TYPICALITY_ATOL
    )
    assert len(proj.multiplicities) == included >= 2


def test_monotone_typicality():
    prev = 0.0
    for n in (8, 16, 32, 64):
        proj = quantum.typical_projector([0.7, 0.3], n, 0.1)
        tr_xi, _ = quantum.projector_traces(proj, [0.7, 0.3], 2)
        assert tr_xi >= prev - 1e-12
        prev = tr_xi
    assert prev > 0.9  # the typical subspace soaks up the mass


def test_enumeration_limit_reported():
    with pytest.raises(EnumerationLimitError) as err:
        quantum.typical_projector([1.0 / 8.0] * 8, 30, 0.1)
    assert str(math.comb(37, 7)) in str(err.value)


def test_outcome_distributions():
    both_one = quantum.outcome_distributions(0.0)
    assert both_one.p_one_forward == 1.0 and both_one.p_one_reversed == 1.0
    pair = quantum.outcome_distributions(math.log(8.0))
    assert abs(pair.p_one_forward - 0.125) <= 1e-15
    assert pair.p_one_reversed == 1.0
    tiny = quantum.outcome_distributions(50.0)
    assert tiny.p_one_forward == math.exp(-50.0) > 0.0
    with pytest.raises(ValidationError):
        quantum.outcome_distributions(-0.5)


def test_infer_arrow_from_outcome():
    post = quantum.infer_arrow_from_outcome(0, 2.0)
    assert post.p_plus == 1.0 and post.p_minus == 0.0
    post1 = quantum.infer_arrow_from_outcome(1, math.log(3.0))
    assert abs(post1.p_plus - 0.25) <= 1e-15
    assert abs(post1.p_plus + post1.p_minus - 1.0) <= 1e-15
    assert quantum.infer_arrow_from_outcome(1, 0.0).p_plus == 0.5
    with pytest.raises(DegenerateSupportError):
        quantum.infer_arrow_from_outcome(0, 0.0)


def test_fidelity_closed_form():
    assert quantum.fidelity_closed_form(0.0) == 0.5
    assert abs(quantum.fidelity_closed_form(math.log(8.0)) - 8.0 / 9.0) <= 1e-15
    assert quantum.fidelity_closed_form(1000.0) == 1.0


def test_two_outcome_sum_equals_closed_form():
    for di in np.linspace(0.0, 40.0, 81):
        di = float(di)
        assert abs(
            quantum.fidelity_two_outcome_sum(di) - quantum.fidelity_closed_form(di)
        ) <= 1e-12


def test_fidelity_experiment_pure():
    rec = quantum.fidelity_experiment([1.0, 0.0], 2, 3, 0.0, 100_000, 314)
    assert rec.tr_xi == 1.0 and abs(rec.tr_eta - 0.125) <= 1e-15
    est = rec.f_empirical
    assert abs(est.mean - 8.0 / 9.0) <= 3.0 * est.std_error
    assert sum(rec.counts.values()) == 100_000


def test_fidelity_experiment_flat():
    # no information change: every outcome is 1 and every posterior is 1/2
    rec = quantum.fidelity_experiment([0.5, 0.5], 2, 4, 0.0, 10_000, 315)
    assert rec.delta_i == 0.0
    assert rec.f_empirical.mean == 0.5 and rec.f_empirical.std_error == 0.0
    assert rec.counts["plus_zero"] == 0 and rec.counts["minus_zero"] == 0


def test_fidelity_experiment_asymmetric_spectrum():
    rec = quantum.fidelity_experiment([0.7, 0.3], 2, 16, 0.1, 50_000, 316)
    assert rec.rank == 14756  # sum of binomial(16, m) over the typical band
    assert rec.tr_eta == 14756 / 65536
    assert 0.0 < rec.tr_xi < 1.0
    # finite-n gap: strictly between no-information and the idealized value
    assert 0.5 < rec.f_empirical.mean < rec.f_closed


def test_fidelity_experiment_determinism():
    a = quantum.fidelity_experiment([0.7, 0.3], 2, 8, 0.2, 5000, 99)
    b = quantum.fidelity_experiment([0.7, 0.3], 2, 8, 0.2, 5000, 99)
    assert a.counts == b.counts
    assert a.f_empirical.mean == b.f_empirical.mean


def test_fidelity_experiment_rejects_empty_projector():
    # (0.7, 0.3) with delta = 0: no class rate coincides with the entropy
    proj = quantum.typical_projector([0.7, 0.3], 3, 0.0)
    assert proj.rank == 0
    with pytest.raises(DegenerateSupportError):
        quantum.fidelity_experiment([0.7, 0.3], 2, 3, 0.0, 1000, 1)


def test_fidelity_experiment_validation():
    with pytest.raises(ValidationError):
        quantum.fidelity_experiment([1.0, 0.0], 2, 3, 0.0, 1, 1)  # n_trials >= 2
    with pytest.raises(ValidationError):
        quantum.fidelity_experiment([1.0, 0.0], 3, 3, 0.0, 100, 1)  # d mismatch
