import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qlogspace.channels import ChannelStep, dephasing_step, natural_rep, random_mixed_unitary_step
from qlogspace.exceptions import GapViolation, ValidationError
from qlogspace.learning import (
    SampleSource,
    TruncationParams,
    acceptance_value,
    dephasing_pair,
    distinguish,
    estimate_entry,
    estimated_contraction,
    pauli_mixture_source,
    sample_count_for,
    shift_truncate,
    singleton_distinguish,
    singleton_threshold,
)
from qlogspace.linalg import spectral_norm, vectorize
from qlogspace.randmat import random_unitary

X_GATE = np.array([[0, 1], [1, 0]], dtype=complex)


def _two_point(rng, m=2):
    return SampleSource([0.5, 0.5], [ChannelStep((np.eye(m),)), ChannelStep((random_unitary(m, rng),))])


def test_sample_count_examples():
    assert sample_count_for(0.5, 4 * math.exp(-2)) == 4
    assert sample_count_for(0.5, 4.0) == 1
    assert sample_count_for(0.1, 0.01) == math.ceil(math.log(400) / 0.02)
    with pytest.raises(ValidationError):
        sample_count_for(0.0, 0.1)


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-3, 0.9), st.floats(1e-9, 0.99))
def test_sample_count_is_smallest(eps, fail):
    n = sample_count_for(eps, fail)
    assert 4 * math.exp(-2 * n * eps * eps) <= fail * (1 + 1e-12)
    if n > 1:
        assert 4 * math.exp(-2 * (n - 1) * eps * eps) > fail


def test_source_validation():
    with pytest.raises(ValidationError):
        SampleSource([0.5, 0.4], [ChannelStep((np.eye(2),))] * 2)
    damp = ChannelStep((np.array([[1, 0], [0, np.sqrt(0.5)]]), np.array([[0, np.sqrt(0.5)], [0, 0]])))
    with pytest.raises(ValidationError):
        SampleSource([1.0], [damp])


def test_estimate_entry_constant(rng):
    step = random_mixed_unitary_step(2, 2, rng)
    src = SampleSource.constant(step)
    K = natural_rep(step)
    for j, k in [(0, 0), (1, 2), (3, 3)]:
        assert estimate_entry(src, j, k, 10, rng) == pytest.approx(K[j, k])
    with pytest.raises(ValidationError):
        estimate_entry(src, 4, 0, 10, rng)


def test_estimate_entry_two_point_chernoff(rng):
    src = _two_point(rng)
    mean = src.mean_natural_rep()
    eps, fail = 0.1, 0.1
    n = sample_count_for(eps, fail)
    j, k = 0, 3
    misses = sum(abs(estimate_entry(src, j, k, n, rng) - mean[j, k]) >= eps for _ in range(1000))
    assert misses <= 1000 * fail
    # failure rate against the bound over 10^4 trials
    misses = sum(abs(estimate_entry(src, j, k, n, rng) - mean[j, k]) >= eps for _ in range(10_000))
    assert misses / 10_000 <= 1.5 * fail


def test_estimate_entry_matches_sequential_draws(rng):
    # the multinomial shortcut agrees in law with drawing samples one by one
    src = _two_point(rng)
    j, k = 0, 3
    n, trials = 20, 4000
    fast = np.array([estimate_entry(src, j, k, n, rng) for _ in range(trials)])
    vals = src.entry_values(j, k)
    slow = np.array([np.mean([vals[src.draw(rng)] for _ in range(n)]) for _ in range(trials)])
    assert abs(fast.mean() - slow.mean()) <= 0.02
    assert abs(fast.std() - slow.std()) <= 0.02


def test_truncation_params(rng):
    p = TruncationParams.create(2, 3, 10, rng)
    assert p.L == pytest.approx(12 * 2 * 3)
    assert p.N == pytest.approx(24 * 2**2.5 * 3)
    assert 0 <= p.zeta < 80
    with pytest.raises(ValidationError):
        TruncationParams.create(2, 3, 10, zeta=80)


def test_shift_truncate_examples():
    p = TruncationParams.create(2, 1, 4, zeta=5)
    assert shift_truncate(0j, p) == 0
    N, s = p.N, p.shift
    below = (3 - s - 1e-9) / N
    above = (3 - s + 1e-9) / N
    assert shift_truncate(complex(above), p).real - shift_truncate(complex(below), p).real == pytest.approx(1 / N)


def test_shift_truncate_zeta_sweep(rng):
    P = 6
    params = [TruncationParams.create(1, 1, P, zeta=z) for z in range(8 * P)]
    N = params[0].N
    for _ in range(200):
        a = complex(rng.uniform(-1, 1), rng.uniform(-1, 1)) / np.sqrt(2)
        d = complex(*rng.uniform(-1, 1, size=2)) / (8 * N * P) / np.sqrt(2)
        b = a + d
        bad_re = sum(shift_truncate(a, p).real != shift_truncate(b, p).real for p in params)
        bad_im = sum(shift_truncate(a, p).imag != shift_truncate(b, p).imag for p in params)
        assert bad_re <= 1 and bad_im <= 1


@settings(max_examples=300, deadline=None)
@given(
    st.floats(-1, 1),
    st.floats(-1, 1),
    st.floats(0, 0.01),
    st.integers(1, 3),
    st.integers(1, 4),
    st.integers(1, 64),
    st.integers(0, 10**6),
)
def test_shift_truncate_properties(re, im, bump, m, T, P, z):
    p = TruncationParams.create(m, T, P, zeta=z % (8 * P))
    a = complex(re, im)
    out = shift_truncate(a, p)
    assert abs(out - a) <= math.sqrt(2) / p.N + 1e-15
    assert (out.real * p.N) == pytest.approx(round(out.real * p.N))
    b = shift_truncate(a + bump, p)
    assert b.real >= out.real and b.imag == out.imag


def test_estimated_contraction_deterministic(rng):
    for _ in range(5):
        step = random_mixed_unitary_step(2, 2, rng)
        src = SampleSource.constant(step)
        est = estimated_contraction(src, 2, rng)
        assert est.consistent
        assert spectral_norm(est.matrix - natural_rep(step)) <= 2 / est.params.L
        assert spectral_norm(est.matrix) <= 1 + 1e-9


def test_estimated_contraction_stochastic():
    rng = np.random.default_rng(77)
    src = _two_point(rng)
    A = src.mean_natural_rep()
    good = close = 0
    for _ in range(30):
        est = estimated_contraction(src, 2, rng)
        good += est.consistent
        close += spectral_norm(est.matrix - A) <= 2 / est.params.L
        assert spectral_norm(est.matrix) <= 1 + 1e-9
        assert est.requests == 4 * 4 * 2  # every entry of the 4x4 mean, read twice
    assert good >= 20 and close >= 20


def test_norm_clamp_under_adversarial_noise(rng):
    src = SampleSource.constant(ChannelStep((np.eye(2),)))
    est = estimated_contraction(src, 1, rng, noise=lambda r: 0.5 * complex(*r.uniform(0, 1, size=2)))
    assert spectral_norm(est.matrix) <= 1 + 1e-9
    assert est.clamped


def test_power_error_linear_in_T(rng):
    src = _two_point(rng)
    A = src.mean_natural_rep()
    est = estimated_contraction(src, 3, rng)
    for T in (1, 2, 3, 5):
        lhs = spectral_norm(np.linalg.matrix_power(est.matrix, T) - np.linalg.matrix_power(A, T))
        assert lhs <= T * spectral_norm(est.matrix - A) + 1e-12


def test_learner_gap_implies_entry_gap():
    m, T = 2, 3
    X = SampleSource.constant(ChannelStep((np.eye(2),)))
    Y = SampleSource.constant(ChannelStep((X_GATE,)))
    M0 = np.diag([1.0, 0.0])
    A, B = X.mean_natural_rep(), Y.mean_natural_rep()
    gap = abs(acceptance_value(A, T, M0, m) - acceptance_value(B, T, M0, m))
    assert gap >= 1 / 3
    fro = np.linalg.norm(A - B)
    assert fro >= spectral_norm(A - B) >= (1 / T) * spectral_norm(np.linalg.matrix_power(A, T) - np.linalg.matrix_power(B, T)) - 1e-12
    assert fro >= (1 / (3 * T)) * math.sqrt(2 / m)


def test_distinguish_trivial(rng):
    accept = SampleSource.constant(ChannelStep((np.eye(2),)))
    reject = SampleSource.constant(ChannelStep((X_GATE,)))
    M0 = np.diag([1.0, 0.0])
    a = distinguish(accept, 1, M0, rng)
    r = distinguish(reject, 1, M0, rng)
    assert a.label == "X" and all(a.votes)
    assert r.label == "Y" and not any(r.votes)


def test_distinguish_gap_violation(rng):
    src = SampleSource.constant(ChannelStep((np.array([[1, 1], [1, -1]]) / np.sqrt(2),)))
    with pytest.raises(GapViolation):
        distinguish(src, 1, np.diag([1.0, 0.0]), rng)


def _tilted(p_flip):
    # stochastic source flipping the qubit with probability p_flip; acceptance after T = 1 is 1 - p_flip
    return SampleSource([1 - p_flip, p_flip], [ChannelStep((np.eye(2),)), ChannelStep((X_GATE,))])


def test_distinguish_pair_success():
    rng = np.random.default_rng(3)
    M0 = np.diag([1.0, 0.0])
    high, low = _tilted(0.1), _tilted(0.9)
    assert acceptance_value(high.mean_natural_rep(), 1, M0, 2) == pytest.approx(0.9)
    trials = 30
    ok = sum(distinguish(high, 1, M0, rng).label == "X" for _ in range(trials))
    ok += sum(distinguish(low, 1, M0, rng).label == "Y" for _ in range(trials))
    assert ok >= 2 / 3 * 2 * trials


def test_singleton_threshold():
    assert singleton_threshold(2, 2) == pytest.approx(1 / (9 * 32 * 4))


def test_dephasing_pair_shift():
    X, Y, B = dephasing_pair(2, 2)
    diff = X.mean_natural_rep() - B
    j, k = np.unravel_index(np.argmax(np.abs(diff)), diff.shape)
    assert abs(diff[j, k]) == pytest.approx(4 * singleton_threshold(2, 2))
    assert np.allclose(Y.mean_natural_rep(), B)


def test_singleton_scan_is_brute_force_max(rng):
    X, Y, B = dephasing_pair(2, 2)
    res = singleton_distinguish(X, B, 2, np.random.default_rng(5))
    # replay the same stream entry by entry
    replay = np.random.default_rng(5)
    n = sample_count_for(singleton_threshold(2, 2), 1 / (3 * 16))
    devs = np.array([[abs(estimate_entry(X, j, k, n, replay) - B[j, k]) for k in range(4)] for j in range(4)])
    assert res.max_deviation == pytest.approx(devs.max())
    assert res.argmax == tuple(int(x) for x in np.unravel_index(np.argmax(devs), devs.shape))


def test_singleton_labels():
    rng = np.random.default_rng(9)
    X, Y, B = dephasing_pair(2, 2)
    trials = 30
    assert sum(singleton_distinguish(Y, B, 2, rng).label == "Y" for _ in range(trials)) >= 2 / 3 * trials
    assert sum(singleton_distinguish(X, B, 2, rng).label == "X" for _ in range(trials)) >= 2 / 3 * trials


def test_pauli_mixture_source():
    src = pauli_mixture_source([0.25, 0.75], 4)
    assert src.m == 4
    assert np.allclose(src.mean_natural_rep(), 0.25 * np.eye(16) + 0.75 * natural_rep(ChannelStep((np.kron(np.diag([1, -1]), np.eye(2)),))))
