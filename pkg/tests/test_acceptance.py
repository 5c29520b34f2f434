"""End-to-end acceptance checks, one test per numbered criterion.

Each test prints a single ``criterion N: PASS|FAIL`` line with the measured
numbers, then asserts. Run with ``pytest tests/test_acceptance.py -v -s`` to
see the lines inline; they also appear in the captured output on failure.
"""
import itertools
import time

import numpy as np
import pytest

from qlogspace import block_encoding as be
from qlogspace.channels import exact_output_distribution, output_distribution, random_unital_program, simulate_unital
from qlogspace.circuit import run
from qlogspace.learning import dephasing_pair, estimated_contraction, singleton_distinguish, SampleSource
from qlogspace.channels import ChannelStep
from qlogspace.linalg import spectral_norm
from qlogspace.powering import (
    NoisyProbOracle,
    PoweringInstance,
    combine_bilinear,
    counter_leakage,
    extract_value,
    extraction_bits,
    general_power,
    oracle_value,
    powering_prob,
    rescale_factor,
)
from qlogspace.randmat import random_contraction, random_matrix, random_unit_vector, random_unitary
from qlogspace.synthesis import Permutation, compose, decompose, prep_circuit


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'} ({detail})")
        return ok

    return emit


def test_criterion_01_block_encoding(report):
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    worst_ratio = 0.0
    combos = [(m, eps) for m in (2, 4) for eps in (0.2, 0.1)]
    for i in range(20):
        m, eps = combos[i % 4]
        enc = be.block_encoding_circuit(random_contraction(m, rng), eps, cap=2**18)
        err = be.verify_block_encoding(enc, trials=100, seed=rng)
        worst_ratio = max(worst_ratio, err / eps)
    elapsed = time.perf_counter() - start
    ok = worst_ratio <= 1 and elapsed <= 60
    assert report(1, ok, f"max error/eps {worst_ratio:.3f}, {elapsed:.1f}s")


def _powering_instances():
    rng = np.random.default_rng(202)
    out = []
    for _ in range(50):
        m, T = int(rng.integers(1, 5)), int(rng.integers(1, 7))
        A = random_contraction(m, rng)
        out.append(PoweringInstance(A, T, random_unit_vector(m, rng), random_unit_vector(m, rng), 0.1))
    return out


def test_criterion_02_powering(report):
    start = time.perf_counter()
    worst_circuit = worst_ideal = 0.0
    for inst in _powering_instances():
        target = inst.oracle_prob()
        worst_ideal = max(worst_ideal, abs(powering_prob(inst, "ideal") - target))
        worst_circuit = max(worst_circuit, abs(powering_prob(inst, "circuit") - target))
    elapsed = time.perf_counter() - start
    ok = worst_circuit <= 0.1 and worst_ideal <= 1e-8 and elapsed <= 120
    assert report(2, ok, f"circuit {worst_circuit:.2e}, ideal {worst_ideal:.2e}, {elapsed:.1f}s")


def test_criterion_03_counter_locality(report):
    worst = 0.0
    for inst in _powering_instances():
        leaks = counter_leakage(inst, "ideal")
        worst = max(worst, leaks["beyond"], leaks["at_one"])
    assert report(3, worst <= 1e-10, f"max forbidden mass {worst:.2e}")


def test_criterion_04_permutations(report):
    start = time.perf_counter()
    exhaustive = all(compose(decompose(Permutation(p)), 5) == Permutation(p) for p in itertools.permutations(range(1, 6)))
    rng = np.random.default_rng(404)
    random_ok = True
    for _ in range(1000):
        m = int(rng.integers(1, 65))
        sigma = Permutation.from_zero_based(rng.permutation(m))
        random_ok &= compose(decompose(sigma), m) == sigma
    elapsed = time.perf_counter() - start
    ok = exhaustive and random_ok and elapsed <= 5
    assert report(4, ok, f"S5 {exhaustive}, random {random_ok}, {elapsed:.2f}s")


def test_criterion_05_state_preparation(report):
    rng = np.random.default_rng(505)
    start = time.perf_counter()
    worst = 0.0
    dims = [2, 4, 8, 16, 32]
    for i in range(500):
        dim = dims[i % 5]
        v = random_unit_vector(dim, rng)
        if i % 3 == 0 and dim > 2:
            # zero tail exercises the defaulted coefficients
            cut = int(rng.integers(1, dim))
            v[cut:] = 0
            v /= np.linalg.norm(v)
        c = prep_circuit(v)
        worst = max(worst, np.linalg.norm(run(c, c.layout.basis_state()).amplitudes - v))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-8 and elapsed <= 10
    assert report(5, ok, f"max error {worst:.2e}, {elapsed:.2f}s")


def test_criterion_06_unital_simulation(report):
    rng = np.random.default_rng(606)
    start = time.perf_counter()
    eps = 0.05
    worst_alpha = worst_p = 0.0
    for _ in range(20):
        prog = random_unital_program(int(rng.integers(1, 3)), int(rng.integers(1, 5)), rng)
        res = simulate_unital(prog, eps)
        p = exact_output_distribution(prog)[0]
        alpha = res.p_hat - p
        assert abs(res.sin2 - np.sin(p + alpha) ** 2) <= 1e-12
        worst_alpha = max(worst_alpha, abs(alpha))
        worst_p = max(worst_p, abs(res.p_hat - p))
    elapsed = time.perf_counter() - start
    ok = worst_alpha <= eps and worst_p <= eps and elapsed <= 300
    assert report(6, ok, f"max |alpha| {worst_alpha:.2e}, max |p_hat - p| {worst_p:.2e}, {elapsed:.1f}s")


def test_criterion_07_output_distribution(report):
    rng = np.random.default_rng(707)
    eps = 0.1
    worst_entry = worst_l1 = 0.0
    for _ in range(10):
        prog = random_unital_program(2, int(rng.integers(1, 5)), rng, outcomes=4)
        res = output_distribution(prog, eps, seed=rng)
        diff = np.abs(res.probs - res.oracle)
        worst_entry = max(worst_entry, diff.max())
        worst_l1 = max(worst_l1, diff.sum())
    ok = worst_entry <= eps and worst_l1 <= 0.4
    assert report(7, ok, f"max per-outcome {worst_entry:.2e}, max l1 {worst_l1:.2e}")


def test_criterion_08_bilinear_identity(report):
    rng = np.random.default_rng(808)
    worst = 0.0
    for _ in range(100):
        m, T = int(rng.integers(1, 6)), int(rng.integers(1, 7))
        A = random_contraction(m, rng)
        v, w = random_unit_vector(m, rng), random_unit_vector(m, rng)
        x = oracle_value(A, T, v, w)
        # the three squared magnitudes, each from its own dense evaluation
        A1 = np.eye(m + 1, dtype=complex)
        A1[:m, :m] = A
        v1 = np.append(v, 1) / np.sqrt(2)
        v1i = np.append(v, 1j) / np.sqrt(2)
        w1 = np.append(w, 1) / np.sqrt(2)
        p_re = abs(oracle_value(A1, T, v1, w1)) ** 2
        p_im = abs(oracle_value(A1, T, v1i, w1)) ** 2
        worst = max(worst, abs(combine_bilinear(abs(x) ** 2, p_re, p_im) - x))
    assert report(8, worst <= 1e-12, f"max error {worst:.2e}")


def test_criterion_09_general_powering(report):
    rng = np.random.default_rng(909)
    eps = 0.1
    worst_ratio = 0.0
    alpha_ok = True
    for _ in range(20):
        m, T = int(rng.integers(1, 4)), int(rng.integers(1, 5))
        A = random_matrix(m, seed=rng)
        norm = rng.uniform(0.5, 2.0)
        A *= norm / spectral_norm(A)
        v, w = random_unit_vector(m, rng), random_unit_vector(m, rng)
        seed = int(rng.integers(2**32))
        alpha, _ = rescale_factor(A, T, np.random.default_rng(seed))
        alpha_ok &= norm * (1 - 1e-12) <= alpha <= (1 + 1 / T) * norm * (1 + 1e-12)
        got = general_power(A, T, v, w, eps, seed=seed)
        worst_ratio = max(worst_ratio, abs(got - oracle_value(A, T, v, w)) / (eps * max(1.0, norm**T)))
    ok = worst_ratio <= 1 and alpha_ok
    assert report(9, ok, f"max error/bound {worst_ratio:.3f}, alpha bracket {alpha_ok}")


def test_criterion_10_shift_truncate(report):
    rng = np.random.default_rng(1010)
    steps = [ChannelStep((random_unitary(2, rng),)) for _ in range(3)]
    src = SampleSource(rng.dirichlet([1, 1, 1]), steps)
    A = src.mean_natural_rep()
    runs = 100
    consistent = close = 0
    always_contraction = True
    for _ in range(runs):
        est = estimated_contraction(src, 2, rng)
        consistent += est.consistent
        close += spectral_norm(est.matrix - A) <= 2 / est.params.L
        always_contraction &= spectral_norm(est.matrix) <= 1 + 1e-9
    ok = consistent >= 2 / 3 * runs and close >= 2 / 3 * runs and always_contraction
    assert report(10, ok, f"consistent {consistent}/{runs}, within 2/L {close}/{runs}, contraction {always_contraction}")


def test_criterion_11_singleton(report):
    rng = np.random.default_rng(1111)
    X, Y, B = dephasing_pair(2, 2)
    trials = 100
    matched = sum(singleton_distinguish(Y, B, 2, rng).label == "Y" for _ in range(trials))
    shifted = sum(singleton_distinguish(X, B, 2, rng).label == "X" for _ in range(trials))
    ok = matched >= 2 / 3 * trials and shifted >= 2 / 3 * trials
    assert report(11, ok, f"matched {matched}/{trials}, shifted {shifted}/{trials}")


def test_criterion_12_bit_extraction(report):
    worst_noiseless = worst_adversarial = 0.0
    for eps in (0.2, 0.1, 0.05):
        for p in np.linspace(0, 1, 1000):
            worst_noiseless = max(worst_noiseless, abs(extract_value(NoisyProbOracle(p, 0.0), eps) - p) / eps)
        n = extraction_bits(eps)
        acc = eps / 4
        for p in np.linspace(acc, 1 - acc, 41):
            for lo, hi in [(p - acc, p + acc), (p - acc, p), (p, p + acc)]:
                for pattern in itertools.product((0, 1), repeat=n):
                    oracle = NoisyProbOracle(p, acc, mode="two_value", values=(lo, hi), pattern=pattern)
                    worst_adversarial = max(worst_adversarial, abs(extract_value(oracle, eps) - p) / eps)
    ok = worst_noiseless <= 0.5 and worst_adversarial <= 0.5
    assert report(12, ok, f"max |q - p|/eps noiseless {worst_noiseless:.3f}, adversarial {worst_adversarial:.3f}")
