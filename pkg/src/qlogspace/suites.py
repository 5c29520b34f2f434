"""Quick invariant suites behind ``qlogspace verify``.

Each check returns ``(passed, detail)``; sizes are small so the whole suite
runs in seconds.
"""
from __future__ import annotations

import itertools
from typing import Callable

import numpy as np

from . import block_encoding as be
from .channels import (
    block_matrix,
    exact_output_distribution,
    natural_rep,
    random_unital_program,
    reduction_vectors,
    vectorized_output,
)
from .circuit import Circuit, GateOp, RegisterLayout, circuit_unitary, embed, invert, run
from .learning import TruncationParams, shift_truncate
from .linalg import block_permutations, herm_eig, hermitian_dilation, kron, spectral_norm, unitary_dilation, v_a_matrix, vectorize
from .powering import (
    PoweringInstance,
    combine_bilinear,
    counter_leakage,
    extract_value,
    NoisyProbOracle,
    powering_prob,
)
from .randmat import random_contraction, random_hermitian, random_unit_vector, random_unitary
from .synthesis import Permutation, compose, decompose, perm_circuit, prep_circuit
from .validation import make_rng

Check = Callable[[np.random.Generator], tuple[bool, str]]


def _linalg(rng) -> tuple[bool, str]:
    worst = 0.0
    for _ in range(20):
        m = int(rng.integers(1, 6))
        A = random_contraction(m, rng)
        U = unitary_dilation(A)
        worst = max(worst, np.linalg.norm(U.conj().T @ U - np.eye(2 * m), 2))
        H = random_hermitian(m, rng)
        eig = herm_eig(H)
        worst = max(worst, np.linalg.norm(eig.reconstruct() - H, 2))
        B, C, rho = (random_contraction(m, rng) for _ in range(3))
        worst = max(worst, np.linalg.norm(vectorize(B @ rho @ C.conj().T) - kron(C.conj(), B) @ vectorize(rho)))
    return worst <= 1e-9, f"max residual {worst:.3g}"


def _circuit(rng) -> tuple[bool, str]:
    layout = RegisterLayout.of(("a", 2), ("b", 3), ("c", 2))
    ops = [
        GateOp(("b",), random_unitary(3, rng)),
        GateOp(("c", "a"), random_unitary(4, rng), controls=(("b", 1),)),
        GateOp(("a",), random_unitary(2, rng)),
    ]
    circuit = Circuit(layout, ops)
    U = circuit_unitary(circuit)
    ref = np.eye(layout.total_dim)
    for op in ops:
        ref = embed(layout, op) @ ref
    state = layout.product_state({"b": random_unit_vector(3, rng)})
    back = run(invert(circuit), run(circuit, state))
    err = max(np.linalg.norm(U - ref, 2), np.linalg.norm(back.amplitudes - state.amplitudes))
    return err <= 1e-9, f"max residual {err:.3g}"


def _synthesis(rng) -> tuple[bool, str]:
    for images in itertools.permutations(range(1, 6)):
        sigma = Permutation(images)
        if compose(decompose(sigma), 5) != sigma:
            return False, f"decomposition fails for {images}"
    worst = 0.0
    for dim in (2, 4, 8, 16):
        v = random_unit_vector(dim, rng)
        c = prep_circuit(v)
        worst = max(worst, np.linalg.norm(run(c, c.layout.basis_state()).amplitudes - v))
        sigma = Permutation.from_zero_based(rng.permutation(dim))
        worst = max(worst, np.abs(circuit_unitary(perm_circuit(sigma, dim)) - sigma.matrix()).max())
    return worst <= 1e-8, f"max residual {worst:.3g}"


def _block_encoding(rng) -> tuple[bool, str]:
    A = random_contraction(2, rng)
    enc = be.block_encoding_circuit(A, 0.2)
    err = be.verify_block_encoding(enc, trials=20, seed=rng)
    left, right = block_permutations(2)
    dil = np.linalg.norm(left @ unitary_dilation(hermitian_dilation(A)) @ right - v_a_matrix(A), 2)
    return err <= 0.2 and dil <= 1e-9, f"error {err:.3g}, permutation identity {dil:.3g}"


def _powering(rng) -> tuple[bool, str]:
    worst, leak = 0.0, 0.0
    for _ in range(5):
        m, T = int(rng.integers(1, 5)), int(rng.integers(1, 5))
        inst = PoweringInstance(random_contraction(m, rng), T, random_unit_vector(m, rng), random_unit_vector(m, rng))
        worst = max(worst, abs(powering_prob(inst, "ideal") - inst.oracle_prob()))
        leaks = counter_leakage(inst)
        leak = max(leak, leaks["beyond"], leaks["at_one"])
    x = complex(rng.normal(), rng.normal()) * 0.5
    alg = abs(combine_bilinear(abs(x) ** 2, abs((x + 1) / 2) ** 2, abs((x + 1j) / 2) ** 2) - x)
    bits = max(abs(extract_value(NoisyProbOracle(p, 0.0), 0.1) - p) for p in np.linspace(0, 1, 101))
    ok = worst <= 1e-8 and leak <= 1e-10 and alg <= 1e-12 and bits <= 0.05
    return ok, f"ideal {worst:.3g}, leakage {leak:.3g}, bilinear {alg:.3g}, bits {bits:.3g}"


def _channels(rng) -> tuple[bool, str]:
    worst = 0.0
    for _ in range(5):
        prog = random_unital_program(int(rng.integers(1, 3)), int(rng.integers(1, 4)), rng)
        p = exact_output_distribution(prog)[0]
        worst = max(worst, abs(vectorized_output(prog) - p))
        A = block_matrix(prog)
        v, w = reduction_vectors(prog, 0, weight=np.sqrt(2 / prog.m))
        amp = np.vdot(w, np.linalg.matrix_power(A, prog.T) @ v)
        worst = max(worst, abs(amp - np.sqrt(2 / prog.m) * p))
        worst = max(worst, max(0.0, spectral_norm(A) - 1))
        worst = max(worst, max(0.0, max(spectral_norm(natural_rep(s)) for s in prog.steps) - 1))
    return worst <= 1e-9, f"max residual {worst:.3g}"


def _learning(rng) -> tuple[bool, str]:
    params = TruncationParams.create(2, 2, 64, rng)
    worst = 0.0
    for _ in range(200):
        a = complex(rng.uniform(-1, 1), rng.uniform(-1, 1)) / np.sqrt(2)
        worst = max(worst, abs(shift_truncate(a, params) - a) * params.N)
    return worst <= np.sqrt(2) + 1e-12, f"max N*|shift_truncate(a) - a| = {worst:.3g}"


SUITES: dict[str, Check] = {
    "linalg": _linalg,
    "circuit": _circuit,
    "synthesis": _synthesis,
    "block_encoding": _block_encoding,
    "powering": _powering,
    "channels": _channels,
    "learning": _learning,
}


def run_suites(names, seed=0) -> dict[str, dict]:
    if names == "all" or names == ["all"]:
        names = list(SUITES)
    results = {}
    for name in names:
        if name not in SUITES:
            raise KeyError(name)
        rng = make_rng(np.random.SeedSequence([seed, list(SUITES).index(name)]))
        passed, detail = SUITES[name](rng)
        results[name] = {"passed": bool(passed), "detail": detail}
    return results
