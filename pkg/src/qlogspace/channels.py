"""Kraus-form channel programs and their reduction to contraction powering.

A program on ``S`` qubits starts in ``|0^S><0^S|``, applies ``T`` channels and
measures with diagonal 0/1 projectors. For unital steps the natural
representations are contractions, and so is the cyclic block matrix built from
them; the acceptance probability becomes a bilinear form of its ``T``-th power.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .exceptions import InvalidKraus, InvalidProgram, InvalidState, NotUnital, PaddingRequired, ValidationError
from .linalg import kron, spectral_norm, vectorize
from .powering import (
    PoweringInstance,
    amplification_rounds,
    amplified_prob,
    bilinear_estimate,
    invert_sin2,
    rotate,
)
from .synthesis import prep_ops
from .circuit import Circuit, RegisterLayout, run
from .validation import check_matrix, make_rng

TOL_KRAUS = 1e-9


@dataclass(frozen=True)
class ChannelStep:
    kraus: tuple[np.ndarray, ...]

    def __post_init__(self):
        ops = tuple(check_matrix(E, square=True, name="Kraus operator") for E in self.kraus)
        if not ops:
            raise InvalidKraus("a channel needs at least one Kraus operator")
        m = ops[0].shape[0]
        if any(E.shape != (m, m) for E in ops):
            raise InvalidKraus("Kraus operators must share one shape")
        total = sum(E.conj().T @ E for E in ops)
        if np.linalg.norm(total - np.eye(m), 2) > TOL_KRAUS:
            raise InvalidKraus("Kraus operators are not trace preserving")
        object.__setattr__(self, "kraus", ops)

    @property
    def m(self) -> int:
        return self.kraus[0].shape[0]

    def is_unital(self, tol: float = TOL_KRAUS) -> bool:
        total = sum(E @ E.conj().T for E in self.kraus)
        return bool(np.linalg.norm(total - np.eye(self.m), 2) <= tol)

    def tensor_identity(self, extra: int) -> "ChannelStep":
        """The same channel acting on the first factor of ``C^m (x) C^extra``."""
        eye = np.eye(extra)
        return ChannelStep(tuple(np.kron(E, eye) for E in self.kraus))


def _as_projector_diag(M, m: int) -> np.ndarray:
    M = np.asarray(M)
    if M.ndim == 2:
        if M.shape != (m, m) or np.any(M != np.diag(np.diag(M))):
            raise InvalidProgram("measurement projectors must be diagonal")
        M = np.diag(M)
    diag = np.real_if_close(M).astype(float)
    if diag.shape != (m,) or not np.all((diag == 0) | (diag == 1)):
        raise InvalidProgram("measurement projectors must be diagonal 0/1")
    return diag


@dataclass(frozen=True)
class ChannelProgram:
    """``steps`` on ``space`` qubits followed by a computational-basis measurement."""

    space: int
    steps: tuple[ChannelStep, ...]
    measurement: tuple[np.ndarray, ...]

    def __post_init__(self):
        m = 2**self.space
        steps = tuple(s if isinstance(s, ChannelStep) else ChannelStep(tuple(s)) for s in self.steps)
        if any(s.m != m for s in steps):
            raise InvalidProgram(f"all steps must act on dimension {m}")
        meas = tuple(_as_projector_diag(M, m) for M in self.measurement)
        if len(meas) < 2:
            raise InvalidProgram("measurement needs at least two outcomes")
        if np.any(np.sum(meas, axis=0) != 1):
            raise InvalidProgram("measurement projectors must sum to the identity")
        object.__setattr__(self, "steps", steps)
        object.__setattr__(self, "measurement", meas)

    @property
    def m(self) -> int:
        return 2**self.space

    @property
    def T(self) -> int:
        return len(self.steps)

    def is_unital(self) -> bool:
        return all(s.is_unital() for s in self.steps)

    def projector(self, j: int) -> np.ndarray:
        return np.diag(self.measurement[j]).astype(complex)

    def initial_state(self) -> np.ndarray:
        rho = np.zeros((self.m, self.m), dtype=complex)
        rho[0, 0] = 1.0
        return rho


def natural_rep(step: ChannelStep, *, sparse: bool = False):
    """``K = sum_i conj(E_i) (x) E_i`` so that ``vec(Phi(rho)) = K vec(rho)``."""
    if not isinstance(step, ChannelStep):
        step = ChannelStep(tuple(step))
    if sparse:
        terms = [sp.csr_matrix(E) for E in step.kraus]
        return sum(sp.kron(E.conj(), E, format="csr") for E in terms)
    return sum(kron(E.conj(), E) for E in step.kraus)


def check_state(rho, tol: float = 1e-9) -> np.ndarray:
    rho = check_matrix(rho, square=True, name="rho")
    if np.linalg.norm(rho - rho.conj().T) > tol:
        raise InvalidState("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > tol:
        raise InvalidState("density matrix does not have unit trace")
    if np.linalg.eigvalsh((rho + rho.conj().T) / 2).min() < -tol:
        raise InvalidState("density matrix is not positive semidefinite")
    return rho


def apply_channel(rho, step: ChannelStep) -> np.ndarray:
    rho = check_state(rho)
    if rho.shape[0] != step.m:
        raise InvalidState("state and channel dimensions differ")
    return sum(E @ rho @ E.conj().T for E in step.kraus)


def final_state(prog: ChannelProgram) -> np.ndarray:
    rho = prog.initial_state()
    for step in prog.steps:
        rho = apply_channel(rho, step)
    return rho


def exact_output_distribution(prog: ChannelProgram) -> np.ndarray:
    """``Tr[rho_T M_j]`` by explicit density-matrix evolution."""
    rho = final_state(prog)
    diag = np.real(np.diag(rho))
    return np.array([float(diag @ M) for M in prog.measurement])


def vectorized_output(prog: ChannelProgram, j: int = 0) -> float:
    """``vec(M_j)^+ K_T ... K_1 vec(rho_0)``, the same probabilities via natural reps."""
    x = vectorize(prog.initial_state())
    for step in prog.steps:
        x = natural_rep(step) @ x
    return float(np.real(np.vdot(vectorize(prog.projector(j)), x)))


# ------------------------------------------------------------ reduction


def _require_unital(prog: ChannelProgram) -> None:
    for t, step in enumerate(prog.steps):
        if not step.is_unital():
            raise NotUnital(f"step {t} is not unital")


def block_matrix(prog: ChannelProgram, *, sparse: bool = False):
    """Cyclic block matrix with ``K_{s+1}`` in block ``(s+1, s)`` and ``K_T`` in ``(0, T-1)``.

    Slots are the most significant index, so ``e_s (x) vec(rho)`` sits in block ``s``.
    """
    _require_unital(prog)
    if prog.T == 0:
        raise InvalidProgram("the reduction needs at least one step")
    T = prog.T
    blocks = [[None] * T for _ in range(T)]
    for s, step in enumerate(prog.steps):
        blocks[(s + 1) % T][s] = natural_rep(step, sparse=True)
    A = sp.bmat(blocks, format="csr", dtype=complex)
    return A if sparse else A.toarray()


def block_norm(prog: ChannelProgram) -> float:
    """``||A||`` of the block matrix: it permutes blocks, so this is ``max_s ||K_s||``."""
    return max(spectral_norm(natural_rep(s)) for s in prog.steps)


def reduction_vectors(prog: ChannelProgram, j: int = 0, *, weight: float | None = None):
    """``v = e_0 (x) vec(rho_0)`` and ``w = weight * e_0 (x) vec(M_j)``.

    ``weight`` defaults to ``1 / ||vec(M_j)||`` so ``w`` is a unit vector.
    """
    n = prog.m**2
    v = np.zeros(n * prog.T, dtype=complex)
    v[:n] = vectorize(prog.initial_state())
    w = np.zeros(n * prog.T, dtype=complex)
    vec_m = vectorize(prog.projector(j))
    if weight is None:
        rank = float(np.sum(prog.measurement[j]))
        if rank == 0:
            raise InvalidProgram(f"projector {j} is zero")
        weight = 1.0 / math.sqrt(rank)
    w[:n] = weight * vec_m
    return v, w


def reduction_instance(prog: ChannelProgram, j: int = 0, eps: float = 0.1, *, sparse: bool = True) -> PoweringInstance:
    """Powering instance with ``w^+ A^T v = Tr[rho_T M_j] / sqrt(m_j)``."""
    A = block_matrix(prog, sparse=sparse)
    v, w = reduction_vectors(prog, j)
    return PoweringInstance(A, prog.T, v, w, eps)


# ------------------------------------------------------------- padding


@dataclass(frozen=True)
class Padding:
    space: int
    balanced: bool
    added_qubits: int


def _with_extra_qubits(prog: ChannelProgram, extra: int, measurement=None) -> ChannelProgram:
    if extra == 0 and measurement is None:
        return prog
    d = 2**extra
    steps = tuple(s.tensor_identity(d) for s in prog.steps)
    if measurement is None:
        measurement = tuple(np.kron(M, np.ones(d)) for M in prog.measurement)
    return ChannelProgram(prog.space + extra, steps, measurement)


def pad_for_amplification(prog: ChannelProgram, eps: float) -> tuple[ChannelProgram, Padding]:
    """Pad to a two-outcome program with ``rank(M_0) = m / 2``, odd ``S`` and ``m >= max(4/eps, 8)``.

    Extra qubits are least significant and start in ``|0>``, so every outcome
    probability is unchanged. A rank mismatch is fixed with one ancilla: the new
    ``M_0`` is ``M_0 (x) |0><0| + (I - M_0) (x) |1><1|``.
    """
    if len(prog.measurement) != 2:
        raise InvalidProgram("amplified simulation needs a two-outcome measurement")
    M0 = prog.measurement[0]
    balanced = False
    if 2 * int(M0.sum()) != prog.m:
        balanced = True
        M0b = np.kron(M0, [1.0, 0.0]) + np.kron(1 - M0, [0.0, 1.0])
        prog = _with_extra_qubits(prog, 1, (M0b, 1 - M0b))
    space = prog.space
    need = max(4.0 / eps, 8.0)
    target = space
    while 2**target < need or target % 2 == 0:
        target += 1
    padded = _with_extra_qubits(prog, target - space)
    return padded, Padding(target, balanced, target - space + int(balanced))


# ---------------------------------------------------------- simulation


@dataclass
class UnitalResult:
    sin2: float
    p_hat: float
    p_oracle: float
    space: int
    rounds: int
    amplitude: complex


def simulate_unital(
    prog: ChannelProgram, eps: float, mode: str = "exact", *, auto_pad: bool = True, **kwargs
) -> UnitalResult:
    """Amplified acceptance probability ``sin^2(p + alpha)`` and ``p_hat = arcsin(sqrt(.))``.

    ``exact`` evaluates ``<0|W|0> = w^+ A^T v`` with sparse products and
    applies the amplification rotation exactly; ``ideal`` and ``circuit`` run
    the counter circuit on the dense block matrix (small padded sizes only).
    """
    _require_unital(prog)
    p_oracle = float(exact_output_distribution(prog)[0])
    padded, pad = pad_for_amplification(prog, eps)
    if not auto_pad and pad.added_qubits:
        raise PaddingRequired(f"program needs {pad.added_qubits} extra qubits (space {pad.space})")
    m = padded.m
    k = amplification_rounds(m)
    A = block_matrix(padded, sparse=True)
    v, w = reduction_vectors(padded, 0, weight=math.sqrt(2.0 / m))
    if mode == "exact":
        x = v
        for _ in range(padded.T):
            x = A @ x
        c = complex(np.vdot(w, x))
        prob = rotate(c, k)
    else:
        inst = PoweringInstance(A.toarray(), padded.T, v, w, kwargs.pop("powering_eps", eps**2 / (8 * m)))
        c = complex(np.vdot(w, np.linalg.matrix_power(inst.A, padded.T) @ v))
        kwargs.setdefault("m_cap", None)
        prob = amplified_prob(inst, m, mode, **kwargs)
    return UnitalResult(prob, invert_sin2(prob), p_oracle, pad.space, k, c)


@dataclass
class DistributionResult:
    probs: np.ndarray
    amplitudes: np.ndarray
    oracle: np.ndarray


def output_distribution(prog: ChannelProgram, eps: float, mode: str = "exact", seed=None, **kwargs) -> DistributionResult:
    """Probabilities ``|w_j|^2`` of a state prepared from estimated ``sqrt(Tr[rho_T M_j])``.

    Each ``Tr[rho_T M_j] / sqrt(m_j)`` is estimated to ``eps^2 / (2m)^3`` through
    the bilinear estimator; the preparation coefficients are streamed from the
    estimates with the tail sum starting at 1.
    """
    _require_unital(prog)
    rng = make_rng(seed)
    r = len(prog.measurement)
    delta = eps**2 / (2 * prog.m) ** 3
    amps = np.zeros(r)
    for j in range(r):
        inst = reduction_instance(prog, j, eps=delta, sparse=(mode == "exact"))
        x = bilinear_estimate(inst, mode, rng, **kwargs).value
        mj = float(np.sum(prog.measurement[j]))
        amps[j] = math.sqrt(max(0.0, x.real * math.sqrt(mj)))
    size = max(2, 1 << (r - 1).bit_length())
    layout = RegisterLayout.of(("out", size))
    circuit = Circuit(layout, prep_ops(np.pad(amps, (0, size - r)), "out"))
    out = run(circuit, layout.basis_state()).amplitudes
    probs = np.abs(out[:r]) ** 2
    return DistributionResult(probs, amps, exact_output_distribution(prog))


# ------------------------------------------------------------ builders


def random_mixed_unitary_step(m: int, n_terms: int = 3, seed=None) -> ChannelStep:
    """``sum_i p_i U_i rho U_i^+`` with random weights and Haar unitaries (unital)."""
    from .randmat import random_unitary

    rng = make_rng(seed)
    p = rng.dirichlet(np.ones(n_terms))
    return ChannelStep(tuple(math.sqrt(pi) * random_unitary(m, rng) for pi in p))


def dephasing_step(m: int, qubit: int = 0) -> ChannelStep:
    """Computational-basis measurement of one qubit (most significant is 0), as a channel."""
    S = int(math.log2(m))
    bit = S - 1 - qubit
    d0 = np.array([float(((i >> bit) & 1) == 0) for i in range(m)])
    return ChannelStep((np.diag(d0).astype(complex), np.diag(1 - d0).astype(complex)))


def random_unital_program(space: int, T: int, seed=None, outcomes: int = 2, dephase: bool = True) -> ChannelProgram:
    """Random unital program; with ``dephase`` some steps are mid-circuit measurements."""
    rng = make_rng(seed)
    m = 2**space
    steps = []
    for _ in range(T):
        if dephase and rng.random() < 0.3:
            steps.append(dephasing_step(m, int(rng.integers(space))))
        else:
            steps.append(random_mixed_unitary_step(m, int(rng.integers(1, 4)), rng))
    return ChannelProgram(space, tuple(steps), basis_measurement(space, outcomes))


def basis_measurement(space: int, outcomes: int = 2) -> tuple[np.ndarray, ...]:
    """Measure the leading ``log2(outcomes)`` qubits."""
    m = 2**space
    bits = int(math.log2(outcomes))
    if 2**bits != outcomes or bits > space:
        raise ValidationError("outcomes must be a power of two not exceeding 2^space")
    labels = np.arange(m) >> (space - bits)
    return tuple((labels == j).astype(float) for j in range(outcomes))
