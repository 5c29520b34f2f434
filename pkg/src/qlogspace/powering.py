"""Contraction powering and the estimators built on it.

The powering circuit keeps a counter ``c`` in ``[0, 2T)`` split as
``c = 4 * hi + dil`` so that the dilation pair of ``V_A`` is the low part of
the counter. ``V_A`` is block diagonal over the pairs ``{2i, 2i+1}``, and the
counter permutation moves junk away from ``c = 0`` after every step, so the
all-zero amplitude after ``T`` steps is ``w^+ A^T v``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
import scipy.sparse as sp

from . import block_encoding as be
from .circuit import Circuit, GateOp, RegisterLayout, iter_run, run_batch
from .exceptions import NotContraction, PaddingRequired, ValidationError, ZeroMatrix
from .linalg import frobenius_norm, matrix_power_oracle, spectral_norm, v_a_matrix
from .synthesis import Permutation, perm_ops, prep_ops
from .validation import TOL_CONTRACT, check_matrix, check_unit_vector, make_rng

Mode = Literal["exact", "ideal", "circuit"]

HI, DIL, VEC, EST = "hi", be.DIL, be.VEC, be.EST
T_CAP = 16
M_CAP = 16
ELL_CAP = 10
DENSE_CHECK_LIMIT = 4096


@dataclass
class PoweringInstance:
    """``A`` (dense or scipy sparse), ``T`` steps, unit vectors ``v`` and ``w``."""

    A: np.ndarray | sp.spmatrix
    T: int
    v: np.ndarray
    w: np.ndarray
    eps: float = 0.1

    def __post_init__(self):
        if sp.issparse(self.A):
            self.A = sp.csr_matrix(self.A, dtype=complex)
            if self.A.shape[0] != self.A.shape[1]:
                raise ValidationError("A must be square")
            if self.A.shape[0] <= DENSE_CHECK_LIMIT:
                _check_contraction_norm(self.A.toarray())
        else:
            self.A = check_matrix(self.A, square=True)
            _check_contraction_norm(self.A)
        if int(self.T) != self.T or self.T < 1:
            raise ValidationError("T must be a positive integer")
        self.T = int(self.T)
        self.v = check_unit_vector(self.v, dim=self.m, name="v")
        self.w = check_unit_vector(self.w, dim=self.m, name="w")
        if not 0 < self.eps < 1:
            raise ValidationError("eps must lie in (0, 1)")

    @property
    def m(self) -> int:
        return self.A.shape[0]

    def dense(self) -> np.ndarray:
        return self.A.toarray() if sp.issparse(self.A) else self.A

    def oracle_amplitude(self) -> complex:
        """``w^+ A^T v`` by repeated matrix-vector products."""
        x = self.v.copy()
        for _ in range(self.T):
            x = self.A @ x
        return complex(np.vdot(self.w, x))

    def oracle_prob(self) -> float:
        return abs(self.oracle_amplitude()) ** 2


def _check_contraction_norm(A: np.ndarray) -> None:
    if spectral_norm(A) > 1 + TOL_CONTRACT:
        raise NotContraction(f"spectral norm {spectral_norm(A):.6g} exceeds 1")


# ---------------------------------------------------------------- circuit


def counter_permutation(T: int) -> Permutation:
    """``0 -> 0, 2T-2 -> 1, 2T-1 -> 2, i -> i+2`` on ``[0, 2T)`` (identity for T = 1)."""
    if T == 1:
        return Permutation.identity(2)
    n = 2 * T
    images = [0] * n
    for i in range(1, n - 2):
        images[i] = i + 2
    images[n - 2] = 1
    images[n - 1] = 2
    return Permutation.from_zero_based(images)


def _pad_power_of_two(A: np.ndarray, v: np.ndarray, w: np.ndarray):
    m = A.shape[0]
    size = max(2, 1 << (m - 1).bit_length())
    if size == m:
        return A, v, w
    P = np.eye(size, dtype=complex)
    P[:m, :m] = A
    return P, np.pad(v, (0, size - m)), np.pad(w, (0, size - m))


def powering_ell(eps: float, T: int, cap: int = ELL_CAP) -> int:
    """Estimation qubits for the per-step budget ``eps / (2T)``, capped at ``cap``."""
    return min(be.ell_for_eps(eps / (2 * T)), cap)


@dataclass
class PoweringCircuit:
    circuit: Circuit
    ell: int | None
    mode: Mode
    # op index after which step i (1-based) is complete, and the index of each V_A start
    step_ends: list[int] = field(default_factory=list)
    va_starts: list[int] = field(default_factory=list)

    @property
    def layout(self) -> RegisterLayout:
        return self.circuit.layout

    def counter_values(self, psi: np.ndarray) -> np.ndarray:
        """Probability mass on each counter value ``4*hi + dil``."""
        t = np.abs(psi.reshape(self.layout.dims)) ** 2
        axes = tuple(range(2, t.ndim))
        return t.sum(axis=axes).reshape(-1)


def powering_circuit(
    inst: PoweringInstance,
    mode: Mode = "circuit",
    *,
    ell: int | None = None,
    cap: int | None = None,
    m_cap: int | None = M_CAP,
) -> PoweringCircuit:
    """The counter circuit ``W`` for ``inst``; ``mode='ideal'`` uses an exact ``V_A`` gate.

    ``m_cap=None`` lifts the matrix-size limit (the layout cap still applies).
    """
    if inst.T > T_CAP or (m_cap is not None and inst.m > m_cap):
        raise ValidationError(f"circuit modes support T <= {T_CAP} and m <= {m_cap}")
    A, v, w = _pad_power_of_two(inst.dense(), inst.v, inst.w)
    T = inst.T
    hi = max(2, math.ceil(T / 2))
    regs = [(HI, hi), (DIL, 4), (VEC, A.shape[0])]
    if mode == "circuit":
        ell = powering_ell(inst.eps, T) if ell is None else ell
        regs.append((EST, 2**ell))
        step = be.block_encoding_ops(A, ell)
    elif mode == "ideal":
        ell = None
        step = [GateOp((DIL, VEC), v_a_matrix(A), label="V_A", validate=False)]
    else:
        raise ValidationError(f"unknown circuit mode {mode!r}")
    layout = RegisterLayout.of(*regs, cap=cap)
    perm = perm_ops(counter_permutation(T), (HI, DIL), 4 * hi)
    ops = list(prep_ops(v, VEC))
    step_ends, va_starts = [], []
    for _ in range(T):
        va_starts.append(len(ops))
        ops.extend(step)
        ops.extend(perm)
        step_ends.append(len(ops) - 1)
    ops.extend(op.dagger() for op in reversed(prep_ops(w, VEC)))
    return PoweringCircuit(Circuit(layout, ops), ell, mode, step_ends, va_starts)


def _run_from_zero(pc: PoweringCircuit) -> np.ndarray:
    start = np.zeros((1, pc.layout.total_dim), dtype=complex)
    start[0, 0] = 1.0
    return run_batch(pc.circuit, start)[0]


def powering_amplitude(inst: PoweringInstance, mode: Mode = "exact", **kwargs) -> complex:
    """``<0|W|0>``; ``exact`` skips the circuit and returns ``w^+ A^T v``."""
    if mode == "exact":
        return inst.oracle_amplitude()
    pc = powering_circuit(inst, mode, **kwargs)
    return complex(_run_from_zero(pc)[0])


def powering_prob(inst: PoweringInstance, mode: Mode = "ideal", **kwargs) -> float:
    """Probability of measuring all registers in zero at the end of ``W``."""
    return abs(powering_amplitude(inst, mode, **kwargs)) ** 2


def counter_leakage(inst: PoweringInstance, mode: Mode = "ideal", **kwargs) -> dict:
    """Worst mass on forbidden counter values over the run.

    After step ``i`` the counter support must lie in ``{0} u [2, 2i+1]``: values
    ``>= 2i+2`` are unreachable and value 1 must be empty before each ``V_A``.
    """
    pc = powering_circuit(inst, mode, **kwargs)
    start = pc.layout.basis_state()
    ends = {idx: i + 1 for i, idx in enumerate(pc.step_ends)}
    beyond, at_one = 0.0, 0.0
    T = inst.T
    for idx, psi in enumerate(iter_run(pc.circuit, start)):
        if idx + 1 in pc.va_starts or idx in ends:
            mass = pc.counter_values(psi)
        if idx + 1 in pc.va_starts:
            at_one = max(at_one, float(mass[1]))
        if idx in ends:
            i = ends[idx]
            beyond = max(beyond, float(mass[2 * i + 2 :].sum()) if i < T else float(mass[2 * T :].sum()))
    return {"beyond": beyond, "at_one": at_one}


# ---------------------------------------------------------- amplification


def amplification_rounds(m: int) -> int:
    """``k = sqrt(m / 8)``; requires ``m = 8 * 4^j``."""
    k = math.isqrt(m // 8)
    if m < 8 or 8 * k * k != m:
        raise PaddingRequired(f"m = {m} is not 8 times a power of four")
    return k


def rotate(c: complex, k: int) -> float:
    """Probability outside ``|0>`` after ``R^k |0>`` with ``R = (I - 2 psi psi^+)(I - 2|0><0|)``.

    Only ``c = <0|W|0>`` matters: ``R`` preserves the plane of ``|0>`` and ``W|0>``.
    """
    s = math.sqrt(max(0.0, 1.0 - abs(c) ** 2))
    psi = np.array([c, s], dtype=complex)
    R = (np.eye(2) - 2 * np.outer(psi, psi.conj())) @ np.diag([-1.0, 1.0])
    x = np.linalg.matrix_power(R, k) @ np.array([1.0, 0.0])
    return float(1.0 - abs(x[0]) ** 2)


def amplify_state(psi: np.ndarray, k: int) -> float:
    """Same quantity as :func:`rotate` computed in the full space from ``psi = W|0>``."""
    x = np.zeros_like(psi)
    x[0] = 1.0
    for _ in range(k):
        x[0] = -x[0]
        x = x - 2 * psi * np.vdot(psi, x)
    return float(1.0 - abs(x[0]) ** 2)


def amplified_prob(inst: PoweringInstance, m: int, mode: Mode = "exact", **kwargs) -> float:
    """``sin^2(p + alpha)`` for a channel instance with target ``<0|W|0> = sqrt(2/m) p``."""
    k = amplification_rounds(m)
    if mode == "exact":
        return rotate(inst.oracle_amplitude(), k)
    pc = powering_circuit(inst, mode, **kwargs)
    return amplify_state(_run_from_zero(pc), k)


def invert_sin2(prob: float) -> float:
    """Principal-branch ``arcsin(sqrt(prob))``."""
    return float(math.asin(math.sqrt(min(max(prob, 0.0), 1.0))))


# -------------------------------------------------------- bit extraction


class NoisyProbOracle:
    """Repeated noisy reads of a fixed probability ``p``.

    ``uniform``: ``p`` plus uniform noise in ``[-accuracy, accuracy]``; with
    probability ``delta`` a read is replaced by a uniform value in ``[0, 1]``.
    ``two_value``: each read is one of ``values`` (chosen by the seeded stream
    unless ``pattern`` fixes the sequence).
    """

    def __init__(self, p: float, accuracy: float, *, delta: float = 0.0, seed=None,
                 mode: str = "uniform", values=None, pattern=None):
        if not 0 <= p <= 1 + 1e-9:
            raise ValidationError("p must lie in [0, 1]")
        if mode not in ("uniform", "two_value"):
            raise ValidationError(f"unknown oracle mode {mode!r}")
        self.p = float(min(p, 1.0))
        self.accuracy = float(accuracy)
        self.delta = float(delta)
        self.mode = mode
        self.rng = make_rng(seed)
        self.values = tuple(values) if values is not None else None
        if mode == "two_value":
            if self.values is None or len(self.values) != 2:
                raise ValidationError("two_value mode needs exactly two values")
            if any(abs(x - self.p) > self.accuracy + 1e-15 for x in self.values):
                raise ValidationError("both values must be within accuracy of p")
        self.pattern = list(pattern) if pattern is not None else None
        self.queries = 0

    def query(self) -> float:
        n = self.queries
        self.queries += 1
        if self.mode == "two_value":
            pick = self.pattern[n % len(self.pattern)] if self.pattern else int(self.rng.integers(2))
            return self.values[pick]
        if self.delta and self.rng.random() < self.delta:
            return float(self.rng.random())
        return self.p + float(self.rng.uniform(-self.accuracy, self.accuracy))


def extraction_bits(eps: float) -> int:
    return math.ceil(math.log2(1.0 / eps)) + 2


def extract_bits(oracle: NoisyProbOracle, eps: float) -> tuple[float, list[int]]:
    """MSB-first extraction: bit ``i`` is 1 iff a fresh read exceeds ``q`` by ``2^-i``."""
    q = 0.0
    bits = []
    for i in range(1, extraction_bits(eps) + 1):
        step = 2.0**-i
        # covers both clamps: negative residue gives 0, residue >= 2 step gives 1
        b = 1 if oracle.query() - q >= step else 0
        q += b * step
        bits.append(b)
    return q, bits


def extract_value(oracle: NoisyProbOracle, eps: float) -> float:
    if oracle.accuracy > eps / 4 + 1e-15:
        raise ValidationError("oracle accuracy must be at most eps / 4")
    return extract_bits(oracle, eps)[0]


# -------------------------------------------------------- bilinear form


def anchored_instances(inst: PoweringInstance) -> tuple[PoweringInstance, PoweringInstance, PoweringInstance]:
    """The instance itself and the two anchored ones on ``A (+) 1``.

    ``v1 = (v, 1)/sqrt2`` and ``v1' = (v, i)/sqrt2`` share ``w1 = (w, 1)/sqrt2``.
    The extra dimension is padded with identity up to a power of two.
    """
    A = inst.dense()
    m = A.shape[0]
    size = 1 << m.bit_length()  # power of two >= m + 1
    A1 = np.eye(size, dtype=complex)
    A1[:m, :m] = A
    r = 1 / math.sqrt(2)

    def lift(x, anchor):
        out = np.zeros(size, dtype=complex)
        out[:m] = x * r
        out[m] = anchor * r
        return out

    w1 = lift(inst.w, 1.0)
    real = PoweringInstance(A1, inst.T, lift(inst.v, 1.0), w1, inst.eps)
    imag = PoweringInstance(A1, inst.T, lift(inst.v, 1j), w1, inst.eps)
    return inst, real, imag


def combine_bilinear(p0: float, p_re: float, p_im: float) -> complex:
    """``w^+ A^T v`` from ``|x|^2``, ``|(x + 1)/2|^2`` and ``|(x + i)/2|^2``."""
    return complex(0.5 * (4 * p_re - p0 - 1), 0.5 * (4 * p_im - p0 - 1))


@dataclass
class BilinearResult:
    value: complex
    probs: tuple[float, float, float]
    estimates: tuple[float, float, float]


def bilinear_estimate(inst: PoweringInstance, mode: Mode = "ideal", seed=None, **kwargs) -> BilinearResult:
    """Estimate ``w^+ A^T v`` to ``inst.eps`` through three extracted probabilities.

    Each probability is extracted to ``eps / 4`` (oracle accuracy ``eps / 8``);
    the combination amplifies errors by at most ``2.5 * sqrt(2)``.
    """
    rng = make_rng(seed)
    eps_x = inst.eps / 2
    probs, estimates = [], []
    for sub in anchored_instances(inst):
        p = min(powering_prob(sub, mode, **kwargs), 1.0)
        oracle = NoisyProbOracle(p, eps_x / 4, seed=rng)
        probs.append(p)
        estimates.append(extract_value(oracle, eps_x))
    return BilinearResult(combine_bilinear(*estimates), tuple(probs), tuple(estimates))


def bilinear_value(inst: PoweringInstance, mode: Mode = "ideal", seed=None, **kwargs) -> complex:
    return bilinear_estimate(inst, mode, seed, **kwargs).value


# ------------------------------------------------------- general powering


def spectral_norm_estimate(A, eps1: float, seed=None) -> float:
    """``||A / ||A||_F||`` plus seeded uniform noise in ``[-eps1, eps1]``."""
    A = check_matrix(A, square=True)
    fro = frobenius_norm(A)
    if fro == 0:
        raise ZeroMatrix("A is zero")
    exact = spectral_norm(A) / fro
    if eps1 == 0:
        return exact
    return exact + float(make_rng(seed).uniform(-eps1, eps1))


def rescale_factor(A, T: int, seed=None) -> tuple[float, float]:
    """``(alpha, sigma)`` with ``alpha = sigma ||A||_F / (1 - sqrt(m) eps1)``."""
    A = check_matrix(A, square=True)
    m = A.shape[0]
    eps1 = 1.0 / (3 * T * math.sqrt(m))
    sigma = spectral_norm_estimate(A, eps1, seed)
    alpha = sigma * frobenius_norm(A) / (1 - math.sqrt(m) * eps1)
    return alpha, sigma


def general_power(A, T: int, v, w, eps: float, *, mode: Mode = "ideal", seed=None, **kwargs) -> complex:
    """``w^+ A^T v`` for any nonzero square ``A``, error ``eps * max(1, ||A||^T)``."""
    rng = make_rng(seed)
    alpha, _ = rescale_factor(A, T, rng)
    A = check_matrix(A, square=True)
    inst = PoweringInstance(A / alpha, T, v, w, eps / 3)
    return alpha**T * bilinear_value(inst, mode, rng, **kwargs)


def oracle_value(A, T: int, v, w) -> complex:
    return complex(np.vdot(w, matrix_power_oracle(A, T) @ v))
