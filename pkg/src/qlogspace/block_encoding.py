"""Block encoding of a contraction through phase estimation of ``exp(iH)``.

Register conventions (most significant first):

``dil``  dimension 4, the two dilation qubits. Value ``2*f + h`` where ``f``
         selects the rows of ``U_H`` and ``h`` the half of the Hermitian
         dilation ``H = [[0, A], [A^+, 0]]``.
``vec``  dimension ``m``, the vector register.
``est``  dimension ``2^ell``, the phase-estimation register.

The circuit ``Q_A`` is: left block permutation, forward phase estimation,
eigenvalue-controlled reflections on ``f``, inverse phase estimation, right
block permutation. On ``v (x) |0^ell>`` it approximates ``(V_A v) (x) |0^ell>``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuit import Circuit, FourierOp, GateOp, RegisterLayout, run, run_batch
from .exceptions import NotUnitary, ValidationError
from .linalg import block_permutations, herm_eig, hermitian_dilation, reflection, v_a_matrix
from .randmat import random_unit_vector
from .validation import (
    TOL_CONTRACT,
    TOL_UNITARY,
    check_contraction,
    check_hermitian,
    check_power_of_two,
    check_unit_vector,
    is_unitary,
    make_rng,
)

DIL, VEC, EST = "dil", "vec", "est"


def phase_grid(ell: int) -> np.ndarray:
    """``lambda(j) = 2 j pi / 2^ell - pi`` truncated to ``[-1, 1]``."""
    N = 2**ell
    return np.clip(2.0 * np.pi * np.arange(N) / N - np.pi, -1.0, 1.0)


def grid_spacing(ell: int) -> float:
    """Phase resolution ``2 pi / 2^ell`` of an ``ell``-qubit estimation register."""
    return math.pi * 2.0 ** (1 - ell)


def ell_for_eps(eps: float) -> int:
    """Estimation qubits for block-encoding error ``eps``.

    The internal phase-estimation budget is ``eps**2 / 12``; we take the
    smallest ``ell`` with ``2^ell > pi / budget`` plus one guard bit.
    """
    if not 0 < eps < 1:
        raise ValidationError("eps must lie in (0, 1)")
    budget = eps * eps / 12.0
    return math.floor(math.log2(math.pi / budget)) + 1 + 1


def hamiltonian_exponential(H, t: float = 1.0) -> np.ndarray:
    """``exp(i H t)`` from the eigendecomposition of a Hermitian contraction."""
    H = check_hermitian(H)
    check_contraction(H, name="H")
    eig = herm_eig(H)
    return eig.apply_function(lambda w: np.exp(1j * w * t))


def controlled_power_ops(
    H, ell: int, *, system: tuple[str, ...], est: str = EST, pad_left: int = 1
) -> list[GateOp]:
    """Gates applying ``(-exp(iH))^j`` to ``system`` when ``est`` holds ``j``.

    The extra ``(-1)^j`` shifts the eigenphase ``lambda`` to ``lambda + pi`` so
    estimate ``j`` reads off ``lambda(j) = 2 j pi / 2^ell - pi`` without wrap-around.
    ``pad_left`` tensors an identity of that size on the most significant side.
    """
    eig = herm_eig(H)
    eye = np.eye(pad_left)
    ops = []
    for j in range(1, 2**ell):
        # exact power from the spectrum rather than repeated squaring
        U = eig.apply_function(lambda w: np.exp(1j * j * (w + np.pi)))
        M = np.kron(eye, U) if pad_left > 1 else U
        ops.append(GateOp(system, M, controls=((est, j),), label=f"c-exp(iH)^{j}", validate=False))
    return ops


def qpe_ops(H, ell: int, *, system: tuple[str, ...], est: str = EST, pad_left: int = 1) -> list:
    """Forward phase estimation of ``exp(iH)``: Fourier prep, controlled powers, inverse Fourier."""
    return [
        FourierOp(est),
        *controlled_power_ops(H, ell, system=system, est=est, pad_left=pad_left),
        FourierOp(est, inverse=True),
    ]


def qpe_circuit(H, ell: int) -> Circuit:
    """Phase estimation over layout ``[(system, d), (est, 2^ell)]``."""
    H = check_hermitian(H)
    check_contraction(H, name="H")
    if ell < 1:
        raise ValidationError("ell must be >= 1")
    layout = RegisterLayout.of(("system", H.shape[0]), (EST, 2**ell))
    return Circuit(layout, qpe_ops(H, ell, system=("system",)))


def qpe_weights(H, ell: int, v) -> np.ndarray:
    """Distribution of the estimation register after phase estimation on ``v (x) |0>``."""
    circuit = qpe_circuit(H, ell)
    state = circuit.layout.product_state({"system": v})
    out = run(circuit, state).tensor()
    return np.sum(np.abs(out) ** 2, axis=0)


def eigenvalue_rotation(ell: int, *, target: str = DIL, est: str = EST) -> list[GateOp]:
    """``U_{lambda(j)}`` on the rows qubit of ``dil``, controlled on ``est = j``."""
    eye = np.eye(2)
    ops = []
    for j, lam in enumerate(phase_grid(ell)):
        ops.append(
            GateOp((target,), np.kron(reflection(lam), eye), controls=((est, j),), label=f"rot{j}", validate=False)
        )
    return ops


@dataclass
class BlockEncoding:
    source: np.ndarray
    ell: int
    circuit: Circuit
    eps: float

    @property
    def m(self) -> int:
        return self.source.shape[0]

    @property
    def gate_count(self) -> int:
        return self.circuit.gate_count

    @property
    def vec_dim(self) -> int:
        return self.circuit.layout.dim(VEC)

    def target_matrix(self) -> np.ndarray:
        """``V_A`` on ``(dil, vec)``, with the padded source when ``m = 1``."""
        A = self.source
        if A.shape[0] != self.vec_dim:
            A = np.pad(A, ((0, 1), (0, 1)))
        return v_a_matrix(A)

    def apply(self, vectors: np.ndarray) -> np.ndarray:
        """Run ``Q_A`` on rows ``v (x) |0^ell>``; returns full output states."""
        vectors = np.atleast_2d(np.asarray(vectors, dtype=complex))
        N = 2**self.ell
        inputs = np.zeros((vectors.shape[0], 4 * self.vec_dim * N), dtype=complex)
        inputs[:, ::N] = vectors
        return run_batch(self.circuit, inputs)


def block_encoding_ops(A, ell: int) -> list:
    """The op sequence of ``Q_A`` on registers ``dil``, ``vec``, ``est``."""
    m = A.shape[0]
    H = hermitian_dilation(A)
    # H acts on (h, vec) which is the low part of (dil, vec)
    system = (DIL, VEC)
    left, right = (P[::m, ::m] for P in block_permutations(m))
    # V_A = left @ U_H @ right, so `right` is applied first
    forward = qpe_ops(H, ell, system=system, pad_left=2)
    backward = [op.dagger() for op in reversed(forward)]
    return [
        GateOp((DIL,), right, label="perm_right", validate=False),
        *forward,
        *eigenvalue_rotation(ell),
        *backward,
        GateOp((DIL,), left, label="perm_left", validate=False),
    ]


def block_encoding_circuit(A, eps: float, *, ell: int | None = None, cap: int | None = None) -> BlockEncoding:
    """Circuit ``Q_A`` with ``||Q_A (v (x) |0>) - (V_A v) (x) |0>|| <= eps``."""
    A = check_contraction(A, tol=TOL_CONTRACT)
    m = A.shape[0]
    check_power_of_two(m, "matrix dimension")
    ell = ell_for_eps(eps) if ell is None else int(ell)
    source = A
    if m == 1:
        # a scalar sits in the top-left corner of diag(a, 0); V_A is block diagonal in vec
        A = np.pad(A, ((0, 1), (0, 1)))
    layout = RegisterLayout.of((DIL, 4), (VEC, A.shape[0]), (EST, 2**ell), cap=cap)
    return BlockEncoding(source, ell, Circuit(layout, block_encoding_ops(A, ell)), eps)


def verify_block_encoding(be: BlockEncoding, trials: int = 100, seed=0, chunk: int = 25) -> float:
    """Max over random unit ``v`` of ``||Q_A(v (x) |0>) - (V_A v) (x) |0>||``."""
    rng = make_rng(seed)
    dim = 4 * be.vec_dim
    V = be.target_matrix()
    vs = np.array([random_unit_vector(dim, rng) for _ in range(trials)])
    N = 2**be.ell
    worst = 0.0
    for start in range(0, trials, chunk):
        batch = vs[start : start + chunk]
        outputs = be.apply(batch)
        outputs[:, ::N] -= batch @ V.T
        worst = max(worst, float(np.max(np.linalg.norm(outputs, axis=1))))
    return worst


def unitary_implementation(U, eps: float, **kwargs) -> BlockEncoding:
    """Block encoding of a unitary; with ``dil`` pinned to ``|00>`` it applies ``U``."""
    U = np.asarray(U, dtype=complex)
    if U.ndim != 2 or U.shape[0] != U.shape[1] or not is_unitary(U, TOL_UNITARY):
        raise NotUnitary("U is not unitary")
    return block_encoding_circuit(U, eps, **kwargs)


def apply_unitary_implementation(be: BlockEncoding, v) -> np.ndarray:
    """Run ``Q_U`` on ``|00> (x) v (x) |0^ell>`` and return the full output state."""
    v = check_unit_vector(v, dim=be.vec_dim)
    padded = np.zeros(4 * v.shape[0], dtype=complex)
    padded[: v.shape[0]] = v
    return be.apply(padded)[0]
