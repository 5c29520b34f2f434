"""Dense complex linear algebra and the dilations built on top of it.

Matrices are plain ``numpy`` complex arrays. Functions never mutate their
inputs.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .exceptions import NotContraction, ValidationError
from .validation import (
    TOL_CONTRACT,
    TOL_HERM,
    check_contraction,
    check_hermitian,
    check_matrix,
)


class HermEig(NamedTuple):
    """Eigendecomposition ``H = sum_k eigenvalues[k] * u_k u_k^dagger``.

    ``eigenvalues`` are ascending; ``eigenvectors[:, k]`` is ``u_k``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        U = self.eigenvectors
        return (U * self.eigenvalues) @ U.conj().T

    def apply_function(self, f) -> np.ndarray:
        """Return ``sum_k f(lambda_k) u_k u_k^dagger``."""
        U = self.eigenvectors
        return (U * f(self.eigenvalues)) @ U.conj().T


def vectorize(A) -> np.ndarray:
    """Stack the columns of ``A``: ``vec(A)[i + j*rows] = A[i, j]``."""
    A = check_matrix(A)
    return A.reshape(-1, order="F").copy()


def unvectorize(x, rows: int) -> np.ndarray:
    x = np.asarray(x, dtype=complex)
    return x.reshape((rows, -1), order="F").copy()


def kron(A, B) -> np.ndarray:
    return np.kron(check_matrix(A, name="A"), check_matrix(B, name="B"))


def spectral_norm(A) -> float:
    A = check_matrix(A)
    if A.size == 0:
        return 0.0
    return float(np.linalg.norm(A, 2))


def frobenius_norm(A) -> float:
    return float(np.linalg.norm(check_matrix(A), "fro"))


def herm_eig(H, *, tol: float = TOL_HERM) -> HermEig:
    H = check_hermitian(H, tol=tol)
    # Symmetrize so eigh sees an exactly Hermitian input.
    w, V = np.linalg.eigh((H + H.conj().T) / 2)
    return HermEig(w, V)


def psd_sqrt(M, *, tol: float = TOL_CONTRACT) -> np.ndarray:
    """Principal square root of a Hermitian PSD matrix.

    Eigenvalues in ``[-tol, 0)`` are rounding residue and clamped to zero;
    anything more negative raises.
    """
    eig = herm_eig(M, tol=max(tol, TOL_HERM))
    if eig.eigenvalues.size and eig.eigenvalues[0] < -tol:
        raise NotContraction(
            f"matrix is not positive semidefinite (min eigenvalue {eig.eigenvalues[0]:.3e})"
        )
    return eig.apply_function(lambda w: np.sqrt(np.clip(w, 0.0, None)))


def unitary_dilation(A, *, tol: float = TOL_CONTRACT) -> np.ndarray:
    """``U_A = [[A, sqrt(I - A A^+)], [sqrt(I - A^+ A), -A^+]]``."""
    A = check_contraction(A, tol=tol)
    m = A.shape[0]
    eye = np.eye(m)
    Ad = A.conj().T
    top_right = psd_sqrt(eye - A @ Ad, tol=10 * tol)
    bottom_left = psd_sqrt(eye - Ad @ A, tol=10 * tol)
    return np.block([[A, top_right], [bottom_left, -Ad]])


def hermitian_dilation(A) -> np.ndarray:
    """``H = [[0, A], [A^+, 0]]``; Hermitian with the same spectral norm as A."""
    A = check_matrix(A, square=True)
    Z = np.zeros_like(A)
    return np.block([[Z, A], [A.conj().T, Z]])


def block_permutations(m: int) -> tuple[np.ndarray, np.ndarray]:
    """The two block permutations with ``V_A = P_left @ U_H @ P_right``.

    Both act on four ``m``-dimensional blocks, i.e. on two qubits only.
    """
    left = np.zeros((4, 4))
    # block rows: 0 <- 0, 1 <- 3, 2 <- 1, 3 <- 2
    for row, col in ((0, 0), (1, 3), (2, 1), (3, 2)):
        left[row, col] = 1.0
    right = np.zeros((4, 4))
    for row, col in ((0, 2), (1, 0), (2, 1), (3, 3)):
        right[row, col] = 1.0
    eye = np.eye(m)
    return np.kron(left, eye), np.kron(right, eye)


def v_a_matrix(A, *, tol: float = TOL_CONTRACT) -> np.ndarray:
    """``V_A = diag(U_A, U_{A^+})``, a ``4m x 4m`` unitary."""
    A = check_contraction(A, tol=tol)
    m = A.shape[0]
    V = np.zeros((4 * m, 4 * m), dtype=complex)
    V[: 2 * m, : 2 * m] = unitary_dilation(A, tol=tol)
    V[2 * m :, 2 * m :] = unitary_dilation(A.conj().T, tol=tol)
    return V


def matrix_power_oracle(A, T: int) -> np.ndarray:
    """Exact ``A**T`` by binary exponentiation."""
    A = check_matrix(A, square=True)
    if T < 0:
        raise ValidationError("T must be non-negative")
    return np.linalg.matrix_power(A, T)


def reflection(a: float) -> np.ndarray:
    """The real 2x2 dilation ``U_a = [[a, s], [s, -a]]`` with ``s = sqrt(1 - a^2)``."""
    s = np.sqrt(max(0.0, 1.0 - a * a))
    return np.array([[a, s], [s, -a]], dtype=complex)
