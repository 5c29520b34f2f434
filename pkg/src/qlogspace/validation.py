"""Tolerances and input checks shared by every module.

The ``check_*`` helpers mirror scikit-learn's ``check_array``: they coerce the
input to a complex ``ndarray`` and raise a typed error when the precondition
fails, returning the coerced value otherwise.
"""
from __future__ import annotations

import os

import numpy as np

from .exceptions import (
    DimensionMismatch,
    NotContraction,
    NotHermitian,
    NotPowerOfTwo,
    NotUnit,
    NotUnitary,
    ValidationError,
)

TOL_UNITARY = 1e-9
TOL_RECONSTRUCT = 1e-9
TOL_HERM = 1e-10
TOL_CONTRACT = 1e-9
TOL_UNIT = 1e-9
TOL_TAIL = 1e-14

DEFAULT_DIM_CAP = 2**16


def dim_cap() -> int:
    """Simulator dimension cap; ``CPK_DIM_CAP`` overrides the default."""
    value = os.environ.get("CPK_DIM_CAP")
    return int(value) if value else DEFAULT_DIM_CAP


def check_matrix(A, *, square: bool = False, name: str = "A") -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2:
        raise ValidationError(f"{name} must be 2-dimensional, got shape {A.shape}")
    if square and A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValidationError(f"{name} contains NaN or Inf")
    return A


def check_vector(v, *, dim: int | None = None, name: str = "v") -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    if v.ndim != 1:
        raise ValidationError(f"{name} must be 1-dimensional, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise DimensionMismatch(f"{name} has dimension {v.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(v)):
        raise ValidationError(f"{name} contains NaN or Inf")
    return v


def check_unit_vector(v, *, dim: int | None = None, tol: float = TOL_UNIT, name: str = "v") -> np.ndarray:
    v = check_vector(v, dim=dim, name=name)
    norm = np.linalg.norm(v)
    if abs(norm - 1.0) > tol:
        raise NotUnit(f"{name} has norm {norm!r}, expected 1")
    return v


def check_hermitian(H, *, tol: float = TOL_HERM) -> np.ndarray:
    H = check_matrix(H, square=True, name="H")
    if np.max(np.abs(H - H.conj().T), initial=0.0) > tol:
        raise NotHermitian("matrix is not Hermitian")
    return H


def check_contraction(A, *, tol: float = TOL_CONTRACT, name: str = "A") -> np.ndarray:
    A = check_matrix(A, square=True, name=name)
    norm = np.linalg.norm(A, 2) if A.size else 0.0
    if norm > 1.0 + tol:
        raise NotContraction(f"{name} has spectral norm {norm!r} > 1")
    return A


def check_unitary(U, *, tol: float = TOL_UNITARY, name: str = "U") -> np.ndarray:
    U = check_matrix(U, square=True, name=name)
    if not is_unitary(U, tol=tol):
        raise NotUnitary(f"{name} is not unitary")
    return U


def is_unitary(U: np.ndarray, tol: float = TOL_UNITARY) -> bool:
    eye = np.eye(U.shape[0])
    return bool(np.linalg.norm(U.conj().T @ U - eye, 2) <= tol)


def check_power_of_two(n: int, name: str = "dimension") -> int:
    if n < 1 or n & (n - 1):
        raise NotPowerOfTwo(f"{name} {n} is not a power of two")
    return n


def make_rng(seed) -> np.random.Generator:
    """Accept an int seed, ``None`` or an existing ``Generator``."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
