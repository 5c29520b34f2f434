"""Seeded random test objects: unitaries, contractions, Hermitians, unit vectors."""
from __future__ import annotations

import numpy as np
from scipy.stats import unitary_group

from .validation import make_rng


def random_unitary(m: int, seed=None) -> np.ndarray:
    rng = make_rng(seed)
    if m == 1:
        return np.exp(2j * np.pi * rng.random()).reshape(1, 1)
    return unitary_group.rvs(m, random_state=rng)


def random_matrix(m: int, n: int | None = None, seed=None) -> np.ndarray:
    rng = make_rng(seed)
    n = m if n is None else n
    return rng.normal(size=(m, n)) + 1j * rng.normal(size=(m, n))


def random_contraction(m: int, seed=None, norm: float | None = None) -> np.ndarray:
    """Random ``m x m`` matrix with spectral norm ``norm`` (default uniform in (0.3, 1])."""
    rng = make_rng(seed)
    A = random_matrix(m, seed=rng)
    target = rng.uniform(0.3, 1.0) if norm is None else norm
    return A * (target / np.linalg.norm(A, 2))


def random_hermitian(m: int, seed=None, norm: float | None = None) -> np.ndarray:
    rng = make_rng(seed)
    A = random_matrix(m, seed=rng)
    H = (A + A.conj().T) / 2
    if norm is not None:
        H *= norm / np.linalg.norm(H, 2)
    return H


def random_unit_vector(m: int, seed=None) -> np.ndarray:
    rng = make_rng(seed)
    v = rng.normal(size=m) + 1j * rng.normal(size=m)
    return v / np.linalg.norm(v)
