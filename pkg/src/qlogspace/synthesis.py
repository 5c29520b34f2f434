"""Circuit synthesis: pure-state preparation and permutation unitaries.

Permutations are 1-based at the public boundary (``images[i] = sigma(i + 1)``)
and 0-based inside circuits.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .circuit import Circuit, RegisterLayout, TwoLevelOp
from .exceptions import DimensionMismatch, ValidationError
from .validation import TOL_TAIL, check_power_of_two, check_unit_vector


@dataclass(frozen=True)
class Permutation:
    images: tuple[int, ...]

    def __post_init__(self):
        images = tuple(int(x) for x in self.images)
        if sorted(images) != list(range(1, len(images) + 1)):
            raise ValidationError(f"{images} is not a permutation of 1..{len(images)}")
        object.__setattr__(self, "images", images)

    @property
    def m(self) -> int:
        return len(self.images)

    def __call__(self, i: int) -> int:
        return self.images[i - 1]

    @classmethod
    def identity(cls, m: int) -> "Permutation":
        return cls(tuple(range(1, m + 1)))

    @classmethod
    def from_zero_based(cls, images: Sequence[int]) -> "Permutation":
        return cls(tuple(int(x) + 1 for x in images))

    def matrix(self, dim: int | None = None) -> np.ndarray:
        """``P[sigma(i), i] = 1``, padded with identity up to ``dim``."""
        dim = self.m if dim is None else dim
        P = np.eye(dim)
        for i in range(self.m):
            P[:, i] = 0.0
        for i, image in enumerate(self.images):
            P[image - 1, i] = 1.0
        return P


@dataclass(frozen=True)
class Transposition:
    a: int
    b: int

    def __post_init__(self):
        if not 1 <= self.a <= self.b:
            raise ValidationError(f"invalid transposition ({self.a} {self.b})")

    def __call__(self, x: int) -> int:
        if x == self.a:
            return self.b
        if x == self.b:
            return self.a
        return x

    @property
    def is_identity(self) -> bool:
        return self.a == self.b


def tau(sigma: Permutation) -> tuple[int, ...]:
    """``tau(i)``: first element of ``sigma(i), sigma(sigma(i)), ...`` that is ``>= i``."""
    out = []
    for i in range(1, sigma.m + 1):
        x = sigma(i)
        while x < i:
            x = sigma(x)
        out.append(x)
    return tuple(out)


def decompose(sigma: Permutation) -> list[Transposition]:
    """Factors ``(1 tau(1)), ..., (m tau(m))`` of ``sigma``.

    The product is read as function composition, so the last factor is applied
    first.
    """
    return [Transposition(i, t) for i, t in enumerate(tau(sigma), start=1)]


def compose(transpositions: Sequence[Transposition], m: int) -> Permutation:
    """Evaluate the product of ``transpositions`` (rightmost applied first)."""
    images = []
    for x in range(1, m + 1):
        for t in reversed(transpositions):
            x = t(x)
        images.append(x)
    return Permutation(tuple(images))


def two_level_matrix(dim: int, i: int, j: int, block: np.ndarray) -> np.ndarray:
    """Identity on ``dim`` except ``block`` on basis states ``i`` and ``j`` (0-based)."""
    U = np.eye(dim, dtype=complex)
    U[np.ix_([i, j], [i, j])] = block
    return U


_SWAP = np.array([[0, 1], [1, 0]], dtype=complex)


def perm_ops(sigma: Permutation, targets: Sequence[str], dim: int) -> list[TwoLevelOp]:
    """Two-level swaps realizing ``P_sigma`` on the joint space of ``targets``."""
    if sigma.m > dim:
        raise DimensionMismatch(f"permutation of {sigma.m} points does not fit dimension {dim}")
    ops = []
    # time order is right-to-left in the product
    for t in reversed(decompose(sigma)):
        if t.is_identity:
            continue
        ops.append(TwoLevelOp(tuple(targets), t.a - 1, t.b - 1, _SWAP, label=f"swap({t.a},{t.b})"))
    return ops


def perm_circuit(sigma: Permutation, dim: int, register: str = "r") -> Circuit:
    layout = RegisterLayout.of((register, dim))
    return Circuit(layout, perm_ops(sigma, (register,), dim))


def _streamed_coefficients(values: np.ndarray, tol_tail: float = TOL_TAIL) -> list[complex]:
    """``a_i = v_i / sqrt(tail_i)`` with the tail sum kept by running subtraction."""
    coeffs = []
    tail = 1.0
    for x in values[:-1]:
        rest = tail - abs(x) ** 2
        if tail <= tol_tail:
            coeffs.append(1.0 + 0j)
        elif rest <= tol_tail and x != 0:
            # everything left sits here; rounding in the tail must not leak amplitude
            coeffs.append(complex(x) / abs(x))
        else:
            a = complex(x) / np.sqrt(tail)
            if abs(a) > 1.0:
                a /= abs(a)
            coeffs.append(a)
        tail = max(tail - abs(x) ** 2, 0.0)
    return coeffs


def prep_coefficients(v, *, tol_tail: float = TOL_TAIL) -> list[complex]:
    v = check_unit_vector(v)
    return _streamed_coefficients(v, tol_tail)


def rotation_block(a: complex, b: complex | None = None) -> np.ndarray:
    """2x2 unitary sending ``e_0`` to ``(a, b)``; ``b`` defaults to ``sqrt(1 - |a|^2)``."""
    if b is None:
        b = np.sqrt(max(0.0, 1.0 - abs(a) ** 2))
    return np.array([[a, -np.conj(b)], [b, np.conj(a)]], dtype=complex)


def prep_ops(values, register: str, *, tol_tail: float = TOL_TAIL) -> list[TwoLevelOp]:
    """Two-level unitaries mapping ``|0>`` of ``register`` to ``values``.

    ``values`` need not be exactly normalized: the running tail starts at 1, as
    when the entries are streamed from estimates.
    """
    values = np.asarray(values, dtype=complex)
    m = values.shape[0]
    coeffs = _streamed_coefficients(values, tol_tail)
    ops = []
    tail = 1.0
    for i, a in enumerate(coeffs):
        b = None
        if tail > tol_tail and tail - abs(values[i]) ** 2 <= tol_tail:
            b = 0.0
        elif i == m - 2 and tail - abs(values[i]) ** 2 > tol_tail and values[-1] != 0:
            # last step also fixes the phase of the final entry
            b = np.sqrt(max(0.0, 1.0 - abs(a) ** 2)) * values[-1] / abs(values[-1])
        tail = max(tail - abs(values[i]) ** 2, 0.0)
        block = rotation_block(a, b)
        ops.append(TwoLevelOp((register,), i, i + 1, block, label=f"prep{i}"))
    return ops


def prep_circuit(v, register: str = "r") -> Circuit:
    """Circuit ``Q_v`` over one ``2^S``-dimensional register with ``Q_v|0> = v``."""
    v = check_unit_vector(v)
    check_power_of_two(v.shape[0])
    layout = RegisterLayout.of((register, v.shape[0]))
    return Circuit(layout, prep_ops(v, register))
