"""Exact state-vector simulation over registers of arbitrary dimension.

A :class:`RegisterLayout` names the tensor factors of the Hilbert space, most
significant first. Gates act on named target registers and may be gated on
basis values of other (whole) registers. The simulator works on the state
reshaped to ``layout.dims`` so a gate only ever touches the slice selected by
its controls.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .exceptions import DimensionTooLarge, LayoutMismatch, ValidationError
from .validation import TOL_UNIT, TOL_UNITARY, check_matrix, dim_cap, is_unitary

UNITARY_DIM_LIMIT = 2**12


@dataclass(frozen=True)
class RegisterLayout:
    registers: tuple[tuple[str, int], ...]
    cap: int | None = None

    def __post_init__(self):
        regs = tuple((str(name), int(dim)) for name, dim in self.registers)
        object.__setattr__(self, "registers", regs)
        names = [name for name, _ in regs]
        if len(set(names)) != len(names):
            raise LayoutMismatch(f"duplicate register names in {names}")
        for name, dim in regs:
            if dim < 2:
                raise LayoutMismatch(f"register {name!r} has dimension {dim} < 2")
        cap = dim_cap() if self.cap is None else self.cap
        if self.total_dim > cap:
            raise DimensionTooLarge(f"total dimension {self.total_dim} exceeds cap {cap}")

    @classmethod
    def of(cls, *registers: tuple[str, int], cap: int | None = None) -> "RegisterLayout":
        return cls(tuple(registers), cap=cap)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.registers)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(dim for _, dim in self.registers)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64))

    def axis(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise LayoutMismatch(f"no register named {name!r}") from None

    def dim(self, name: str) -> int:
        return self.dims[self.axis(name)]

    def flat_index(self, values: dict[str, int]) -> int:
        """Flat basis index of a basis state; unspecified registers are 0."""
        index = 0
        for name, dim in self.registers:
            value = values.get(name, 0)
            if not 0 <= value < dim:
                raise LayoutMismatch(f"value {value} out of range for register {name!r}")
            index = index * dim + value
        return index

    def basis_state(self, **values: int) -> "StateVector":
        amps = np.zeros(self.total_dim, dtype=complex)
        amps[self.flat_index(values)] = 1.0
        return StateVector(self, amps)

    def product_state(self, parts: dict[str, np.ndarray]) -> "StateVector":
        """Tensor product of per-register vectors; missing registers start in |0>."""
        amps = np.ones(1, dtype=complex)
        for name, dim in self.registers:
            if name in parts:
                part = np.asarray(parts[name], dtype=complex)
                if part.shape != (dim,):
                    raise LayoutMismatch(f"vector for {name!r} has shape {part.shape}, expected ({dim},)")
            else:
                part = np.zeros(dim, dtype=complex)
                part[0] = 1.0
            amps = np.kron(amps, part)
        return StateVector(self, amps)


@dataclass(frozen=True)
class GateOp:
    """A unitary on ``targets`` applied where every control register holds its value."""

    targets: tuple[str, ...]
    unitary: np.ndarray
    controls: tuple[tuple[str, int], ...] = ()
    label: str = ""
    validate: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        object.__setattr__(self, "controls", tuple((str(n), int(v)) for n, v in self.controls))
        U = check_matrix(self.unitary, square=True, name="gate unitary")
        object.__setattr__(self, "unitary", U)
        if set(self.targets) & {name for name, _ in self.controls}:
            raise LayoutMismatch("gate targets and controls overlap")
        if self.validate and not is_unitary(U, TOL_UNITARY):
            raise ValidationError(f"gate {self.label or self.targets} is not unitary")

    def dagger(self) -> "GateOp":
        return GateOp(self.targets, self.unitary.conj().T, self.controls, self.label, validate=False)

    def matrix(self, dim: int) -> np.ndarray:
        return self.unitary

    def _apply(self, sub: np.ndarray, axes: list[int]) -> np.ndarray:
        k = len(axes)
        moved = np.moveaxis(sub, axes, range(k))
        shape = moved.shape
        flat = moved.reshape(self.unitary.shape[0], -1)
        out = (self.unitary @ flat).reshape(shape)
        return np.moveaxis(out, range(k), axes)


@dataclass(frozen=True)
class FourierOp:
    """Quantum Fourier transform on one register (``inverse`` for its adjoint).

    Kept symbolic so large estimation registers never need a dense matrix:
    ``F[j, k] = exp(2 pi i j k / d) / sqrt(d)``.
    """

    target: str
    inverse: bool = False
    controls: tuple[tuple[str, int], ...] = ()
    label: str = "qft"

    @property
    def targets(self) -> tuple[str, ...]:
        return (self.target,)

    def dagger(self) -> "FourierOp":
        return FourierOp(self.target, not self.inverse, self.controls, self.label)

    def matrix(self, dim: int) -> np.ndarray:
        j = np.arange(dim)
        F = np.exp(2j * np.pi * np.outer(j, j) / dim) / np.sqrt(dim)
        return F.conj().T if self.inverse else F

    def _apply(self, sub: np.ndarray, axes: list[int]) -> np.ndarray:
        (axis,) = axes
        if self.inverse:
            return np.fft.fft(sub, axis=axis, norm="ortho")
        return np.fft.ifft(sub, axis=axis, norm="ortho")


@dataclass(frozen=True)
class TwoLevelOp:
    """Unitary acting as ``block`` on basis states ``i`` and ``j`` of the joint
    target space and as the identity elsewhere."""

    targets: tuple[str, ...]
    i: int
    j: int
    block: np.ndarray
    controls: tuple[tuple[str, int], ...] = ()
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        block = np.asarray(self.block, dtype=complex)
        if block.shape != (2, 2) or self.i == self.j:
            raise ValidationError("two-level op needs a 2x2 block on two distinct levels")
        if not is_unitary(block, TOL_UNITARY):
            raise ValidationError(f"two-level block {self.label!r} is not unitary")
        object.__setattr__(self, "block", block)

    def dagger(self) -> "TwoLevelOp":
        return TwoLevelOp(self.targets, self.i, self.j, self.block.conj().T, self.controls, self.label)

    def matrix(self, dim: int) -> np.ndarray:
        U = np.eye(dim, dtype=complex)
        U[np.ix_([self.i, self.j], [self.i, self.j])] = self.block
        return U

    def _apply(self, sub: np.ndarray, axes: list[int]) -> np.ndarray:
        k = len(axes)
        moved = np.moveaxis(sub, axes, range(k))
        shape = moved.shape
        flat = moved.reshape(int(np.prod(shape[:k])), -1).copy()
        rows = flat[[self.i, self.j]]
        flat[[self.i, self.j]] = self.block @ rows
        return np.moveaxis(flat.reshape(shape), range(k), axes)


Op = GateOp | FourierOp | TwoLevelOp


@dataclass
class Circuit:
    layout: RegisterLayout
    ops: list = field(default_factory=list)

    def __post_init__(self):
        self.ops = list(self.ops)
        for op in self.ops:
            _check_op(self.layout, op)

    def append(self, op) -> "Circuit":
        _check_op(self.layout, op)
        self.ops.append(op)
        return self

    def extend(self, ops) -> "Circuit":
        for op in ops:
            self.append(op)
        return self

    def __len__(self) -> int:
        return len(self.ops)

    @property
    def gate_count(self) -> int:
        return len(self.ops)


@dataclass(frozen=True)
class StateVector:
    layout: RegisterLayout
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.layout.total_dim,):
            raise LayoutMismatch(
                f"amplitudes have shape {amps.shape}, layout needs ({self.layout.total_dim},)"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > TOL_UNIT:
            raise ValidationError(f"state has norm {norm!r}, expected 1")
        object.__setattr__(self, "amplitudes", amps)

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.layout.dims)


def _check_op(layout: RegisterLayout, op) -> None:
    dims = 1
    for name in op.targets:
        dims *= layout.dim(name)
    if isinstance(op, GateOp) and op.unitary.shape[0] != dims:
        raise LayoutMismatch(
            f"gate on {op.targets} has size {op.unitary.shape[0]}, registers need {dims}"
        )
    if isinstance(op, TwoLevelOp) and not (0 <= op.i < dims and 0 <= op.j < dims):
        raise LayoutMismatch(f"two-level op levels ({op.i}, {op.j}) out of range {dims}")
    if len(set(op.targets)) != len(op.targets):
        raise LayoutMismatch("repeated target register")
    for name, value in op.controls:
        if not 0 <= value < layout.dim(name):
            raise LayoutMismatch(f"control value {value} out of range for {name!r}")


def _apply_to_tensor(psi: np.ndarray, layout: RegisterLayout, op) -> None:
    """Apply ``op`` in place to ``psi`` of shape ``layout.dims + batch``."""
    index: list = [slice(None)] * psi.ndim
    removed = []
    for name, value in op.controls:
        axis = layout.axis(name)
        index[axis] = value
        removed.append(axis)
    axes = []
    for name in op.targets:
        axis = layout.axis(name)
        axes.append(axis - sum(1 for r in removed if r < axis))
    key = tuple(index)
    psi[key] = op._apply(psi[key], axes)


def apply_gate(state: StateVector, op) -> StateVector:
    _check_op(state.layout, op)
    psi = state.tensor().copy()
    _apply_to_tensor(psi, state.layout, op)
    return StateVector(state.layout, psi.reshape(-1))


def iter_run(circuit: Circuit, initial: StateVector) -> Iterator[np.ndarray]:
    """Yield the flat amplitude vector after each op (not validated or copied)."""
    if initial.layout != circuit.layout:
        raise LayoutMismatch("state and circuit layouts differ")
    psi = initial.tensor().copy()
    for op in circuit.ops:
        _apply_to_tensor(psi, circuit.layout, op)
        yield psi.reshape(-1)


def run(circuit: Circuit, initial: StateVector) -> StateVector:
    if initial.layout != circuit.layout:
        raise LayoutMismatch("state and circuit layouts differ")
    psi = initial.tensor().copy()
    for op in circuit.ops:
        _apply_to_tensor(psi, circuit.layout, op)
    return StateVector(circuit.layout, psi.reshape(-1))


def run_batch(circuit: Circuit, amplitudes: np.ndarray, ops: Sequence | None = None) -> np.ndarray:
    """Run many states at once; ``amplitudes`` has shape ``(batch, total_dim)``."""
    layout = circuit.layout
    amps = np.asarray(amplitudes, dtype=complex)
    if amps.ndim != 2 or amps.shape[1] != layout.total_dim:
        raise LayoutMismatch(f"batch must have shape (n, {layout.total_dim}), got {amps.shape}")
    psi = np.ascontiguousarray(amps.T).reshape(layout.dims + (amps.shape[0],))
    for op in circuit.ops if ops is None else ops:
        _apply_to_tensor(psi, layout, op)
    return psi.reshape(layout.total_dim, -1).T.copy()


def invert(circuit: Circuit) -> Circuit:
    return Circuit(circuit.layout, [op.dagger() for op in reversed(circuit.ops)])


def projection_prob(state: StateVector, pattern: Sequence[tuple[str, int]] | dict) -> float:
    """Total probability of basis states whose named registers hold the given values."""
    items = pattern.items() if isinstance(pattern, dict) else pattern
    psi = state.tensor()
    index: list = [slice(None)] * psi.ndim
    for name, value in items:
        axis = state.layout.axis(name)
        if not 0 <= value < state.layout.dims[axis]:
            raise LayoutMismatch(f"value {value} out of range for register {name!r}")
        index[axis] = value
    sub = psi[tuple(index)]
    return float(np.sum(np.abs(sub) ** 2))


def embed(layout: RegisterLayout, op) -> np.ndarray:
    """Full ``total_dim`` matrix of a single op, built independently of the kernel."""
    names = layout.names
    dims = layout.dims
    n = layout.total_dim
    target_dims = [layout.dim(t) for t in op.targets]
    local = op.matrix(int(np.prod(target_dims)))
    controls = dict(op.controls)
    M = np.zeros((n, n), dtype=complex)
    for col in range(n):
        digits = np.unravel_index(col, dims)
        values = dict(zip(names, (int(d) for d in digits)))
        if any(values[c] != v for c, v in controls.items()):
            M[col, col] = 1.0
            continue
        local_col = int(np.ravel_multi_index([values[t] for t in op.targets], target_dims))
        for local_row in range(local.shape[0]):
            amp = local[local_row, local_col]
            if amp == 0:
                continue
            out = dict(values)
            for t, d in zip(op.targets, np.unravel_index(local_row, target_dims)):
                out[t] = int(d)
            row = int(np.ravel_multi_index([out[name] for name in names], dims))
            M[row, col] += amp
    return M


def circuit_unitary(circuit: Circuit, limit: int = UNITARY_DIM_LIMIT) -> np.ndarray:
    """Dense unitary of the whole circuit, obtained by running every basis vector."""
    n = circuit.layout.total_dim
    if n > limit:
        raise DimensionTooLarge(f"total dimension {n} exceeds {limit} for circuit_unitary")
    return run_batch(circuit, np.eye(n, dtype=complex)).T
