"""Classical simulation of bounded-memory quantum learners.

A learner draws ``z`` from a source and applies the unital channel ``kraus_of(z)``
at each of ``T`` steps; its acceptance value is a bilinear form of the ``T``-th
power of the mean natural representation. We estimate that mean entrywise by
sampling and stabilize repeated reads with randomized shift-and-truncate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channels import ChannelStep, natural_rep
from .exceptions import GapViolation, ValidationError
from .linalg import spectral_norm, vectorize
from .validation import TOL_CONTRACT, make_rng

MAX_SAMPLES = 2**62


@dataclass
class SampleSource:
    """A finite sample alphabet with probabilities and one unital step per sample."""

    probs: np.ndarray
    steps: Sequence[ChannelStep]

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=float)
        self.steps = [s if isinstance(s, ChannelStep) else ChannelStep(tuple(s)) for s in self.steps]
        if self.probs.ndim != 1 or len(self.probs) != len(self.steps) or len(self.steps) == 0:
            raise ValidationError("need one probability per sample")
        if np.any(self.probs < 0) or abs(self.probs.sum() - 1) > 1e-9:
            raise ValidationError("sample probabilities must form a distribution")
        m = self.steps[0].m
        if any(s.m != m for s in self.steps):
            raise ValidationError("all samples must act on one dimension")
        for z, s in enumerate(self.steps):
            if not s.is_unital():
                raise ValidationError(f"sample {z} maps to a non-unital step")
        self._reps = np.array([natural_rep(s) for s in self.steps])

    @property
    def m(self) -> int:
        return self.steps[0].m

    def draw(self, rng) -> int:
        return int(make_rng(rng).choice(len(self.probs), p=self.probs))

    def kraus_of(self, z: int) -> ChannelStep:
        return self.steps[z]

    def natural_rep_of(self, z: int) -> np.ndarray:
        return self._reps[z]

    def mean_natural_rep(self) -> np.ndarray:
        """``E_z[K(kraus_of(z))]``, the exact matrix the learner powers."""
        return np.tensordot(self.probs, self._reps, axes=1)

    def entry_values(self, j: int, k: int) -> np.ndarray:
        return self._reps[:, j, k]

    @classmethod
    def constant(cls, step: ChannelStep) -> "SampleSource":
        return cls(np.array([1.0]), [step])


def sample_count_for(eps: float, fail: float) -> int:
    """Smallest ``n >= 1`` with ``4 exp(-2 n eps^2) <= fail``."""
    if eps <= 0 or fail <= 0:
        raise ValidationError("eps and fail must be positive")
    n = max(1, math.ceil(math.log(4.0 / fail) / (2 * eps * eps)))
    # undo float round-up at exact boundaries
    while n > 1 and 4 * math.exp(-2 * (n - 1) * eps * eps) <= fail:
        n -= 1
    return n


def estimate_entry(src: SampleSource, j: int, k: int, n: int, rng) -> complex:
    """Mean of ``K(kraus_of(z))[j, k]`` over ``n`` fresh draws.

    Drawing multinomial counts over the finite alphabet has the same law as ``n``
    independent draws and keeps huge ``n`` cheap.
    """
    d = src.m**2
    if not (0 <= j < d and 0 <= k < d):
        raise ValidationError(f"entry ({j}, {k}) outside [{d}]^2")
    if n < 1 or n > MAX_SAMPLES:
        raise ValidationError("sample count out of range")
    counts = make_rng(rng).multinomial(n, src.probs)
    return complex(counts @ src.entry_values(j, k) / n)


@dataclass(frozen=True)
class TruncationParams:
    """``L = 12 sqrt(2m) T``, ``N = 24 m^2.5 T`` and a shift ``zeta`` in ``[8P]``."""

    P: int
    L: float
    N: float
    zeta: int

    @classmethod
    def create(cls, m: int, T: int, P: int, rng=None, zeta: int | None = None) -> "TruncationParams":
        if P < 1:
            raise ValidationError("request budget must be positive")
        L = 12 * math.sqrt(2 * m) * T
        N = 24 * m**2.5 * T
        if zeta is None:
            zeta = int(make_rng(rng).integers(8 * P))
        if not 0 <= zeta < 8 * P:
            raise ValidationError("zeta must lie in [8P]")
        return cls(P, L, N, int(zeta))

    @property
    def shift(self) -> float:
        return self.zeta / (8 * self.P)


def shift_truncate(a: complex, params: TruncationParams) -> complex:
    """Round real and imaginary parts down on the ``1/N`` grid after shifting by ``zeta/(8P)``."""
    N, s = params.N, params.shift
    return complex(math.floor(N * a.real + s) / N, math.floor(N * a.imag + s) / N)


@dataclass
class ContractionEstimate:
    matrix: np.ndarray
    raw: np.ndarray
    consistent: bool
    requests: int
    samples_used: int
    clamped: bool
    params: TruncationParams
    replays: list = field(default_factory=list)


def estimated_contraction(
    src: SampleSource,
    T: int,
    rng=None,
    *,
    replays: int = 2,
    params: TruncationParams | None = None,
    noise=None,
) -> ContractionEstimate:
    """Shift-and-truncate estimate ``A' = L/(L+1) A~`` of the mean natural rep.

    Every entry is requested ``replays`` times, as a space-bounded powering
    routine would re-read it; each request draws fresh samples and the run is
    consistent when all reads of an entry truncate to the same grid point.
    ``noise(rng)`` optionally perturbs every read, for failure-path tests.
    If ``A'`` still exceeds norm 1 it is scaled back onto the unit ball.
    """
    rng = make_rng(rng)
    d = src.m**2
    P = d * d * replays
    params = TruncationParams.create(src.m, T, P, rng) if params is None else params
    n = sample_count_for(1.0 / (8 * params.N * params.P), 2.0**-min(params.P, 1000))
    reads = np.empty((replays, d, d), dtype=complex)
    for r in range(replays):
        for j in range(d):
            for k in range(d):
                a = estimate_entry(src, j, k, n, rng)
                if noise is not None:
                    a += noise(rng)
                reads[r, j, k] = shift_truncate(a, params)
    consistent = bool(np.all(reads == reads[0]))
    raw = reads[0]
    out = params.L / (params.L + 1) * raw
    norm = spectral_norm(out)
    clamped = norm > 1 + TOL_CONTRACT
    if clamped:
        out = out / norm
    return ContractionEstimate(out, raw, consistent, P, P * n, clamped, params, list(reads))


def acceptance_value(A: np.ndarray, T: int, M0, m: int) -> float:
    """``vec(M_0)^+ A^T vec(rho_0)`` by dense powering."""
    rho0 = np.zeros((m, m), dtype=complex)
    rho0[0, 0] = 1.0
    x = vectorize(rho0)
    for _ in range(T):
        x = A @ x
    return float(np.real(np.vdot(vectorize(np.asarray(M0, dtype=complex)), x)))


def _projector(M0, m: int) -> np.ndarray:
    M0 = np.asarray(M0, dtype=complex)
    return np.diag(M0) if M0.ndim == 1 else M0


@dataclass
class DistinguishResult:
    label: str
    votes: list
    values: list
    oracle: float


def distinguish(src: SampleSource, T: int, M0, rng=None, *, runs: int = 7, labels=("X", "Y")) -> DistinguishResult:
    """Label a source ``labels[0]`` (accepting) or ``labels[1]`` by majority over ``runs``.

    Each run estimates the mean natural rep and evaluates the learner's
    acceptance value against threshold 1/2. Raises :class:`GapViolation` if the
    exact value lies in ``(1/4, 3/4)``.
    """
    rng = make_rng(rng)
    m = src.m
    M0 = _projector(M0, m)
    oracle = acceptance_value(src.mean_natural_rep(), T, M0, m)
    if 0.25 < oracle < 0.75:
        raise GapViolation(f"acceptance value {oracle:.6g} inside (1/4, 3/4)")
    votes, values = [], []
    for _ in range(runs):
        est = estimated_contraction(src, T, rng)
        value = acceptance_value(est.matrix, T, M0, m)
        values.append(value)
        votes.append(value >= 0.5)
    label = labels[0] if sum(votes) * 2 > runs else labels[1]
    return DistinguishResult(label, votes, values, oracle)


@dataclass
class SingletonResult:
    label: str
    max_deviation: float
    argmax: tuple[int, int]
    threshold: float
    samples_used: int


def singleton_threshold(m: int, T: int) -> float:
    return 1.0 / (9 * m**5 * T**2)


def singleton_distinguish(src: SampleSource, B, T: int, rng=None) -> SingletonResult:
    """``X`` if some estimated mean entry deviates from ``B`` by at least ``1/(9 m^5 T^2)``, else ``Y``.

    Every entry is estimated to that accuracy with failure ``1/(3 m^4)``, so the
    union bound over ``m^4`` entries is at most 1/3.
    """
    rng = make_rng(rng)
    m = src.m
    B = np.asarray(B, dtype=complex)
    d = m * m
    if B.shape != (d, d):
        raise ValidationError(f"B must be {d} x {d}")
    thr = singleton_threshold(m, T)
    n = sample_count_for(thr, 1.0 / (3 * m**4))
    best, arg = -1.0, (0, 0)
    for j in range(d):
        for k in range(d):
            dev = abs(estimate_entry(src, j, k, n, rng) - B[j, k])
            if dev > best:
                best, arg = dev, (j, k)
    label = "X" if best >= thr else "Y"
    return SingletonResult(label, float(best), arg, thr, n * d * d)


# ------------------------------------------------------------ builders


def pauli_mixture_source(weights: Sequence[float], m: int = 2) -> SampleSource:
    """Samples ``I`` and ``Z`` on the first qubit with the given weights (unitary steps)."""
    Z = np.diag([1.0, -1.0])
    eye = np.eye(m // 2)
    ops = [np.eye(m, dtype=complex), np.kron(Z, eye).astype(complex)]
    return SampleSource(np.asarray(weights, dtype=float), [ChannelStep((U,)) for U in ops])


def dephasing_pair(m: int, T: int, shift: float | None = None) -> tuple[SampleSource, SampleSource, np.ndarray]:
    """Singleton ``Y`` (weights 1/2, 1/2) and ``X`` with ``Z`` weight lowered by ``shift / 2``.

    The natural-rep entry at ``(m/2, m/2)`` moves by exactly ``shift``; default
    ``shift = 4 / (9 m^5 T^2)``.
    """
    shift = 4 * singleton_threshold(m, T) if shift is None else shift
    Y = pauli_mixture_source([0.5, 0.5], m)
    q = 0.5 - shift / 2
    X = pauli_mixture_source([1 - q, q], m)
    return X, Y, Y.mean_natural_rep()
