"""scikit-learn style wrappers around the pipelines.

Hyperparameters go to ``__init__`` and are stored unchanged; ``fit`` takes the
object being compiled (a matrix, program or reference) and sets trailing
underscore attributes. ``get_params``/``set_params`` come from ``BaseEstimator``.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import block_encoding as be
from .channels import ChannelProgram, exact_output_distribution, simulate_unital
from .learning import SampleSource, estimated_contraction, singleton_distinguish
from .powering import PoweringInstance, powering_prob
from .validation import check_contraction, make_rng


class BlockEncoder(BaseEstimator, TransformerMixin):
    """Compile ``Q_A`` for a contraction and apply it to vectors."""

    def __init__(self, eps=0.1, ell=None, cap=None):
        self.eps = eps
        self.ell = ell
        self.cap = cap

    def fit(self, A, y=None):
        self.encoding_ = be.block_encoding_circuit(A, self.eps, ell=self.ell, cap=self.cap)
        self.ell_ = self.encoding_.ell
        self.n_gates_ = self.encoding_.gate_count
        return self

    def transform(self, X):
        """Rows ``v`` (dim ``4m``) to the ``|0^ell>`` slice of ``Q_A (v (x) |0>)``, i.e. about ``V_A v``."""
        check_is_fitted(self, "encoding_")
        out = self.encoding_.apply(np.atleast_2d(X))
        return out[:, :: 2**self.ell_]

    def score(self, X, y=None):
        """Negative worst error against the exact ``V_A`` on rows of ``X``."""
        check_is_fitted(self, "encoding_")
        X = np.atleast_2d(np.asarray(X, dtype=complex))
        target = X @ self.encoding_.target_matrix().T
        full = self.encoding_.apply(X)
        full[:, :: 2**self.ell_] -= target
        return -float(np.max(np.linalg.norm(full, axis=1)))


class ContractionPowerer(BaseEstimator):
    """``|w^+ A^T v|^2`` from the counter circuit; ``predict`` takes rows ``(v, w)``."""

    def __init__(self, T=1, eps=0.1, mode="ideal"):
        self.T = T
        self.eps = eps
        self.mode = mode

    def fit(self, A, y=None):
        self.A_ = check_contraction(A)
        return self

    def predict(self, X):
        """``X`` has shape ``(n, 2, m)``: each row stacks ``v`` and ``w``."""
        check_is_fitted(self, "A_")
        X = np.asarray(X, dtype=complex)
        if X.ndim == 2:
            X = X[None]
        out = []
        for v, w in X:
            inst = PoweringInstance(self.A_, self.T, v, w, self.eps)
            out.append(powering_prob(inst, self.mode))
        return np.array(out)


class UnitalSimulator(BaseEstimator):
    """Amplified simulation of a unital program; ``predict`` returns ``p_hat``."""

    def __init__(self, eps=0.05, mode="exact"):
        self.eps = eps
        self.mode = mode

    def fit(self, program: ChannelProgram, y=None):
        self.result_ = simulate_unital(program, self.eps, self.mode)
        self.oracle_ = exact_output_distribution(program)
        self.p_hat_ = self.result_.p_hat
        self.sin2_ = self.result_.sin2
        return self

    def predict(self, X=None):
        check_is_fitted(self, "result_")
        return np.array([self.p_hat_])


class ContractionLearner(BaseEstimator, TransformerMixin):
    """Shift-and-truncate estimate of a source's mean natural representation."""

    def __init__(self, T=1, replays=2, random_state=None):
        self.T = T
        self.replays = replays
        self.random_state = random_state

    def fit(self, src: SampleSource, y=None):
        est = estimated_contraction(src, self.T, make_rng(self.random_state), replays=self.replays)
        self.matrix_ = est.matrix
        self.consistent_ = est.consistent
        self.samples_used_ = est.samples_used
        self.params_ = est.params
        return self

    def transform(self, X):
        """Apply ``A'^T`` to vectorized states given as rows."""
        check_is_fitted(self, "matrix_")
        X = np.atleast_2d(np.asarray(X, dtype=complex))
        P = np.linalg.matrix_power(self.matrix_, self.T)
        return X @ P.T


class SingletonDistinguisher(BaseEstimator):
    """Fit on the reference mean ``B``; ``predict`` labels sources ``'X'`` or ``'Y'``."""

    def __init__(self, T=1, random_state=None):
        self.T = T
        self.random_state = random_state

    def fit(self, B, y=None):
        self.B_ = np.asarray(B, dtype=complex)
        return self

    def predict(self, sources):
        check_is_fitted(self, "B_")
        rng = make_rng(self.random_state)
        if isinstance(sources, SampleSource):
            sources = [sources]
        return np.array([singleton_distinguish(s, self.B_, self.T, rng).label for s in sources])
