import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from qlogspace.channels import ChannelProgram, ChannelStep, basis_measurement
from qlogspace.estimators import BlockEncoder, ContractionLearner, ContractionPowerer, SingletonDistinguisher, UnitalSimulator
from qlogspace.learning import dephasing_pair
from qlogspace.linalg import matrix_power_oracle, spectral_norm, v_a_matrix
from qlogspace.randmat import random_contraction, random_unit_vector


def test_block_encoder(rng):
    A = random_contraction(2, rng)
    enc = BlockEncoder(eps=0.3)
    assert enc.get_params() == {"eps": 0.3, "ell": None, "cap": None}
    with pytest.raises(NotFittedError):
        enc.transform(np.eye(8))
    enc.fit(A)
    X = np.array([random_unit_vector(8, rng) for _ in range(5)])
    out = enc.transform(X)
    assert np.max(np.linalg.norm(out - X @ v_a_matrix(A).T, axis=1)) <= 0.3
    assert -0.3 <= enc.score(X) <= 0
    assert clone(enc).get_params() == enc.get_params()


def test_contraction_powerer(rng):
    A = random_contraction(3, rng)
    model = ContractionPowerer(T=3).fit(A)
    X = np.array([[random_unit_vector(3, rng), random_unit_vector(3, rng)] for _ in range(4)])
    pred = model.predict(X)
    oracle = [abs(np.vdot(w, matrix_power_oracle(A, 3) @ v)) ** 2 for v, w in X]
    assert np.allclose(pred, oracle, atol=1e-8)
    assert model.set_params(mode="exact").predict(X[0]).shape == (1,)


def test_unital_simulator():
    HAD = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    prog = ChannelProgram(1, (ChannelStep((HAD,)),), basis_measurement(1))
    sim = UnitalSimulator(eps=0.05).fit(prog)
    assert abs(sim.predict()[0] - 0.5) <= 0.05
    assert sim.oracle_[0] == pytest.approx(0.5)


def test_contraction_learner():
    X, _, _ = dephasing_pair(2, 1)
    learner = ContractionLearner(T=1, random_state=0).fit(X)
    assert spectral_norm(learner.matrix_) <= 1 + 1e-9
    assert spectral_norm(learner.matrix_ - X.mean_natural_rep()) <= 2 / learner.params_.L
    rho = np.zeros(4)
    rho[0] = 1
    assert learner.transform(rho).shape == (1, 4)


def test_singleton_distinguisher():
    X, Y, B = dephasing_pair(2, 2)
    labels = SingletonDistinguisher(T=2, random_state=1).fit(B).predict([X, X, X])
    assert (labels == "X").sum() >= 2
