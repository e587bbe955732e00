import numpy as np
import pytest

from qchybrid.state import HybridState


def random_hermitian(rng, d, scale=1.0):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * (a + a.conj().T) / 2


def random_density(rng, d, rank=None):
    rank = rank or d
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_state(rng, d, n_z=None, min_prob=0.0):
    n_z = n_z or d
    p = rng.dirichlet(np.ones(n_z))
    p = (p + min_prob) / (1 + n_z * min_prob)
    return HybridState(np.array([pz * random_density(rng, d) for pz in p]))


def random_unitary(rng, d):
    q, r = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


@pytest.fixture
def rng():
    return np.random.default_rng(20251015)
