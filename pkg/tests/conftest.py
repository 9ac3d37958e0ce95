"""Shared fixtures: a toolkit on default tolerances and a few named states"""

import numpy as np
import pytest

from config import Config
from qrel_tools import BipartiteDims, QrelToolkit


@pytest.fixture
def toolkit():
    return QrelToolkit(Config())


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(12345)))


@pytest.fixture
def dims22():
    return BipartiteDims(d_a=2, d_b=2)


@pytest.fixture
def maximally_mixed_qubit():
    return np.eye(2) / 2


@pytest.fixture
def skewed_qubit():
    """Commutes with the maximally mixed qubit; S(I/2 || this) = 0.5 log(4/3)"""
    return np.diag([0.75, 0.25])


@pytest.fixture
def ground_qubit():
    return np.diag([1.0, 0.0])


@pytest.fixture
def bell_state():
    psi = np.zeros(4)
    psi[0] = psi[3] = 1.0 / np.sqrt(2.0)
    return np.outer(psi, psi)


@pytest.fixture
def full_rank_pair(toolkit):
    return toolkit.random_density(4, seed=101).matrix, toolkit.random_density(4, seed=202).matrix


@pytest.fixture
def nested_pair(toolkit):
    rho, sigma = toolkit.random_nested_pair(4, 2, 3, seed=303)
    return rho.matrix, sigma.matrix
