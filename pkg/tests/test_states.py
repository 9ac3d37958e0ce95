import math

import numpy as np
import pytest
from hypothesis import given, seed, settings
from hypothesis import strategies as st

from qrel_tools import (
    Certificate, DimensionError, ExtendedReal, InvalidStateError, QrelError, ScheduleError,
    matrix_from_json, matrix_to_json
)


def test_entropy_of_named_states(toolkit, maximally_mixed_qubit, ground_qubit, bell_state):
    assert toolkit.von_neumann_entropy(maximally_mixed_qubit) == pytest.approx(math.log(2))
    assert toolkit.von_neumann_entropy(ground_qubit) == pytest.approx(0.0, abs=1e-12)
    assert toolkit.von_neumann_entropy(bell_state) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("matrix", [
    np.diag([1.2, -0.2]),
    np.diag([0.6, 0.6]),
    np.array([[0.5, 0.5], [0.0, 0.5]]),
])
def test_density_rejects_non_states(toolkit, matrix):
    with pytest.raises(InvalidStateError):
        toolkit.density(matrix)


def test_density_rejects_non_square(toolkit):
    with pytest.raises(QrelError):
        toolkit.density(np.ones((2, 3)) / 3)


def test_regularize_keeps_unnormalized_trace(toolkit, ground_qubit):
    regularized = toolkit.regularize(ground_qubit, 0.1)
    assert np.trace(regularized.matrix).real == pytest.approx(1.2)

    with pytest.raises(ScheduleError):
        toolkit.regularize(ground_qubit, 0.0)


def test_regularized_entropy_converges(toolkit, ground_qubit):
    result = toolkit.regularized_entropy_limit(ground_qubit)

    assert result.agrees
    assert result.reference == pytest.approx(0.0, abs=1e-12)
    assert len(result.values) == len(toolkit.schedules.eps_schedule)


def test_regularized_entropy_rejects_increasing_schedule(toolkit, ground_qubit):
    with pytest.raises(ScheduleError):
        toolkit.regularized_entropy_limit(ground_qubit, [1e-3, 1e-2])


def test_random_density_is_seeded(toolkit):
    first = toolkit.random_density(3, rank=2, seed=7)
    second = toolkit.random_density(3, rank=2, seed=7)

    assert np.array_equal(first.matrix, second.matrix)
    assert np.linalg.matrix_rank(first.matrix, tol=1e-10) == 2
    assert first.seed == 7 and first.rank == 2


@pytest.mark.parametrize("rank", [0, 4])
def test_random_density_rejects_bad_rank(toolkit, rank):
    with pytest.raises(InvalidStateError):
        toolkit.random_density(3, rank=rank)


def test_nested_pair_supports(toolkit, nested_pair):
    rho, sigma = nested_pair

    assert toolkit.support_contained(rho, sigma)
    assert not toolkit.support_contained(sigma, rho)
    assert np.linalg.matrix_rank(rho, tol=1e-10) == 2


def test_support_overlap_of_orthogonal_states(toolkit, ground_qubit):
    assert toolkit.support_overlap(ground_qubit, np.diag([0.0, 1.0])) == pytest.approx(1.0)


def test_state_json_tags(toolkit, skewed_qubit):
    payload = toolkit.state_to_json(skewed_qubit)
    assert payload['kind'] == 'density'
    assert np.allclose(toolkit.state_from_json(payload).matrix, skewed_qubit)

    payload['kind'] = 'channel'
    with pytest.raises(InvalidStateError):
        toolkit.state_from_json(payload)


def test_matrix_json_shape_mismatch():
    payload = matrix_to_json(np.eye(2))
    payload['rows'] = 3
    with pytest.raises(DimensionError):
        matrix_from_json(payload)


def test_matrix_json_rejects_missing_fields():
    with pytest.raises(QrelError):
        matrix_from_json({'rows': 1})


def test_extended_real_ordering():
    finite = ExtendedReal.finite(3.0)
    infinite = ExtendedReal.plus_infinity()

    assert finite <= infinite
    assert not infinite <= finite
    assert ExtendedReal.minus_infinity() < finite
    assert infinite.to_json() == "+inf"
    assert finite.to_json() == 3.0


def test_certificate_chain_collects_failed_leaves():
    good = Certificate.inequality('first', 0.5, 1e-9)
    bad = Certificate.equality('second', 1e-3, 1e-9)
    chain = Certificate.chain('both', [good, bad])

    assert not chain.holds
    assert chain.defect == pytest.approx(1e-3)
    assert [step.check for step in chain.failed_steps()] == ['second']


@seed(3)
@settings(max_examples=20, deadline=None)
@given(dim=st.integers(min_value=1, max_value=5), state_seed=st.integers(min_value=0, max_value=10 ** 6))
def test_entropy_bounds(dim, state_seed):
    from config import Config
    from qrel_tools import QrelToolkit

    toolkit = QrelToolkit(Config())
    rho = toolkit.random_density(dim, seed=state_seed)
    entropy = toolkit.von_neumann_entropy(rho)

    assert -1e-12 <= entropy <= math.log(dim) + 1e-12
