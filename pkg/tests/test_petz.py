import math

import numpy as np
import pytest
from hypothesis import given, seed, settings
from hypothesis import strategies as st

from qrel_tools import (
    BipartiteDims, InfiniteBranchError, OrderError, PreconditionError, SingularOperatorError
)
from qrel_tools.qrel_tools_petz import Superoperator, left_multiplication, right_multiplication, unvec, vec


def test_vec_is_column_stacking():
    matrix = np.array([[1, 2], [3, 4]])
    assert list(vec(matrix)) == [1, 3, 2, 4]
    assert np.array_equal(unvec(vec(matrix), 2), matrix)


def test_left_and_right_multiplication(rng):
    c, b, x = (rng.standard_normal((3, 3)) for _ in range(3))
    assert np.allclose(left_multiplication(c) @ vec(x), vec(c @ x))
    assert np.allclose(right_multiplication(b) @ vec(x), vec(x @ b))


def test_superoperator_from_map_matches_action(rng):
    k = rng.standard_normal((2, 3))
    superoperator = Superoperator.from_map(lambda x: k @ x @ k.T, 3, 2)
    x = rng.standard_normal((3, 3))
    assert np.allclose(superoperator.apply(x), k @ x @ k.T)


def test_modular_and_integral_routes_match_support_entropy(toolkit, full_rank_pair):
    rho, sigma = full_rank_pair
    exact = toolkit.relative_entropy(rho, sigma).value

    assert toolkit.entropy_via_modular(rho, sigma) == pytest.approx(exact, abs=1e-9)
    assert toolkit.entropy_via_integral(rho, sigma) == pytest.approx(exact, abs=1e-8)


def test_integral_route_on_reduced_pair(toolkit, full_rank_pair, dims22):
    rho, sigma = full_rank_pair
    reduced = toolkit.relative_entropy(toolkit.partial_trace_b(rho, dims22).matrix,
                                       toolkit.partial_trace_b(sigma, dims22).matrix).value
    assert toolkit.entropy_via_integral(rho, sigma, dims22) == pytest.approx(reduced, abs=1e-8)


def test_modular_log_identity(toolkit, full_rank_pair):
    assert toolkit.check_modular_log_identity(*full_rank_pair).holds


def test_modular_route_needs_invertible_rho(toolkit, nested_pair):
    rho, sigma = nested_pair
    with pytest.raises(SingularOperatorError):
        toolkit.build_left_right(rho, sigma)


def test_v_rho_is_isometry_and_matches_channel_form(toolkit, full_rank_pair, dims22):
    rho, _ = full_rank_pair
    v = toolkit.build_v_rho(rho, dims22)
    via_channel = toolkit.build_v_for_channel(rho, toolkit.partial_trace_channel(dims22))

    assert toolkit.certify_v_rho(v).holds
    assert np.allclose(v.mat, via_channel.mat)


def test_v_for_general_channel_is_contraction(toolkit, full_rank_pair):
    rho, _ = full_rank_pair
    v = toolkit.build_v_for_channel(rho, toolkit.random_channel(4, 2, 2, seed=31))
    assert v.operator_norm <= 1.0 + 1e-9


def test_key_inequality(toolkit, full_rank_pair, dims22):
    certificate = toolkit.check_key_inequality(*full_rank_pair, dims22, seed=3)
    assert certificate.holds
    assert [step.check for step in certificate.steps] == ['isometry', 'key_inequality', 'trace_identity']


def test_flawed_step_inverse_violates_everywhere(toolkit):
    table = toolkit.flawed_step_counterexample()

    assert table.all_violate
    assert len(table.rows) == 100


def test_flawed_step_values_at_one(toolkit):
    inverse = toolkit.flawed_step_counterexample(x_grid=[1.0]).rows[0]
    assert inverse.lhs == pytest.approx(4.0 / 3.0)
    assert inverse.rhs == pytest.approx(1.0 / 6.0)

    log = toolkit.flawed_step_counterexample(x_grid=[1.0], variant='log').rows[0]
    assert log.lhs == pytest.approx(math.log(4.0))
    assert log.rhs == pytest.approx(0.0)
    assert log.violation


def test_flawed_step_log_variant_violates_everywhere(toolkit):
    assert toolkit.flawed_step_counterexample(variant='log').all_violate


@pytest.mark.parametrize("variant", ['inverse', 'log'])
def test_flawed_step_isometry_does_not_violate(toolkit, variant):
    assert toolkit.flawed_step_counterexample(alpha=1.0, variant=variant).violation_count == 0


@pytest.mark.parametrize("kwargs", [
    {'alpha': 0.0},
    {'alpha': 1.5},
    {'xi': 0.0},
    {'x_grid': []},
    {'x_grid': [1.0, -1.0]},
])
def test_flawed_step_preconditions(toolkit, kwargs):
    with pytest.raises(PreconditionError):
        toolkit.flawed_step_counterexample(**kwargs)


def test_flawed_step_csv(toolkit):
    lines = toolkit.flawed_step_counterexample(x_grid=[1.0, 2.0]).to_csv().splitlines()
    assert lines[0] == 'x,lhs,rhs,violation'
    assert len(lines) == 3
    assert lines[1].endswith(',true')


def test_corrected_chain_full_rank(toolkit, full_rank_pair, dims22):
    certificate = toolkit.corrected_monotonicity(*full_rank_pair, dims22)

    assert certificate.holds
    assert certificate.details['regularized'] is False
    assert certificate.details['gap'] >= 0.0
    assert {'key_inequality', 'log_monotonicity', 'jensen', 'monotonicity'} <= {
        step.check for step in certificate.steps
    }


def test_corrected_chain_deficient_rank(toolkit, nested_pair, dims22):
    certificate = toolkit.corrected_monotonicity(*nested_pair, dims22)

    assert certificate.holds
    assert certificate.details['regularized'] is True
    assert len(certificate.details['full_values']) == len(toolkit.schedules.eps_schedule)


def test_corrected_chain_infinite_branch(toolkit, dims22):
    rho = np.eye(4) / 4
    sigma = np.kron(np.diag([1.0, 0.0]), np.eye(2) / 2)
    certificate = toolkit.corrected_monotonicity(rho, sigma, dims22)

    assert certificate.details['full_entropy'] == '+inf'
    assert certificate.holds


def test_support_inclusion_after_trace(toolkit, nested_pair, dims22):
    assert toolkit.support_inclusion_after_trace(*nested_pair, dims22).holds


def test_support_inclusion_requires_nested_supports(toolkit, dims22):
    rho = np.eye(4) / 4
    sigma = np.kron(np.diag([1.0, 0.0]), np.eye(2) / 2)
    with pytest.raises(PreconditionError):
        toolkit.support_inclusion_after_trace(rho, sigma, dims22)


def test_kernel_lemma(toolkit):
    certificate = toolkit.check_kernel_lemma(np.diag([1.0, 0.0, 0.0]), np.diag([0.0, 2.0, 0.0]))

    assert certificate.holds
    assert certificate.details['kernel_dim'] == 1


def test_kernel_lemma_rejects_indefinite(toolkit):
    with pytest.raises(OrderError):
        toolkit.check_kernel_lemma(np.diag([1.0, -1.0]), np.eye(2))


def test_petz_recovery(toolkit, full_rank_pair):
    _, sigma = full_rank_pair
    channel = toolkit.random_channel(4, 2, 2, seed=41)
    assert toolkit.check_petz_recovery(sigma, channel, seed=1).holds


def test_petz_factorization(toolkit, full_rank_pair, dims22):
    _, sigma = full_rank_pair
    assert toolkit.check_petz_factorization(sigma, dims22).holds


def test_fidelity(toolkit, full_rank_pair, ground_qubit, maximally_mixed_qubit):
    rho, sigma = full_rank_pair
    assert toolkit.fidelity(rho, rho) == pytest.approx(1.0)
    assert toolkit.fidelity(rho, sigma) == pytest.approx(toolkit.fidelity(sigma, rho))
    assert toolkit.fidelity(ground_qubit, maximally_mixed_qubit) == pytest.approx(math.sqrt(0.5))


def test_recovery_bound_for_reversible_channel(toolkit, full_rank_pair):
    channel = toolkit.unitary_channel(toolkit.random_unitary(4, seed=51))
    certificate = toolkit.fawzi_renner_check(*full_rank_pair, channel)

    assert certificate.holds
    assert certificate.details['fidelity'] == pytest.approx(1.0, abs=1e-9)
    assert certificate.details['entropy_loss'] == pytest.approx(0.0, abs=1e-9)


def test_recovery_bound_reports_loss_and_fidelity(toolkit, full_rank_pair):
    certificate = toolkit.fawzi_renner_check(*full_rank_pair, toolkit.random_channel(4, seed=52))

    assert [step.check for step in certificate.steps] == ['fidelity_symmetry', 'fidelity_bound']
    assert certificate.steps[0].holds
    assert certificate.details['entropy_loss'] >= -1e-9
    assert 0.0 < certificate.details['fidelity'] <= 1.0 + 1e-9


def test_recovery_bound_needs_finite_entropies(toolkit, maximally_mixed_qubit, ground_qubit):
    with pytest.raises(InfiniteBranchError):
        toolkit.fawzi_renner_check(maximally_mixed_qubit, ground_qubit, toolkit.identity_channel(2))


@seed(6)
@settings(max_examples=10, deadline=None)
@given(
    d_a=st.integers(min_value=2, max_value=3),
    d_b=st.integers(min_value=2, max_value=3),
    state_seed=st.integers(min_value=0, max_value=10 ** 6),
)
def test_corrected_chain_holds_on_random_pairs(d_a, d_b, state_seed):
    from config import Config
    from qrel_tools import QrelToolkit

    toolkit = QrelToolkit(Config())
    dims = BipartiteDims(d_a=d_a, d_b=d_b)
    rho = toolkit.random_density(dims.d_ab, seed=state_seed)
    sigma = toolkit.random_density(dims.d_ab, seed=state_seed + 1)

    assert toolkit.corrected_monotonicity(rho, sigma, dims).holds
