import math

import numpy as np
import pytest
from hypothesis import given, seed, settings
from hypothesis import strategies as st

from qrel_tools import BasisError, DegenerateFormError, OrderError, PreconditionError, ScheduleError
from qrel_tools.qrel_tools_channels import weyl_operators
from qrel_tools.qrel_tools_linalg import psd_power
from qrel_tools.qrel_tools_petz import left_multiplication, right_multiplication

COMMUTING_VALUE = 0.5 * math.log(4.0 / 3.0)


@pytest.fixture
def forms(toolkit, full_rank_pair):
    rho, sigma = full_rank_pair
    return toolkit.form_from_operator_pair(rho, 'left'), toolkit.form_from_operator_pair(sigma, 'right')


def test_operator_pair_forms_match_multiplication_operators(toolkit, full_rank_pair, forms):
    rho, sigma = full_rank_pair
    alpha, beta = forms

    assert np.allclose(alpha.gram, left_multiplication(rho))
    assert np.allclose(beta.gram, right_multiplication(sigma))


def test_form_values_do_not_depend_on_basis(toolkit, skewed_qubit):
    weyl = np.array(weyl_operators(2)) / math.sqrt(2.0)
    in_weyl = toolkit.form_from_operator_pair(skewed_qubit, 'left', basis=weyl)
    in_units = toolkit.form_from_operator_pair(skewed_qubit, 'left')

    assert np.allclose(np.sort(np.linalg.eigvalsh(in_weyl.gram)), np.sort(np.linalg.eigvalsh(in_units.gram)))


def test_form_rejects_non_orthonormal_basis(toolkit, skewed_qubit):
    with pytest.raises(BasisError):
        toolkit.form_from_operator_pair(skewed_qubit, 'left', basis=2.0 * toolkit.operator_basis(2))


def test_positive_form_rejects_indefinite_gram(toolkit):
    with pytest.raises(OrderError):
        toolkit.positive_form(np.diag([1.0, -1.0]))


def test_compatible_pair_is_certified(toolkit, forms):
    pair = toolkit.build_compatible_pair(*forms)
    assert toolkit.certify_compatible_pair(pair).holds
    assert pair.rep_alpha.target_dim == 16


def test_compatible_pair_of_zero_forms(toolkit):
    with pytest.raises(DegenerateFormError):
        toolkit.build_compatible_pair(np.zeros((4, 4)), np.zeros((4, 4)))


def test_interpolation_endpoints(toolkit, forms):
    alpha, beta = forms
    assert np.allclose(toolkit.interpolate(alpha, beta, 0.0).gram, alpha.gram, atol=1e-9)
    assert np.allclose(toolkit.interpolate(alpha, beta, 1.0).gram, beta.gram, atol=1e-9)


def test_interpolation_rejects_t_outside_unit_interval(toolkit, forms):
    with pytest.raises(ScheduleError):
        toolkit.interpolate(*forms, 1.5)


@pytest.mark.parametrize("t", [0.25, 0.5, 0.8])
def test_quotient_route_matches_direct_route(toolkit, full_rank_pair, forms, t):
    direct = toolkit.interpolate_direct(*full_rank_pair, t)
    assert np.allclose(toolkit.interpolate(*forms, t).gram, direct.gram, atol=1e-8)


def test_representation_independence(toolkit, forms):
    assert toolkit.check_representation_independence(*forms, 0.3, rep_count=3, seed=4) < 1e-8


def test_representation_independence_needs_two_representations(toolkit, forms):
    with pytest.raises(PreconditionError):
        toolkit.check_representation_independence(*forms, 0.3, rep_count=1)


def test_interpolation_of_interpolations(toolkit, forms):
    certificate = toolkit.interpolation_of_interpolations(*forms, 0.2, 0.9, 0.5)
    assert certificate.holds
    assert certificate.details['combined_t'] == pytest.approx(0.55)


def test_geometric_mean_of_commuting_multiplications(toolkit, full_rank_pair, forms):
    rho, sigma = full_rank_pair
    expected = np.kron(psd_power(sigma, 0.5).T, psd_power(rho, 0.5))
    assert np.allclose(toolkit.geometric_mean(*forms).gram, expected, atol=1e-8)


def test_geometric_mean_is_dominated_and_maximal(toolkit, forms):
    mean = toolkit.geometric_mean(*forms)

    assert toolkit.check_domination(mean, *forms, probes=500, seed=5).holds
    assert toolkit.domination_norm(mean, *forms) <= 1.0 + 1e-6
    assert toolkit.check_geometric_mean_maximality(*forms, candidate_count=30, seed=6).holds


def test_interpolation_monotonicity(toolkit, forms):
    alpha, beta = forms
    alpha_low = toolkit.positive_form(0.5 * alpha.gram)
    beta_low = toolkit.positive_form(0.25 * beta.gram)

    assert toolkit.check_interpolation_monotonicity(alpha_low, alpha, beta_low, beta).holds


def test_interpolation_monotonicity_precondition(toolkit, forms):
    alpha, beta = forms
    with pytest.raises(PreconditionError):
        toolkit.check_interpolation_monotonicity(toolkit.positive_form(2.0 * alpha.gram), alpha, beta, beta)


def test_pullback_inequality(toolkit, forms, rng):
    psi = (rng.standard_normal((16, 4)) + 1j * rng.standard_normal((16, 4))) / 4.0
    assert toolkit.check_pullback_inequality(psi, *forms).holds


def test_entropy_form_recovers_relative_entropy(toolkit, maximally_mixed_qubit, skewed_qubit):
    result = toolkit.entropy_form(maximally_mixed_qubit, skewed_qubit)

    assert not result.divergent
    assert result.value.value == pytest.approx(COMMUTING_VALUE, abs=1e-7)
    assert all(later >= earlier for earlier, later in zip(result.running_inf, result.running_inf[1:]))


def test_entropy_form_on_nested_pair(toolkit, nested_pair):
    exact = toolkit.relative_entropy(*nested_pair).value
    assert toolkit.entropy_via_form(*nested_pair).value == pytest.approx(exact, abs=1e-6)


def test_entropy_form_diverges_on_support_violation(toolkit, maximally_mixed_qubit, ground_qubit):
    result = toolkit.entropy_form(maximally_mixed_qubit, ground_qubit)

    assert result.branch == 'infinite'
    assert result.value.to_json() == '+inf'


def test_entropy_form_csv(toolkit, maximally_mixed_qubit, skewed_qubit):
    lines = toolkit.entropy_form(maximally_mixed_qubit, skewed_qubit, t_schedule=[0.1, 0.01]).to_csv().splitlines()
    assert lines[0] == 't,quotient,running_inf'
    assert len(lines) == 3


def test_uhlmann_chain_full_rank(toolkit, full_rank_pair, dims22):
    certificate = toolkit.uhlmann_monotonicity(*full_rank_pair, dims22)

    assert certificate.holds
    assert certificate.details['regularized'] is False
    assert certificate.steps[0].check == 'schwarz_alpha'


def test_uhlmann_chain_without_regularization(toolkit, nested_pair, dims22):
    certificate = toolkit.uhlmann_monotonicity(*nested_pair, dims22)

    assert certificate.holds
    assert certificate.details['regularized'] is False


@seed(7)
@settings(max_examples=10, deadline=None)
@given(
    t=st.floats(min_value=0.0, max_value=1.0),
    state_seed=st.integers(min_value=0, max_value=10 ** 6),
)
def test_quotient_interpolation_matches_direct_on_random_pairs(t, state_seed):
    from config import Config
    from qrel_tools import QrelToolkit

    toolkit = QrelToolkit(Config())
    rho = toolkit.random_density(2, seed=state_seed)
    sigma = toolkit.random_density(2, seed=state_seed + 1)
    alpha = toolkit.form_from_operator_pair(rho, 'left')
    beta = toolkit.form_from_operator_pair(sigma, 'right')

    gamma = toolkit.interpolate(alpha, beta, t)
    direct = toolkit.interpolate_direct(rho, sigma, t)
    assert np.allclose(gamma.gram, direct.gram, atol=1e-8)
    assert np.min(np.linalg.eigvalsh(gamma.gram)) > -1e-10
