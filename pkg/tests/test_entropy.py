import math

import numpy as np
import pytest
from hypothesis import assume, given, seed, settings
from hypothesis import strategies as st

from qrel_tools import BipartiteDims, DimensionError, PreconditionError
from qrel_tools.qrel_tools_entropy import divergence_threshold
from qrel_tools.qrel_tools_linalg import support_projector_matrix

COMMUTING_VALUE = 0.5 * math.log(4.0 / 3.0)


def test_commuting_pair_closed_form(toolkit, maximally_mixed_qubit, skewed_qubit):
    result = toolkit.relative_entropy_support(maximally_mixed_qubit, skewed_qubit)

    assert result.is_finite
    assert result.value.value == pytest.approx(COMMUTING_VALUE, abs=1e-12)


def test_support_violation_is_infinite(toolkit, maximally_mixed_qubit, ground_qubit):
    result = toolkit.relative_entropy_support(maximally_mixed_qubit, ground_qubit)

    assert result.branch == 'infinite'
    assert result.value.to_json() == '+inf'
    assert result.support_overlap == pytest.approx(1.0)


def test_nested_supports_stay_finite(toolkit, ground_qubit, maximally_mixed_qubit):
    value = toolkit.relative_entropy(ground_qubit, maximally_mixed_qubit)
    assert value.value == pytest.approx(math.log(2))


def test_relative_entropy_of_state_with_itself(toolkit, full_rank_pair):
    rho, _ = full_rank_pair
    assert toolkit.relative_entropy(rho, rho).value == pytest.approx(0.0, abs=1e-10)


def test_relative_entropy_dimension_mismatch(toolkit, ground_qubit):
    with pytest.raises(DimensionError):
        toolkit.relative_entropy(ground_qubit, np.eye(3) / 3)


def test_regularized_converges_for_full_rank(toolkit, full_rank_pair):
    rho, sigma = full_rank_pair
    exact = toolkit.relative_entropy(rho, sigma).value
    result = toolkit.relative_entropy_regularized(rho, sigma)

    assert not result.divergent
    assert result.extrapolated == pytest.approx(exact, abs=1e-7)


def test_regularized_flags_divergence(toolkit, maximally_mixed_qubit, ground_qubit):
    result = toolkit.relative_entropy_regularized(maximally_mixed_qubit, ground_qubit)

    assert result.divergent
    assert result.branch == 'infinite'
    assert result.slope == pytest.approx(0.5, rel=0.05)


def test_regularized_flags_small_kernel_weight(toolkit, ground_qubit):
    rho = np.diag([0.995, 0.005])
    result = toolkit.relative_entropy_regularized(rho, ground_qubit)

    assert not toolkit.relative_entropy_support(rho, ground_qubit).is_finite
    assert result.divergent
    assert result.slope == pytest.approx(0.005, rel=0.05)
    assert result.threshold == toolkit.tolerances.regularized_agreement


def test_regularized_reads_kernel_weight_below_floor_as_finite(toolkit, ground_qubit):
    rho = np.diag([1.0 - 1e-6, 1e-6])
    result = toolkit.relative_entropy_regularized(rho, ground_qubit)

    assert not toolkit.relative_entropy_support(rho, ground_qubit).is_finite
    assert not result.divergent
    assert result.slope < toolkit.tolerances.regularized_agreement


def test_divergence_threshold_depends_on_tail_shape():
    growing = [k * 0.01 for k in range(4)]
    settling = [1.0 - 10.0 ** (-k) for k in range(1, 5)]

    assert divergence_threshold(growing, 4, 0.01, 1e-5) == 1e-5
    assert divergence_threshold(settling, 4, 0.01, 1e-5) == 0.01


def test_unitary_invariance(toolkit, full_rank_pair):
    rho, sigma = full_rank_pair
    assert toolkit.check_unitary_invariance(rho, sigma, toolkit.random_unitary(4, seed=1)) < 1e-9


def test_unitary_invariance_on_infinite_branch(toolkit, maximally_mixed_qubit, ground_qubit):
    unitary = toolkit.random_unitary(2, seed=2)
    assert toolkit.check_unitary_invariance(maximally_mixed_qubit, ground_qubit, unitary) == 0.0


def test_unitary_invariance_rejects_non_unitary(toolkit, full_rank_pair):
    rho, sigma = full_rank_pair
    with pytest.raises(PreconditionError):
        toolkit.check_unitary_invariance(rho, sigma, 2.0 * np.eye(4))


def test_additivity(toolkit, full_rank_pair, maximally_mixed_qubit, skewed_qubit):
    rho, sigma = full_rank_pair
    assert toolkit.check_additivity(rho, sigma, maximally_mixed_qubit, skewed_qubit) < 1e-9


def test_additivity_size_cap(toolkit):
    state = np.eye(9) / 9
    with pytest.raises(DimensionError):
        toolkit.check_additivity(state, state, state, state)


def test_dpi_replayed_through_dilation(toolkit, full_rank_pair):
    rho, sigma = full_rank_pair
    certificate = toolkit.dpi_via_stinespring(rho, sigma, toolkit.random_channel(4, seed=21))

    assert certificate.holds
    assert certificate.details['replayed']
    assert [step.check for step in certificate.steps] == [
        'dilation', 'additivity', 'unitary_invariance', 'partial_trace_monotonicity', 'dpi'
    ]


def test_dpi_for_partial_trace_channel(toolkit, full_rank_pair, dims22):
    rho, sigma = full_rank_pair
    certificate = toolkit.dpi_via_stinespring(rho, sigma, toolkit.partial_trace_channel(dims22))

    assert certificate.holds
    assert not certificate.details['replayed']
    assert [step.check for step in certificate.steps] == ['dpi']


def test_dpi_with_infinite_input(toolkit, maximally_mixed_qubit, ground_qubit):
    certificate = toolkit.dpi_via_stinespring(maximally_mixed_qubit, ground_qubit, toolkit.full_depolarizer(2))

    assert certificate.holds
    assert certificate.details['input_entropy'] == '+inf'
    assert certificate.details['output_entropy'] == pytest.approx(0.0, abs=1e-12)


def test_methods_agree_on_commuting_pair(toolkit, maximally_mixed_qubit, skewed_qubit):
    comparison = toolkit.compare_methods(maximally_mixed_qubit, skewed_qubit)

    assert comparison.agree
    for value in comparison.values.values():
        assert value == pytest.approx(COMMUTING_VALUE, abs=1e-6)


def test_methods_agree_on_support_violation(toolkit, maximally_mixed_qubit, ground_qubit):
    comparison = toolkit.compare_methods(maximally_mixed_qubit, ground_qubit)

    assert comparison.agree
    assert set(comparison.values.values()) == {'+inf'}


def test_modular_method_not_applicable_for_singular_input(toolkit, nested_pair):
    rho, sigma = nested_pair
    comparison = toolkit.compare_methods(rho, sigma)

    assert comparison.values['modular'] == 'not applicable (singular input)'
    assert comparison.agree


def test_compare_methods_rejects_unknown_method(toolkit, full_rank_pair):
    rho, sigma = full_rank_pair
    with pytest.raises(PreconditionError):
        toolkit.compare_methods(rho, sigma, ['support', 'bogus'])


@seed(5)
@settings(max_examples=15, deadline=None)
@given(
    d_a=st.integers(min_value=1, max_value=3),
    d_b=st.integers(min_value=1, max_value=3),
    state_seed=st.integers(min_value=0, max_value=10 ** 6),
)
def test_partial_trace_never_increases_relative_entropy(d_a, d_b, state_seed):
    from config import Config
    from qrel_tools import QrelToolkit

    toolkit = QrelToolkit(Config())
    dims = BipartiteDims(d_a=d_a, d_b=d_b)
    rho = toolkit.random_density(dims.d_ab, seed=state_seed)
    sigma = toolkit.random_density(dims.d_ab, seed=state_seed + 1)

    joint = toolkit.relative_entropy(rho, sigma).value
    reduced = toolkit.relative_entropy(toolkit.density(toolkit.partial_trace_b(rho, dims)),
                                       toolkit.density(toolkit.partial_trace_b(sigma, dims))).value

    assert reduced >= -1e-10
    assert reduced <= joint + 1e-9


@seed(11)
@settings(max_examples=40, deadline=None)
@given(
    dim=st.integers(min_value=2, max_value=4),
    ranks=st.tuples(st.integers(min_value=1, max_value=4), st.integers(min_value=1, max_value=4)),
    nested=st.booleans(),
    state_seed=st.integers(min_value=0, max_value=10 ** 6),
)
def test_regularized_and_support_entropy_agree_on_every_rank_combination(dim, ranks, nested, state_seed):
    from config import Config
    from qrel_tools import QrelToolkit

    toolkit = QrelToolkit(Config())
    rank_rho, rank_sigma = min(ranks[0], dim), min(ranks[1], dim)
    if nested:
        rho, sigma = toolkit.random_nested_pair(dim, min(rank_rho, rank_sigma), max(rank_rho, rank_sigma),
                                                seed=state_seed)
    else:
        rho = toolkit.random_density(dim, rank=rank_rho, seed=state_seed)
        sigma = toolkit.random_density(dim, rank=rank_sigma, seed=state_seed + 1)

    support = toolkit.relative_entropy_support(rho, sigma)
    kernel_weight = float(np.trace(rho.matrix @ (np.eye(dim) - support_projector_matrix(sigma.matrix))).real)
    assume(support.is_finite or kernel_weight > 1e-3)
    regularized = toolkit.relative_entropy_regularized(rho, sigma)

    assert support.is_finite == (not regularized.divergent)
    if support.is_finite:
        exact = support.value.value
        assert abs(regularized.limit - exact) <= toolkit.tolerances.regularized_agreement * (1.0 + abs(exact))
