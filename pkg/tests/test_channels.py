import numpy as np
import pytest
from hypothesis import given, seed, settings
from hypothesis import strategies as st

from qrel_tools import BipartiteDims, ChannelError, DimensionError


def test_partial_trace_of_product(toolkit, dims22, skewed_qubit, ground_qubit):
    product = np.kron(skewed_qubit, ground_qubit)
    assert np.allclose(toolkit.partial_trace_b(product, dims22).matrix, skewed_qubit)


def test_partial_trace_of_bell_state_is_maximally_mixed(toolkit, dims22, bell_state, maximally_mixed_qubit):
    assert np.allclose(toolkit.partial_trace_b(bell_state, dims22).matrix, maximally_mixed_qubit)


def test_partial_trace_dimension_mismatch(toolkit, dims22):
    with pytest.raises(DimensionError):
        toolkit.partial_trace_b(np.eye(3) / 3, dims22)


def test_partial_trace_adjoint_is_tensor_with_identity(toolkit):
    dims = BipartiteDims(d_a=2, d_b=3)
    lifted = toolkit.partial_trace_adjoint(np.diag([1.0, 2.0]), dims)
    assert np.allclose(lifted.matrix, np.kron(np.diag([1.0, 2.0]), np.eye(3)))


@pytest.mark.parametrize("d_a,d_b", [(2, 2), (2, 3), (3, 2)])
def test_partial_trace_duality(toolkit, d_a, d_b):
    certificate = toolkit.check_partial_trace_duality(BipartiteDims(d_a=d_a, d_b=d_b), seed=11)
    assert certificate.holds


def test_channel_rejects_non_trace_preserving_kraus(toolkit):
    with pytest.raises(ChannelError):
        toolkit.channel([0.5 * np.eye(2)])


def test_channel_rejects_inconsistent_shapes(toolkit):
    with pytest.raises(ChannelError):
        toolkit.channel([np.eye(2), np.eye(3)])


def test_unitary_channel_rejects_non_unitary(toolkit):
    with pytest.raises(ChannelError):
        toolkit.unitary_channel(np.array([[1.0, 1.0], [0.0, 1.0]]))


def test_full_depolarizer_output(toolkit, ground_qubit, maximally_mixed_qubit):
    depolarizer = toolkit.full_depolarizer(2)
    assert np.allclose(toolkit.apply_channel(depolarizer, ground_qubit).matrix, maximally_mixed_qubit)


def test_dephasing_kills_coherences(toolkit):
    plus = np.full((2, 2), 0.5)
    dephased = toolkit.apply_channel(toolkit.dephasing_channel(0.5), plus)
    assert np.allclose(dephased.matrix, np.eye(2) / 2)


def test_partial_trace_channel_matches_partial_trace(toolkit, dims22, full_rank_pair):
    rho, _ = full_rank_pair
    via_channel = toolkit.apply_channel(toolkit.partial_trace_channel(dims22), rho)
    assert np.allclose(via_channel.matrix, toolkit.partial_trace_b(rho, dims22).matrix)


def test_apply_channel_dimension_mismatch(toolkit, ground_qubit):
    with pytest.raises(DimensionError):
        toolkit.apply_channel(toolkit.identity_channel(3), ground_qubit)


def test_choi_matrix_of_identity(toolkit):
    psi = np.array([1.0, 0.0, 0.0, 1.0])
    assert np.allclose(toolkit.choi_matrix(toolkit.identity_channel(2)), np.outer(psi, psi))


def test_adjoint_pairs_with_channel(toolkit, rng):
    channel = toolkit.random_channel(3, 2, 2, seed=5)
    x = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    y = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))

    left = np.trace(y.conj().T @ channel.map(x))
    right = np.trace(toolkit.apply_channel_adjoint(channel, y).conj().T @ x)
    assert left == pytest.approx(right)


def test_stinespring_round_trip(toolkit, full_rank_pair):
    channel = toolkit.random_channel(4, n_kraus=3, seed=8)
    dilation = toolkit.stinespring_dilate(channel)
    rho, _ = full_rank_pair

    assert dilation.env_dim == 3
    assert dilation.round_trip_defect < 1e-9
    assert np.allclose(dilation.apply(rho), channel.map(rho))


def test_stinespring_needs_square_channel(toolkit):
    with pytest.raises(ChannelError):
        toolkit.stinespring_dilate(toolkit.random_channel(2, 3, seed=1))


def test_schwarz_inequality_for_unital_adjoint(toolkit, rng):
    channel = toolkit.random_channel(3, seed=12)
    x = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    assert toolkit.schwarz_defect(channel.adjoint_map, x).holds


def test_channel_json_dims_mismatch(toolkit):
    payload = toolkit.channel_to_json(toolkit.identity_channel(2))
    assert toolkit.channel_from_json(payload).d_in == 2

    payload['d_out'] = 3
    with pytest.raises(ChannelError):
        toolkit.channel_from_json(payload)


@seed(4)
@settings(max_examples=15, deadline=None)
@given(
    d_in=st.integers(min_value=1, max_value=4),
    d_out=st.integers(min_value=1, max_value=4),
    n_kraus=st.integers(min_value=1, max_value=4),
    channel_seed=st.integers(min_value=0, max_value=10 ** 6),
)
def test_random_channels_preserve_trace(d_in, d_out, n_kraus, channel_seed):
    from config import Config
    from qrel_tools import QrelToolkit

    toolkit = QrelToolkit(Config())
    if d_out * n_kraus < d_in:
        with pytest.raises(ChannelError):
            toolkit.random_channel(d_in, d_out, n_kraus, seed=channel_seed)
        return

    channel = toolkit.random_channel(d_in, d_out, n_kraus, seed=channel_seed)
    rho = toolkit.random_density(d_in, seed=channel_seed)
    image = toolkit.apply_channel(channel, rho)

    assert np.trace(image.matrix).real == pytest.approx(1.0)
    assert np.min(np.linalg.eigvalsh(image.matrix)) > -1e-10
