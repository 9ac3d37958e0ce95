"""
Qrel Channel Tools

This module provides the partial trace and its adjoint, Kraus channels with
CPTP certification, Stinespring dilations, the Schwarz-map certificate and a
set of named and random channels.
"""

import logging
import math
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.linalg import null_space

from .qrel_base import (
    Certificate, ChannelError, DimensionError, SeedLike, matrix_from_json, matrix_to_json
)
from .qrel_tools_linalg import HermitianOperator, dagger, hermitize, min_eigenvalue, support_threshold
from .qrel_tools_states import DensityOperator

# Configure logging
logger = logging.getLogger(__name__)


class BipartiteDims(BaseModel):
    """Dimensions of H_a (x) H_b"""

    model_config = ConfigDict(frozen=True)

    d_a: int = Field(gt=0)
    d_b: int = Field(gt=0)

    @property
    def d_ab(self) -> int:
        return self.d_a * self.d_b


class QuantumChannel(BaseModel):
    """Kraus family of a CPTP map from d_in x d_in to d_out x d_out matrices"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    kraus: List[np.ndarray]
    d_in: int
    d_out: int
    completeness_defect: float = 0.0
    name: Optional[str] = None

    def map(self, matrix: np.ndarray) -> np.ndarray:
        """sum_i K_i X K_i†"""
        return sum(k @ matrix @ dagger(k) for k in self.kraus)

    def adjoint_map(self, matrix: np.ndarray) -> np.ndarray:
        """sum_i K_i† Y K_i"""
        return sum(dagger(k) @ matrix @ k for k in self.kraus)


class StinespringDilation(BaseModel):
    """Unitary U on d * env_dim with C(X) = Tr_env(U (X (x) env_state) U†)"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    env_dim: int
    unitary: np.ndarray
    env_state: DensityOperator
    isometry: np.ndarray
    round_trip_defect: float = 0.0
    unitarity_defect: float = 0.0

    def apply(self, matrix: np.ndarray) -> np.ndarray:
        dim = self.isometry.shape[1]
        joint = self.unitary @ np.kron(matrix, self.env_state.matrix) @ dagger(self.unitary)
        return partial_trace(joint, dim, self.env_dim)


def partial_trace(matrix: np.ndarray, d_a: int, d_b: int) -> np.ndarray:
    """Tr_b of an arbitrary (d_a d_b) x (d_a d_b) matrix, kron(A, B) ordering"""
    return np.einsum('ajbj->ab', matrix.reshape(d_a, d_b, d_a, d_b))


def matrix_unit(rows: int, cols: int, i: int, j: int) -> np.ndarray:
    unit = np.zeros((rows, cols), dtype=complex)
    unit[i, j] = 1.0
    return unit


def weyl_operators(dim: int) -> List[np.ndarray]:
    """X^a Z^b for a, b in 0..d-1 (the Paulis up to phase for d = 2)"""
    shift = np.roll(np.eye(dim, dtype=complex), 1, axis=0)
    clock = np.diag(np.exp(2j * math.pi * np.arange(dim) / dim))
    return [np.linalg.matrix_power(shift, a) @ np.linalg.matrix_power(clock, b)
            for a in range(dim) for b in range(dim)]


class ChannelsMixin:
    """Mixin class for partial traces and quantum channels"""

    def _validate_dims(self, matrix: np.ndarray, dims: BipartiteDims, name: str = "operator") -> None:
        if matrix.shape != (dims.d_ab, dims.d_ab):
            self._fail(DimensionError, f"{name} has shape {matrix.shape}, expected {dims.d_ab}x{dims.d_ab} "
                                       f"for d_a={dims.d_a}, d_b={dims.d_b}")

    def partial_trace_b(self, operator: Any, dims: BipartiteDims) -> HermitianOperator:
        """
        Tr_b(X_a (x) X_b) = Tr(X_b) X_a, extended linearly

        Raises:
            DimensionError: If the operator is not d_ab x d_ab
        """
        op = self._as_hermitian(operator)
        self._validate_dims(op.matrix, dims)
        return HermitianOperator(matrix=np.array(hermitize(partial_trace(op.matrix, dims.d_a, dims.d_b))))

    def partial_trace_adjoint(self, operator: Any, dims: BipartiteDims) -> HermitianOperator:
        """Tr_b†(X_a) = X_a (x) I_b"""
        op = self._as_hermitian(operator)
        if op.dim != dims.d_a:
            self._fail(DimensionError, f"Operator has dimension {op.dim}, expected d_a={dims.d_a}")
        return HermitianOperator(matrix=np.kron(op.matrix, np.eye(dims.d_b)))

    def check_partial_trace_duality(self, dims: BipartiteDims, probes: int = 20, seed: SeedLike = None) -> Certificate:
        """
        Tr(Tr_b(X_ab) X_a) = Tr(X_ab (X_a (x) I_b)) on random complex probe pairs

        The same identity read as <X_ab, Tr_b†(X_a)> = <Tr_b(X_ab), X_a> in the
        Hilbert-Schmidt inner product is the adjointness of Tr_b and Tr_b†.
        """
        rng = self._rng(seed)
        worst = 0.0
        for _ in range(probes):
            x_ab = rng.standard_normal((dims.d_ab, dims.d_ab)) + 1j * rng.standard_normal((dims.d_ab, dims.d_ab))
            x_a = rng.standard_normal((dims.d_a, dims.d_a)) + 1j * rng.standard_normal((dims.d_a, dims.d_a))
            left = np.trace(partial_trace(x_ab, dims.d_a, dims.d_b) @ x_a)
            right = np.trace(x_ab @ np.kron(x_a, np.eye(dims.d_b)))
            scale = 1.0 + np.linalg.norm(x_ab) * np.linalg.norm(x_a)
            worst = max(worst, abs(left - right) / scale)
        return Certificate.equality('partial_trace_duality', worst, self.tolerances.duality, probes=probes)

    def schwarz_defect(self,
                       adjoint_map: Callable[[np.ndarray], np.ndarray],
                       operator: Any,
                       tol: Optional[float] = None) -> Certificate:
        """
        Certificate for Phi(X†) Phi(X) <= Phi(X† X)

        Args:
            adjoint_map: Unital completely positive map acting on matrices
            operator: Arbitrary square matrix X
            tol: Loewner tolerance (default: tolerances.inequality scaled by ||X||^2)
        """
        x = self._as_matrix(operator, "X")
        image = adjoint_map(x)
        gap = hermitize(adjoint_map(dagger(x) @ x) - adjoint_map(dagger(x)) @ image)
        tol = self.tolerances.inequality * (1.0 + float(np.linalg.norm(x)) ** 2) if tol is None else tol
        return Certificate.inequality('schwarz', min_eigenvalue(gap), tol)

    def channel(self, kraus: Sequence[Any], name: Optional[str] = None) -> QuantumChannel:
        """
        Build a certified CPTP channel from Kraus operators

        Raises:
            ChannelError: If shapes differ, sum K†K deviates from I or the
                Choi matrix is not PSD
        """
        operators = [self._as_matrix(k, "Kraus operator") for k in kraus]
        if not operators:
            self._fail(ChannelError, "A channel needs at least one Kraus operator")
        shape = operators[0].shape
        if any(k.shape != shape for k in operators):
            self._fail(ChannelError, f"Kraus operators have inconsistent shapes: {[k.shape for k in operators]}")

        d_out, d_in = shape
        completeness = float(np.linalg.norm(sum(dagger(k) @ k for k in operators) - np.eye(d_in)))
        if completeness > self.tolerances.completeness:
            self._fail(ChannelError, f"Kraus completeness defect {completeness:.3e} exceeds "
                                     f"{self.tolerances.completeness:.1e}; the map is not trace preserving")

        built = QuantumChannel(kraus=operators, d_in=d_in, d_out=d_out, completeness_defect=completeness, name=name)
        choi = self.choi_matrix(built)
        choi_min = min_eigenvalue(choi)
        if choi_min < -support_threshold(np.linalg.eigvalsh(choi), self.tolerances.support):
            self._fail(ChannelError, f"Choi matrix has negative eigenvalue {choi_min:.3e}")
        return built

    def choi_matrix(self, channel: QuantumChannel) -> np.ndarray:
        """J = sum_ij E_ij (x) C(E_ij)"""
        d_in = channel.d_in
        return sum(np.kron(matrix_unit(d_in, d_in, i, j), channel.map(matrix_unit(d_in, d_in, i, j)))
                   for i in range(d_in) for j in range(d_in))

    def _validate_channel(self, channel: QuantumChannel) -> None:
        if channel.completeness_defect > self.tolerances.completeness:
            self._fail(ChannelError, f"Channel completeness defect {channel.completeness_defect:.3e} above tolerance")

    def apply_channel(self, channel: QuantumChannel, state: Any) -> DensityOperator:
        """
        C(rho) = sum_i K_i rho K_i†

        Raises:
            ChannelError: If the channel is not trace preserving
            DimensionError: If the state dimension differs from d_in
        """
        self._validate_channel(channel)
        rho = self._as_density(state)
        if rho.dim != channel.d_in:
            self._fail(DimensionError, f"State dimension {rho.dim} does not match channel input {channel.d_in}")
        return self.density(hermitize(channel.map(rho.matrix)))

    def apply_channel_adjoint(self, channel: QuantumChannel, operator: Any) -> np.ndarray:
        """C†(Y) = sum_i K_i† Y K_i"""
        y = self._as_matrix(operator, "Y")
        if y.shape != (channel.d_out, channel.d_out):
            self._fail(DimensionError, f"Operator shape {y.shape} does not match channel output {channel.d_out}")
        return channel.adjoint_map(y)

    def stinespring_dilate(self, channel: QuantumChannel) -> StinespringDilation:
        """
        Unitary dilation U of a square channel

        The isometry V x = sum_i K_i x (x) e_i is placed in the columns of U
        indexed by x (x) e_0; the remaining columns are an orthonormal basis of
        the complement of range(V). Any completion is valid.

        Raises:
            ChannelError: If d_in != d_out or the round trip fails
        """
        self._validate_channel(channel)
        if channel.d_in != channel.d_out:
            self._fail(ChannelError, f"Stinespring form needs d_in == d_out, got {channel.d_in} -> {channel.d_out}")

        dim = channel.d_in
        env_dim = max(len(channel.kraus), 2)
        basis = np.eye(env_dim, dtype=complex)
        isometry = sum(np.kron(k, basis[:, [i]]) for i, k in enumerate(channel.kraus))

        unitary = np.zeros((dim * env_dim, dim * env_dim), dtype=complex)
        input_columns = [j * env_dim for j in range(dim)]
        other_columns = [c for c in range(dim * env_dim) if c not in input_columns]
        unitary[:, input_columns] = isometry
        unitary[:, other_columns] = null_space(dagger(isometry))

        env_state = self.density(np.outer(basis[:, 0], basis[:, 0].conj()))
        unitarity = float(np.linalg.norm(dagger(unitary) @ unitary - np.eye(dim * env_dim)))

        dilation = StinespringDilation(env_dim=env_dim, unitary=unitary, env_state=env_state,
                                       isometry=isometry, unitarity_defect=unitarity)
        round_trip = max(
            float(np.linalg.norm(dilation.apply(matrix_unit(dim, dim, i, j)) - channel.map(matrix_unit(dim, dim, i, j))))
            for i in range(dim) for j in range(dim)
        )
        if round_trip > self.tolerances.dilation or unitarity > self.tolerances.dilation:
            self._fail(ChannelError, f"Stinespring dilation failed: round trip {round_trip:.3e}, unitarity {unitarity:.3e}")

        logger.debug(f"Dilated {channel.name or 'channel'}: env_dim={env_dim}, round trip {round_trip:.2e}")
        return dilation.model_copy(update={'round_trip_defect': round_trip})

    def identity_channel(self, dim: int) -> QuantumChannel:
        return self.channel([np.eye(dim)], name='identity')

    def full_depolarizer(self, dim: int) -> QuantumChannel:
        """X -> Tr(X) I/d, with Kraus operators X^a Z^b / d"""
        return self.channel([w / dim for w in weyl_operators(dim)], name='full_depolarizer')

    def dephasing_channel(self, p: float = 0.5) -> QuantumChannel:
        """Qubit dephasing with Kraus {sqrt(1-p) I, sqrt(p) Z}"""
        self._validate_unit_interval(p, "dephasing probability")
        return self.channel([math.sqrt(1.0 - p) * np.eye(2), math.sqrt(p) * np.diag([1.0, -1.0])], name='dephasing')

    def unitary_channel(self, unitary: Any) -> QuantumChannel:
        """
        X -> U X U†

        Raises:
            ChannelError: If U is not unitary within tolerances.unitary
        """
        u = self._as_matrix(unitary, "U")
        self._validate_square(u, "U")
        defect = float(np.linalg.norm(dagger(u) @ u - np.eye(u.shape[0])))
        if defect > self.tolerances.unitary:
            self._fail(ChannelError, f"Matrix is not unitary: defect {defect:.3e}")
        return self.channel([u], name='unitary')

    def partial_trace_channel(self, dims: BipartiteDims) -> QuantumChannel:
        """Tr_b as Kraus family K_j = I_a (x) <j|"""
        basis = np.eye(dims.d_b, dtype=complex)
        return self.channel([np.kron(np.eye(dims.d_a), basis[[j], :]) for j in range(dims.d_b)], name='partial_trace')

    def random_channel(self,
                       d_in: int,
                       d_out: Optional[int] = None,
                       n_kraus: Optional[int] = None,
                       seed: SeedLike = None) -> QuantumChannel:
        """
        Random CPTP map from a Haar-like isometry W (QR of Ginibre)

        W has shape (d_out * n, d_in); its row blocks are the Kraus operators,
        so sum K†K = W†W = I.
        """
        d_out = d_in if d_out is None else d_out
        n_kraus = d_in if n_kraus is None else n_kraus
        if d_out * n_kraus < d_in:
            self._fail(ChannelError, f"d_out * n_kraus = {d_out * n_kraus} is smaller than d_in = {d_in}")
        rng = self._rng(seed)
        ginibre = rng.standard_normal((d_out * n_kraus, d_in)) + 1j * rng.standard_normal((d_out * n_kraus, d_in))
        w, _ = np.linalg.qr(ginibre)
        return self.channel([w[i * d_out:(i + 1) * d_out, :] for i in range(n_kraus)], name='random')

    def channel_to_json(self, channel: QuantumChannel) -> Dict[str, Any]:
        return {
            'kraus': [matrix_to_json(k) for k in channel.kraus],
            'd_in': channel.d_in,
            'd_out': channel.d_out,
        }

    def channel_from_json(self, data: Dict[str, Any]) -> QuantumChannel:
        """
        Decode {"kraus": [...], "d_in": n, "d_out": m}

        Raises:
            ChannelError: If fields are missing or the declared dims disagree
        """
        if not isinstance(data, dict) or 'kraus' not in data:
            self._fail(ChannelError, "Channel JSON must be an object with a 'kraus' list")
        built = self.channel([matrix_from_json(k) for k in data['kraus']], name=data.get('name'))
        for key in ('d_in', 'd_out'):
            if key in data and int(data[key]) != getattr(built, key):
                self._fail(ChannelError, f"Channel JSON declares {key}={data[key]} but Kraus shapes give "
                                         f"{getattr(built, key)}")
        return built
