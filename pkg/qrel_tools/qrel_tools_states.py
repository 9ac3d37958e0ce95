"""
Qrel State Tools

This module provides density operators, supports, von Neumann entropy,
epsilon-regularization and seeded random-state generation.
"""

import logging
import math
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from .qrel_base import InvalidStateError, QrelError, ScheduleError, SeedLike, matrix_from_json, matrix_to_json
from .qrel_tools_linalg import (
    HermitianOperator, dagger, hermitize, spectral_norm, support_projector_matrix, support_threshold
)

# Configure logging
logger = logging.getLogger(__name__)


class DensityOperator(BaseModel):
    """PSD unit-trace Hermitian operator"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    op: HermitianOperator
    trace_defect: float = 0.0
    seed: Optional[int] = None
    rank: Optional[int] = None

    @property
    def matrix(self) -> np.ndarray:
        return self.op.matrix

    @property
    def dim(self) -> int:
        return self.op.dim


class RegularizedState(BaseModel):
    """rho + eps * I, deliberately left with trace 1 + eps * d"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    base: DensityOperator
    epsilon: float

    @property
    def matrix(self) -> np.ndarray:
        return self.base.matrix + self.epsilon * np.eye(self.base.dim)

    @property
    def dim(self) -> int:
        return self.base.dim


class RegularizedEntropyResult(BaseModel):
    """Regularized entropy sequence against the direct spectral value"""

    epsilons: List[float]
    values: List[float]
    limit: float
    reference: float
    discrepancy: float
    bound: float
    agrees: bool


def entropy_of_spectrum(eigenvalues: np.ndarray, relative_tol: float) -> float:
    """-sum lambda log lambda over eigenvalues above the support threshold"""
    positive = eigenvalues[eigenvalues > support_threshold(eigenvalues, relative_tol)]
    return float(-np.sum(positive * np.log(positive)))


class StatesMixin:
    """Mixin class for density-operator operations"""

    def density(self,
                matrix: Any,
                seed: Optional[int] = None,
                rank: Optional[int] = None) -> DensityOperator:
        """
        Certify a density operator

        Args:
            matrix: Square matrix, HermitianOperator or DensityOperator
            seed: Generating seed recorded as metadata
            rank: Generating rank recorded as metadata

        Returns:
            DensityOperator

        Raises:
            InvalidStateError: If the input is not Hermitian, not PSD within
                tau_support or its trace differs from 1 by more than the trace tolerance
        """
        if isinstance(matrix, DensityOperator):
            return matrix
        try:
            op = self._as_hermitian(matrix, "state")
        except QrelError as e:
            raise InvalidStateError(f"Not a density operator: {e}")

        eigenvalues = np.linalg.eigvalsh(op.matrix)
        tau = support_threshold(eigenvalues, self.tolerances.support)
        if eigenvalues[0] < -tau:
            self._fail(InvalidStateError, f"State is not PSD: minimum eigenvalue {eigenvalues[0]:.3e}")

        trace_defect = abs(float(np.trace(op.matrix).real) - 1.0)
        if trace_defect > self.tolerances.trace:
            self._fail(InvalidStateError, f"State trace differs from 1 by {trace_defect:.3e}")

        return DensityOperator(op=op, trace_defect=trace_defect, seed=seed, rank=rank)

    def _as_density(self, value: Any, name: str = "state") -> DensityOperator:
        if isinstance(value, DensityOperator):
            return value
        try:
            return self.density(value)
        except InvalidStateError as e:
            raise InvalidStateError(f"{name}: {e}")

    def von_neumann_entropy(self, state: Any) -> float:
        """S(rho) = -Tr(rho log rho) in nats, using 0 log 0 = 0"""
        rho = self._as_density(state)
        return entropy_of_spectrum(np.linalg.eigvalsh(rho.matrix), self.tolerances.support)

    def regularize(self, state: Any, epsilon: float) -> RegularizedState:
        """rho_eps = rho + eps * I (not renormalized)"""
        if not epsilon > 0.0:
            self._fail(ScheduleError, f"Regularization epsilon must be positive, got {epsilon}")
        return RegularizedState(base=self._as_density(state), epsilon=float(epsilon))

    def regularized_entropy_limit(self,
                                  state: Any,
                                  eps_schedule: Optional[Sequence[float]] = None) -> RegularizedEntropyResult:
        """
        -Tr(rho_eps log rho_eps) along a decreasing schedule

        The last value is compared with the spectral entropy against the bound
        10 * eps_last * d * |log eps_last|.

        Raises:
            ScheduleError: If the schedule is not strictly decreasing and positive
        """
        rho = self._as_density(state)
        epsilons = self._validate_schedule(eps_schedule or self.schedules.eps_schedule, "eps_schedule")

        base_eigenvalues = np.linalg.eigvalsh(rho.matrix)
        values = []
        for epsilon in epsilons:
            shifted = np.maximum(base_eigenvalues, 0.0) + epsilon
            values.append(float(-np.sum(shifted * np.log(shifted))))

        reference = self.von_neumann_entropy(rho)
        last = epsilons[-1]
        bound = 10.0 * last * rho.dim * abs(math.log(last))
        discrepancy = abs(values[-1] - reference)
        logger.debug(f"Regularized entropy limit {values[-1]:.10f} vs spectral {reference:.10f}")

        return RegularizedEntropyResult(
            epsilons=epsilons,
            values=values,
            limit=values[-1],
            reference=reference,
            discrepancy=discrepancy,
            bound=bound,
            agrees=discrepancy <= bound
        )

    def random_density(self, dim: int, rank: Optional[int] = None, seed: SeedLike = None) -> DensityOperator:
        """
        Ginibre-induced state rho = GG†/Tr(GG†) with G of shape d x r

        Raises:
            InvalidStateError: If the rank is not in 1..d
        """
        rank = dim if rank is None else rank
        if not 1 <= rank <= dim:
            self._fail(InvalidStateError, f"Rank must lie in 1..{dim}, got {rank}")
        rng = self._rng(seed)
        g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
        rho = g @ dagger(g)
        rho = hermitize(rho / np.trace(rho).real)
        return self.density(rho, seed=seed if isinstance(seed, int) else None, rank=rank)

    def random_nested_pair(self,
                           dim: int,
                           rank_rho: int,
                           rank_sigma: int,
                           seed: SeedLike = None) -> Tuple[DensityOperator, DensityOperator]:
        """
        Random (rho, sigma) with supp(rho) contained in supp(sigma)

        sigma = GG† with G of shape d x r_sigma; rho = GKK†G† with K of shape
        r_sigma x r_rho, so the range of rho lies in the range of G.
        """
        if not 1 <= rank_rho <= rank_sigma <= dim:
            self._fail(InvalidStateError, f"Need 1 <= rank_rho <= rank_sigma <= {dim}, got {rank_rho}, {rank_sigma}")
        rng = self._rng(seed)
        g = rng.standard_normal((dim, rank_sigma)) + 1j * rng.standard_normal((dim, rank_sigma))
        k = rng.standard_normal((rank_sigma, rank_rho)) + 1j * rng.standard_normal((rank_sigma, rank_rho))
        sigma = g @ dagger(g)
        rho = g @ k @ dagger(k) @ dagger(g)
        return (
            self.density(hermitize(rho / np.trace(rho).real), rank=rank_rho),
            self.density(hermitize(sigma / np.trace(sigma).real), rank=rank_sigma)
        )

    def support_contained(self, rho: Any, sigma: Any, tol: Optional[float] = None) -> bool:
        """supp(rho) within supp(sigma), tested as ||(I - P_sigma) P_rho||_2 <= tol"""
        return self.support_overlap(rho, sigma) <= (self.tolerances.support_overlap if tol is None else tol)

    def support_overlap(self, rho: Any, sigma: Any) -> float:
        """||(I - P_sigma) P_rho||_2, zero iff the supports nest"""
        rho_op = self._as_hermitian(rho, "rho")
        sigma_op = self._as_hermitian(sigma, "sigma")
        self._validate_same_dim(rho_op.matrix, sigma_op.matrix, "rho and sigma")
        p_rho = support_projector_matrix(rho_op.matrix, self.tolerances.support)
        p_sigma = support_projector_matrix(sigma_op.matrix, self.tolerances.support)
        return spectral_norm((np.eye(rho_op.dim) - p_sigma) @ p_rho)

    def state_to_json(self, state: Any) -> Dict[str, Any]:
        """Matrix JSON tagged with "kind": "density" and seed/rank metadata"""
        rho = self._as_density(state)
        data = matrix_to_json(rho.matrix)
        data['kind'] = 'density'
        data['seed'] = rho.seed
        data['rank'] = rho.rank
        return data

    def state_from_json(self, data: Dict[str, Any]) -> DensityOperator:
        """
        Decode a state; a missing "kind" is accepted, another kind is not

        Raises:
            InvalidStateError: If the payload is tagged as something else or is not a state
        """
        if not isinstance(data, dict):
            self._fail(InvalidStateError, "State JSON must be an object")
        kind = data.get('kind', 'density')
        if kind != 'density':
            self._fail(InvalidStateError, f"Expected a density JSON payload, got kind={kind!r}")
        return self.density(matrix_from_json(data), seed=data.get('seed'), rank=data.get('rank'))
