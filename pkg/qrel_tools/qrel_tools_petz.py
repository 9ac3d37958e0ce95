"""
Qrel Petz Tools

This module provides the modular-operator machinery behind the Petz proof of
monotonicity: left/right multiplication superoperators, the relative modular
operator, the inner-product and integral forms of the relative entropy, the
isometry V_rho with its certificates, the scalar counterexamples to the
contractive Jensen step, the corrected monotonicity chain (regularized for
singular inputs), the Petz recovery map and the fidelity bound.

Superoperators act on column-stacked operators, vec(X) = X.reshape(-1, order='F'),
so that R_B = B^T (x) I and L_C = I (x) C.
"""

import csv
import io
import logging
import math
from typing import Any, Callable, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from .qrel_base import (
    Certificate, DimensionError, InfiniteBranchError, OrderError, PreconditionError, SeedLike,
    SingularOperatorError
)
from .qrel_tools_channels import BipartiteDims, QuantumChannel, partial_trace
from .qrel_tools_entropy import divergence_slope, divergence_threshold, entropy_difference
from .qrel_tools_linalg import (
    dagger, eigh, hermitize, min_eigenvalue, psd_power, spectral_apply, spectral_norm,
    support_projector_matrix, support_threshold
)
from .qrel_tools_states import DensityOperator

# Configure logging
logger = logging.getLogger(__name__)

# Relative round-off allowance per unit of operator norm
ROUNDOFF = 1e3 * np.finfo(float).eps


def vec(matrix: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization"""
    return np.asarray(matrix).reshape(-1, order='F')


def unvec(vector: np.ndarray, rows: int, cols: Optional[int] = None) -> np.ndarray:
    return np.asarray(vector).reshape((rows, rows if cols is None else cols), order='F')


def left_multiplication(matrix: np.ndarray) -> np.ndarray:
    """L_C: X -> C X"""
    return np.kron(np.eye(matrix.shape[0]), matrix)


def right_multiplication(matrix: np.ndarray) -> np.ndarray:
    """R_B: X -> X B"""
    return np.kron(matrix.T, np.eye(matrix.shape[0]))


def safe_log(values: np.ndarray) -> np.ndarray:
    return np.log(np.maximum(values, np.finfo(float).tiny))


def channel_superoperator(channel: QuantumChannel) -> np.ndarray:
    """Matrix of X -> sum K X K†, i.e. sum conj(K) (x) K"""
    return sum(np.kron(k.conj(), k) for k in channel.kraus)


class Superoperator(BaseModel):
    """Linear map between operator spaces, stored as a column-stacking matrix"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    mat: np.ndarray
    in_dim: int
    out_dim: int
    basis_convention: Literal['column-stacking'] = 'column-stacking'

    @classmethod
    def from_map(cls, action: Callable[[np.ndarray], np.ndarray], in_dim: int, out_dim: int) -> 'Superoperator':
        """Assemble column by column over the matrix units E_ij, vec index i + j * in_dim"""
        columns = []
        for index in range(in_dim * in_dim):
            unit = np.zeros(in_dim * in_dim, dtype=complex)
            unit[index] = 1.0
            columns.append(vec(action(unvec(unit, in_dim))))
        return cls(mat=np.column_stack(columns), in_dim=in_dim, out_dim=out_dim)

    def apply(self, matrix: np.ndarray) -> np.ndarray:
        return unvec(self.mat @ vec(matrix), self.out_dim)

    def adjoint(self) -> 'Superoperator':
        """Adjoint in the Hilbert-Schmidt inner product"""
        return Superoperator(mat=dagger(self.mat), in_dim=self.out_dim, out_dim=self.in_dim)

    @property
    def hermiticity_defect(self) -> float:
        return float(np.linalg.norm(self.mat - dagger(self.mat)))


class LeftRight(BaseModel):
    """L_sigma, R_rho and Delta_{rho,sigma} = L_sigma R_rho^{-1}"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    left: Superoperator
    right: Superoperator
    delta: Superoperator
    commutator_defect: float


class ModularPair(BaseModel):
    """Delta_{rho,sigma} on B(H_ab) and Delta^a on B(H_a) for (possibly regularized) states"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    delta_ab: Superoperator
    delta_a: Superoperator
    log_delta_ab: np.ndarray
    log_delta_a: np.ndarray
    rho: np.ndarray
    sigma: np.ndarray
    dims: BipartiteDims
    regularization_eps: float = 0.0
    hermiticity_defect: float = 0.0
    min_eigenvalue: float = 0.0


class VRho(BaseModel):
    """V(X) = (X omega^{-1/2} (x) I_b) rho^{1/2} with omega the reduced state"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    superoperator: Superoperator
    isometry_defect: float
    bridge_defect: float
    operator_norm: float

    @property
    def mat(self) -> np.ndarray:
        return self.superoperator.mat


class FlawedStepRow(BaseModel):
    x: float
    lhs: float
    rhs: float
    violation: bool


class FlawedStepTable(BaseModel):
    """Scalar comparison f(a x a) vs a f(x) a over a grid"""

    variant: Literal['inverse', 'log']
    alpha: float
    xi: float
    rows: List[FlawedStepRow]

    @property
    def violation_count(self) -> int:
        return sum(row.violation for row in self.rows)

    @property
    def all_violate(self) -> bool:
        return bool(self.rows) and self.violation_count == len(self.rows)

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator='\n')
        writer.writerow(['x', 'lhs', 'rhs', 'violation'])
        for row in self.rows:
            writer.writerow([repr(row.x), repr(row.lhs), repr(row.rhs), 'true' if row.violation else 'false'])
        return buffer.getvalue()


class PetzMixin:
    """Mixin class for the Petz route: modular operators, V_rho, recovery"""

    def _positive_definite(self, value: Any, name: str) -> np.ndarray:
        """
        Hermitian matrix with smallest eigenvalue above tau_support

        Raises:
            SingularOperatorError: If the operator is singular within tolerance
        """
        op = self._as_hermitian(value, name)
        eigenvalues = np.linalg.eigvalsh(op.matrix)
        if eigenvalues[0] <= support_threshold(eigenvalues, self.tolerances.support):
            self._fail(SingularOperatorError, f"{name} must be positive definite; smallest eigenvalue "
                                              f"{eigenvalues[0]:.3e} (regularize first)")
        return np.array(op.matrix)

    def is_positive_definite(self, matrix: np.ndarray) -> bool:
        eigenvalues = np.linalg.eigvalsh(hermitize(matrix))
        return bool(eigenvalues[0] > support_threshold(eigenvalues, self.tolerances.support))

    def _scaled(self, base: float, *norms: float) -> float:
        return base + ROUNDOFF * sum(norms)

    def build_left_right(self, rho: Any, sigma: Any) -> LeftRight:
        """
        L_sigma, R_rho and Delta = L_sigma R_rho^{-1} as column-stacking matrices

        Raises:
            SingularOperatorError: If rho is singular
        """
        rho_m = self._positive_definite(rho, "rho")
        sigma_m = self._as_hermitian(sigma, "sigma").matrix
        self._validate_same_dim(rho_m, sigma_m, "rho and sigma")
        dim = rho_m.shape[0]

        left = left_multiplication(sigma_m)
        right = right_multiplication(rho_m)
        delta = left @ right_multiplication(psd_power(rho_m, -1.0, self.tolerances.support))
        commutator = float(np.linalg.norm(left @ right - right @ left))
        logger.debug(f"build_left_right d={dim}: [L, R] defect {commutator:.2e}")

        return LeftRight(
            left=Superoperator(mat=left, in_dim=dim, out_dim=dim),
            right=Superoperator(mat=right, in_dim=dim, out_dim=dim),
            delta=Superoperator(mat=delta, in_dim=dim, out_dim=dim),
            commutator_defect=commutator
        )

    def log_modular_operator(self, rho: Any, sigma: Any) -> np.ndarray:
        """log Delta = log L_sigma - log R_rho = I (x) log(sigma) - log(rho)^T (x) I"""
        rho_m = self._positive_definite(rho, "rho")
        sigma_m = self._positive_definite(sigma, "sigma")
        log_rho = spectral_apply(rho_m, safe_log)
        log_sigma = spectral_apply(sigma_m, safe_log)
        return left_multiplication(log_sigma) - right_multiplication(log_rho)

    def entropy_via_modular(self, rho: Any, sigma: Any) -> float:
        """
        -<rho^{1/2}, log(Delta_{rho,sigma}) rho^{1/2}> with log Delta taken by
        functional calculus on the superoperator matrix

        Raises:
            SingularOperatorError: If rho or sigma is singular
        """
        self._positive_definite(sigma, "sigma")
        pair = self.build_left_right(rho, sigma)
        rho_m = self._as_hermitian(rho, "rho").matrix
        root = vec(psd_power(rho_m, 0.5, self.tolerances.support))
        log_delta = spectral_apply(pair.delta.mat, safe_log)
        return float(-np.real(np.vdot(root, log_delta @ root)))

    def entropy_via_integral(self,
                             rho: Any,
                             sigma: Any,
                             dims: Optional[BipartiteDims] = None,
                             panels: Optional[int] = None) -> float:
        """
        S = int_0^inf (<rho^{1/2}, (Delta + xi)^{-1} rho^{1/2}> - (1 + xi)^{-1}) dxi

        Evaluated in the eigenbasis of Delta by composite Gauss-Legendre
        quadrature in u = log(xi). With `dims`, the reduced pair
        (Tr_b rho, Tr_b sigma) is used instead, i.e. Delta^a.

        Raises:
            SingularOperatorError: If rho or sigma is singular
        """
        rho_m = self._as_hermitian(rho, "rho").matrix
        sigma_m = self._as_hermitian(sigma, "sigma").matrix
        if dims is not None:
            rho_m = partial_trace(rho_m, dims.d_a, dims.d_b)
            sigma_m = partial_trace(sigma_m, dims.d_a, dims.d_b)
        self._positive_definite(sigma_m, "sigma")

        delta = self.build_left_right(rho_m, sigma_m).delta.mat
        eigenvalues, eigenvectors = eigh(delta)
        weights = np.abs(dagger(eigenvectors) @ vec(psd_power(rho_m, 0.5, self.tolerances.support))) ** 2

        panels = panels or self.schedules.quadrature_panels
        lower, upper = self.schedules.quadrature_range
        nodes, node_weights = np.polynomial.legendre.leggauss(self.schedules.quadrature_nodes)
        edges = np.linspace(lower, upper, panels + 1)
        half = 0.5 * (edges[1:] - edges[:-1])
        centers = 0.5 * (edges[1:] + edges[:-1])
        u = (centers[:, None] + half[:, None] * nodes[None, :]).ravel()
        du = (half[:, None] * node_weights[None, :]).ravel()
        xi = np.exp(u)

        integrand = (weights[None, :] / (eigenvalues[None, :] + xi[:, None])).sum(axis=1) - weights.sum() / (1.0 + xi)
        value = float(np.sum(integrand * xi * du))
        logger.debug(f"entropy_via_integral: {panels} panels x {len(nodes)} nodes -> {value:.12f}")
        return value

    def check_modular_log_identity(self, rho: Any, sigma: Any) -> Certificate:
        """log(Delta) by superoperator functional calculus equals log L_sigma - log R_rho"""
        pair = self.build_left_right(rho, sigma)
        direct = spectral_apply(pair.delta.mat, safe_log)
        structural = self.log_modular_operator(rho, sigma)
        tol = self._scaled(self.tolerances.isometry, spectral_norm(pair.delta.mat))
        return Certificate.equality('modular_log_identity', float(np.linalg.norm(direct - structural)), tol)

    def build_modular_pair(self,
                           rho: Any,
                           sigma: Any,
                           dims: BipartiteDims,
                           eps: float = 0.0) -> ModularPair:
        """
        Delta_{rho,sigma} and Delta^a_{Tr_b rho, Tr_b sigma}

        With eps > 0 both states are replaced by (X + eps I) / (1 + eps d_ab).

        Raises:
            SingularOperatorError: If eps == 0 and an input is singular
            OrderError: If a modular operator fails HS-Hermiticity or PSD certification
        """
        rho_m = self._as_hermitian(rho, "rho").matrix
        sigma_m = self._as_hermitian(sigma, "sigma").matrix
        self._validate_dims(rho_m, dims, "rho")
        self._validate_dims(sigma_m, dims, "sigma")
        if eps > 0.0:
            rho_m = self._mix_identity(rho_m, eps)
            sigma_m = self._mix_identity(sigma_m, eps)
        rho_m = self._positive_definite(rho_m, "rho")
        sigma_m = self._positive_definite(sigma_m, "sigma")
        rho_a = partial_trace(rho_m, dims.d_a, dims.d_b)
        sigma_a = partial_trace(sigma_m, dims.d_a, dims.d_b)

        delta_ab = self.build_left_right(rho_m, sigma_m).delta
        delta_a = self.build_left_right(rho_a, sigma_a).delta

        defect = max(delta_ab.hermiticity_defect, delta_a.hermiticity_defect)
        hermitian_limit = self.tolerances.hermitian * (1.0 + float(np.linalg.norm(delta_ab.mat)))
        if defect > hermitian_limit:
            self._fail(OrderError, f"Modular operator is not HS-Hermitian: defect {defect:.3e}")
        lowest = min(min_eigenvalue(delta_ab.mat), min_eigenvalue(delta_a.mat))
        if lowest < -self._scaled(0.0, spectral_norm(delta_ab.mat)):
            self._fail(OrderError, f"Modular operator is not PSD: minimum eigenvalue {lowest:.3e}")

        return ModularPair(
            delta_ab=delta_ab,
            delta_a=delta_a,
            log_delta_ab=self.log_modular_operator(rho_m, sigma_m),
            log_delta_a=self.log_modular_operator(rho_a, sigma_a),
            rho=rho_m,
            sigma=sigma_m,
            dims=dims,
            regularization_eps=eps,
            hermiticity_defect=defect,
            min_eigenvalue=lowest
        )

    def _mix_identity(self, matrix: np.ndarray, eps: float) -> np.ndarray:
        dim = matrix.shape[0]
        return (matrix + eps * np.eye(dim)) / (1.0 + eps * dim)

    def build_v_rho(self, rho: Any, dims: BipartiteDims) -> VRho:
        """
        V_rho(X) = (X Tr_b(rho)^{-1/2} (x) I_b) rho^{1/2}, from B(H_a) to B(H_ab)

        Raises:
            SingularOperatorError: If rho is singular
        """
        rho_m = self._positive_definite(rho, "rho")
        self._validate_dims(rho_m, dims, "rho")
        omega = partial_trace(rho_m, dims.d_a, dims.d_b)
        root = psd_power(rho_m, 0.5, self.tolerances.support)
        inverse_root_omega = psd_power(omega, -0.5, self.tolerances.support)
        identity_b = np.eye(dims.d_b)

        superoperator = Superoperator.from_map(
            lambda x: np.kron(x @ inverse_root_omega, identity_b) @ root, dims.d_a, dims.d_ab
        )
        return self._certify_v(superoperator, omega, root)

    def _certify_v(self, superoperator: Superoperator, reduced: np.ndarray, root: np.ndarray) -> VRho:
        gram = dagger(superoperator.mat) @ superoperator.mat
        isometry_defect = float(np.linalg.norm(gram - np.eye(gram.shape[0])))
        bridge = superoperator.apply(psd_power(reduced, 0.5, self.tolerances.support))
        bridge_defect = float(np.linalg.norm(bridge - root))
        return VRho(
            superoperator=superoperator,
            isometry_defect=isometry_defect,
            bridge_defect=bridge_defect,
            operator_norm=spectral_norm(superoperator.mat)
        )

    def certify_v_rho(self, v: VRho) -> Certificate:
        """Isometry, bridge identity and contraction certificates for a built V"""
        return Certificate.chain('v_rho', [
            Certificate.equality('isometry', v.isometry_defect, self.tolerances.isometry),
            Certificate.equality('bridge', v.bridge_defect, self.tolerances.isometry),
            Certificate.inequality('contraction', 1.0 + self.tolerances.isometry - v.operator_norm, 0.0,
                                   operator_norm=v.operator_norm),
        ])

    def build_v_for_channel(self, rho: Any, channel: QuantumChannel) -> VRho:
        """
        V = R_{rho^{1/2}} o C† o R_{C(rho)^{-1/2}}, from B(H_out) to B(H_in)

        Equals V_rho for C = Tr_b. For a general channel it is a contraction
        but usually not an isometry; the defect is carried on the result.

        Raises:
            SingularOperatorError: If rho or C(rho) is singular
        """
        rho_m = self._positive_definite(rho, "rho")
        if rho_m.shape[0] != channel.d_in:
            self._fail(DimensionError, f"State dimension {rho_m.shape[0]} does not match channel input {channel.d_in}")
        image = self._positive_definite(hermitize(channel.map(rho_m)), "C(rho)")
        root = psd_power(rho_m, 0.5, self.tolerances.support)

        mat = (right_multiplication(root)
               @ dagger(channel_superoperator(channel))
               @ right_multiplication(psd_power(image, -0.5, self.tolerances.support)))
        superoperator = Superoperator(mat=mat, in_dim=channel.d_out, out_dim=channel.d_in)
        return self._certify_v(superoperator, image, root)

    def check_key_inequality(self,
                             rho: Any,
                             sigma: Any,
                             dims: BipartiteDims,
                             probes: int = 10,
                             seed: SeedLike = None) -> Certificate:
        """
        V_rho† Delta_{rho,sigma} V_rho <= Delta^a in the Loewner order

        Also checks <V X, Delta V X> = Tr(X† Tr_b(sigma) X Tr_b(rho)^{-1}) on
        random probes X.
        """
        pair = self.build_modular_pair(rho, sigma, dims)
        v = self.build_v_rho(pair.rho, dims)
        compressed = hermitize(dagger(v.mat) @ pair.delta_ab.mat @ v.mat)
        norm = spectral_norm(pair.delta_ab.mat)

        key = Certificate.inequality('key_inequality', min_eigenvalue(pair.delta_a.mat - compressed),
                                     self._scaled(self.tolerances.inequality, norm))

        rng = self._rng(seed)
        omega_inverse = psd_power(partial_trace(pair.rho, dims.d_a, dims.d_b), -1.0, self.tolerances.support)
        sigma_a = partial_trace(pair.sigma, dims.d_a, dims.d_b)
        worst = 0.0
        for _ in range(probes):
            x = rng.standard_normal((dims.d_a, dims.d_a)) + 1j * rng.standard_normal((dims.d_a, dims.d_a))
            image = vec(v.superoperator.apply(x))
            lhs = np.vdot(image, pair.delta_ab.mat @ image)
            rhs = np.trace(dagger(x) @ sigma_a @ x @ omega_inverse)
            worst = max(worst, abs(lhs - rhs) / (1.0 + abs(rhs)))
        identity = Certificate.equality('trace_identity', worst, self._scaled(self.tolerances.isometry, norm),
                                        probes=probes)

        return Certificate.chain('key_inequality', [
            Certificate.equality('isometry', v.isometry_defect, self.tolerances.isometry),
            key,
            identity
        ])

    def flawed_step_counterexample(self,
                                   alpha: float = 0.5,
                                   xi: float = 0.5,
                                   x_grid: Optional[Sequence[float]] = None,
                                   variant: Literal['inverse', 'log'] = 'inverse') -> FlawedStepTable:
        """
        Scalar test of the contractive Jensen step with a = alpha

        inverse: lhs = (a x a + xi)^{-1}, rhs = a (x + xi)^{-1} a
        log:     lhs = -log(a x a),       rhs = -a log(x) a

        Raises:
            PreconditionError: If the variant is unknown, alpha is not in (0, 1], xi <= 0
                or the grid is empty
        """
        if variant not in ('inverse', 'log'):
            self._fail(PreconditionError, f"Unknown variant {variant!r}, expected 'inverse' or 'log'")
        if not 0.0 < alpha <= 1.0:
            self._fail(PreconditionError, f"alpha must lie in (0, 1], got {alpha}")
        if variant == 'inverse' and not xi > 0.0:
            self._fail(PreconditionError, f"xi must be positive, got {xi}")
        if x_grid is None:
            start, stop, count = self.schedules.figure_grid
            x_grid = np.linspace(start, stop, int(count))
        grid = [float(x) for x in x_grid]
        if not grid:
            self._fail(PreconditionError, "x_grid must not be empty")
        if any(x <= 0.0 for x in grid):
            self._fail(PreconditionError, "x_grid must contain positive values only")

        rows = []
        for x in grid:
            if variant == 'inverse':
                lhs = 1.0 / (alpha * x * alpha + xi)
                rhs = alpha * (1.0 / (x + xi)) * alpha
            else:
                lhs = -math.log(alpha * x * alpha)
                rhs = -alpha * math.log(x) * alpha
            rows.append(FlawedStepRow(x=x, lhs=lhs, rhs=rhs, violation=lhs > rhs + self.tolerances.inequality))

        table = FlawedStepTable(variant=variant, alpha=alpha, xi=xi, rows=rows)
        logger.info(f"Flawed step ({variant}, alpha={alpha}, xi={xi}): {table.violation_count}/{len(rows)} violations")
        return table

    def _petz_chain_steps(self, pair: ModularPair) -> Tuple[List[Certificate], float, float]:
        """
        Links of the corrected chain for positive-definite (rho, sigma):

        S_a = <w, -log Delta^a w> <= <w, -log(V†Delta V) w> <= <w, V†(-log Delta)V w> = S

        with w = Tr_b(rho)^{1/2}. Returns the steps and the two end values.
        """
        dims = pair.dims
        v = self.build_v_rho(pair.rho, dims)
        delta, delta_a = pair.delta_ab.mat, pair.delta_a.mat
        compressed = hermitize(dagger(v.mat) @ delta @ v.mat)
        compressed_eigenvalues = np.linalg.eigvalsh(compressed)

        neg_log_compressed = -spectral_apply(compressed, safe_log)
        neg_log_delta = -pair.log_delta_ab
        pulled_back = hermitize(dagger(v.mat) @ neg_log_delta @ v.mat)
        w = vec(psd_power(partial_trace(pair.rho, dims.d_a, dims.d_b), 0.5, self.tolerances.support))

        reduced_value = float(np.real(np.vdot(w, -pair.log_delta_a @ w)))
        middle_value = float(np.real(np.vdot(w, neg_log_compressed @ w)))
        full_value = float(np.real(np.vdot(w, pulled_back @ w)))

        delta_norm = spectral_norm(delta)
        log_tol = self._scaled(self.tolerances.inequality,
                               delta_norm / max(compressed_eigenvalues[0], np.finfo(float).tiny),
                               spectral_norm(neg_log_delta))

        steps = [
            Certificate.equality('isometry', v.isometry_defect, self._scaled(self.tolerances.isometry, delta_norm)),
            Certificate.equality('bridge', v.bridge_defect, self._scaled(self.tolerances.isometry, delta_norm)),
            Certificate.inequality('key_inequality', min_eigenvalue(delta_a - compressed),
                                   self._scaled(self.tolerances.inequality, delta_norm)),
            Certificate.inequality('log_monotonicity', middle_value - reduced_value, log_tol,
                                   reduced=reduced_value, compressed=middle_value),
            Certificate.inequality('jensen', min_eigenvalue(pulled_back - neg_log_compressed), log_tol),
            Certificate.inequality('jensen_value', full_value - middle_value, log_tol, full=full_value),
        ]
        return steps, reduced_value, full_value

    def corrected_monotonicity(self,
                               rho: Any,
                               sigma: Any,
                               dims: BipartiteDims,
                               eps_schedule: Optional[Sequence[float]] = None) -> Certificate:
        """
        Certify S(Tr_b rho || Tr_b sigma) <= S(rho || sigma) along the Petz route

        Positive-definite inputs run the chain directly. Otherwise the chain is
        certified for every eps on (X + eps I)/(1 + eps d) and both end values are
        required to converge to the support-based entropies (or to diverge
        together with a +inf support-based value).

        Returns:
            Chain certificate with details 'regularized', 'eps_schedule',
            'full_entropy', 'reduced_entropy' and 'gap'
        """
        rho_state = self._as_density(rho, "rho")
        sigma_state = self._as_density(sigma, "sigma")
        self._validate_dims(rho_state.matrix, dims, "rho")
        self._validate_dims(sigma_state.matrix, dims, "sigma")

        full = self.relative_entropy(rho_state, sigma_state)
        reduced = self.relative_entropy(self.density(self.partial_trace_b(rho_state, dims)),
                                        self.density(self.partial_trace_b(sigma_state, dims)))
        gap = entropy_difference(full, reduced)
        logger.info(f"Petz chain d_a={dims.d_a}, d_b={dims.d_b}: S={full}, S_a={reduced}")

        if self.is_positive_definite(rho_state.matrix) and self.is_positive_definite(sigma_state.matrix):
            pair = self.build_modular_pair(rho_state, sigma_state, dims)
            steps, reduced_value, full_value = self._petz_chain_steps(pair)
            steps.append(Certificate.equality('reduced_identity', abs(reduced_value - reduced.value),
                                              self._scaled(self.tolerances.agreement, spectral_norm(pair.delta_a.mat))))
            steps.append(Certificate.equality('full_identity', abs(full_value - full.value),
                                              self._scaled(self.tolerances.agreement, spectral_norm(pair.delta_ab.mat))))
            steps.append(Certificate.inequality('monotonicity', gap, self.tolerances.dpi))
            return Certificate.chain('petz_chain', steps, regularized=False, full_entropy=full.to_json(),
                                     reduced_entropy=reduced.to_json(), gap=gap)

        epsilons = self._validate_schedule(eps_schedule or self.schedules.eps_schedule, "eps_schedule")
        steps: List[Certificate] = []
        full_values, reduced_values = [], []
        for eps in epsilons:
            pair = self.build_modular_pair(rho_state, sigma_state, dims, eps=eps)
            chain_steps, reduced_value, full_value = self._petz_chain_steps(pair)
            steps.append(Certificate.chain(f'eps={eps:.1e}', chain_steps, eps=eps))
            full_values.append(full_value)
            reduced_values.append(reduced_value)

        steps.append(self._limit_certificate('full_limit', epsilons, full_values, full))
        steps.append(self._limit_certificate('reduced_limit', epsilons, reduced_values, reduced))
        steps.append(Certificate.inequality('monotonicity', gap, self.tolerances.dpi))

        certificate = Certificate.chain('petz_chain', steps, regularized=True, eps_schedule=epsilons,
                                        full_entropy=full.to_json(), reduced_entropy=reduced.to_json(), gap=gap,
                                        full_values=full_values, reduced_values=reduced_values)
        if not certificate.holds:
            logger.warning(f"Regularized Petz chain failed at {[s.check for s in certificate.failed_steps()]}")
        return certificate

    def _limit_certificate(self, name: str, epsilons: List[float], values: List[float], target) -> Certificate:
        """
        Convergence of a regularized sequence to its support-based value

        Finite targets need contracting tail increments and agreement within
        regularized_agreement * (1 + |S|); a +inf target needs detected divergence.
        """
        alpha = divergence_slope(epsilons, values, self.schedules.divergence_window)
        if not target.is_finite:
            threshold = divergence_threshold(values, self.schedules.divergence_window,
                                             self.tolerances.divergence_slope, self.tolerances.regularized_agreement)
            return Certificate.inequality(name, alpha - threshold, 0.0,
                                          divergence_coefficient=alpha, threshold=threshold, target='+inf')

        increments = np.abs(np.diff(values))[-(self.schedules.divergence_window - 1):]
        contracting = all(later <= earlier + self.tolerances.regularized_agreement
                          for earlier, later in zip(increments, increments[1:]))
        discrepancy = abs(values[-1] - target.value)
        certificate = Certificate.equality(name, discrepancy,
                                           self.tolerances.regularized_agreement * (1.0 + abs(target.value)),
                                           limit=values[-1], target=target.value, contracting=contracting)
        if not contracting:
            return certificate.model_copy(update={'holds': False})
        return certificate

    def support_inclusion_after_trace(self, rho: Any, sigma: Any, dims: BipartiteDims) -> Certificate:
        """
        supp(rho) in supp(sigma) implies supp(Tr_b rho) in supp(Tr_b sigma)

        Replays the kernel argument on Pi = P + Q with P, Pi the support
        projectors of rho, sigma and Q = Pi - P.

        Raises:
            PreconditionError: If supp(rho) is not contained in supp(sigma)
        """
        rho_state = self._as_density(rho, "rho")
        sigma_state = self._as_density(sigma, "sigma")
        self._validate_dims(rho_state.matrix, dims, "rho")
        if not self.support_contained(rho_state, sigma_state):
            self._fail(PreconditionError, "support_inclusion_after_trace requires supp(rho) within supp(sigma)")

        p = support_projector_matrix(rho_state.matrix, self.tolerances.support)
        pi = support_projector_matrix(sigma_state.matrix, self.tolerances.support)
        q = hermitize(pi - p)

        lemma = self.check_kernel_lemma(partial_trace(p, dims.d_a, dims.d_b), partial_trace(q, dims.d_a, dims.d_b))
        overlap = self.support_overlap(self.partial_trace_b(rho_state, dims), self.partial_trace_b(sigma_state, dims))
        inclusion = Certificate.equality('reduced_support_inclusion', overlap, self.tolerances.support_overlap)
        projector_defect = float(np.linalg.norm(q @ q - q))
        return Certificate.chain('support_inclusion_after_trace', [
            Certificate.equality('complement_projector', projector_defect, self.tolerances.support_overlap),
            lemma,
            inclusion
        ])

    def check_kernel_lemma(self, first: Any, second: Any) -> Certificate:
        """
        ker(T1 + T2) = ker(T1) cap ker(T2) for PSD T1, T2

        Raises:
            OrderError: If an input is not PSD
        """
        t1 = self._as_hermitian(first, "T1").matrix
        t2 = self._as_hermitian(second, "T2").matrix
        self._validate_same_dim(t1, t2, "T1 and T2")
        for name, t in (("T1", t1), ("T2", t2)):
            eigenvalues = np.linalg.eigvalsh(t)
            if eigenvalues[0] < -support_threshold(eigenvalues, self.tolerances.support):
                self._fail(OrderError, f"{name} must be PSD; minimum eigenvalue {eigenvalues[0]:.3e}")

        identity = np.eye(t1.shape[0])
        kernel_sum = identity - support_projector_matrix(t1 + t2, self.tolerances.support)
        supports = (support_projector_matrix(t1, self.tolerances.support)
                    + support_projector_matrix(t2, self.tolerances.support))
        intersection = identity - support_projector_matrix(supports, self.tolerances.support)
        return Certificate.equality('kernel_lemma', float(np.linalg.norm(kernel_sum - intersection)),
                                    self.tolerances.support_overlap,
                                    kernel_dim=int(round(np.trace(kernel_sum).real)))

    def _petz_map(self, sigma_m: np.ndarray, channel: QuantumChannel, matrix: np.ndarray) -> np.ndarray:
        """sigma^{1/2} C†(C(sigma)^{-1/2} X C(sigma)^{-1/2}) sigma^{1/2}"""
        image = self._positive_definite(hermitize(channel.map(sigma_m)), "C(sigma)")
        inverse_root = psd_power(image, -0.5, self.tolerances.support)
        root = psd_power(sigma_m, 0.5, self.tolerances.support)
        return root @ channel.adjoint_map(inverse_root @ matrix @ inverse_root) @ root

    def petz_recovery(self, sigma: Any, channel: QuantumChannel, rho: Any) -> DensityOperator:
        """
        Petz recovery map of C anchored at sigma, applied to rho

        Raises:
            SingularOperatorError: If sigma or C(sigma) is singular
        """
        sigma_m = self._positive_definite(self._as_density(sigma, "sigma").matrix, "sigma")
        rho_state = self._as_density(rho, "rho")
        if rho_state.dim != channel.d_out:
            self._fail(DimensionError, f"State dimension {rho_state.dim} does not match channel output {channel.d_out}")
        return self.density(hermitize(self._petz_map(sigma_m, channel, rho_state.matrix)))

    def check_petz_recovery(self, sigma: Any, channel: QuantumChannel, seed: SeedLike = None) -> Certificate:
        """Recovery identity P(C(sigma)) = sigma and trace preservation on a random state"""
        sigma_state = self._as_density(sigma, "sigma")
        image = self.apply_channel(channel, sigma_state)
        recovered = self.petz_recovery(sigma_state, channel, image)
        identity = float(np.linalg.norm(recovered.matrix - sigma_state.matrix))

        probe = self.random_density(channel.d_out, seed=self._rng(seed))
        trace_defect = abs(float(np.trace(self._petz_map(sigma_state.matrix, channel, probe.matrix)).real) - 1.0)
        return Certificate.chain('petz_recovery', [
            Certificate.equality('recovery_identity', identity, self.tolerances.recovery),
            Certificate.equality('trace_preservation', trace_defect, self.tolerances.recovery),
        ])

    def check_petz_factorization(self, sigma: Any, dims: BipartiteDims) -> Certificate:
        """
        V_sigma = L_{sigma^{-1/2}} o P_{sigma,Tr_b} o L^a_{Tr_b(sigma)^{1/2}}

        Compared on every matrix unit of B(H_a).
        """
        sigma_m = self._positive_definite(self._as_density(sigma, "sigma").matrix, "sigma")
        self._validate_dims(sigma_m, dims, "sigma")
        v = self.build_v_rho(sigma_m, dims)
        trace_channel = self.partial_trace_channel(dims)
        inverse_root = psd_power(sigma_m, -0.5, self.tolerances.support)
        omega_root = psd_power(partial_trace(sigma_m, dims.d_a, dims.d_b), 0.5, self.tolerances.support)

        factored = Superoperator.from_map(
            lambda x: inverse_root @ self._petz_map(sigma_m, trace_channel, omega_root @ x), dims.d_a, dims.d_ab
        )
        defect = float(np.max(np.linalg.norm(factored.mat - v.mat, axis=0)))
        return Certificate.equality('petz_factorization', defect,
                                    self._scaled(self.tolerances.recovery, spectral_norm(inverse_root)))

    def fidelity(self, rho: Any, tau: Any) -> float:
        """F(rho, tau) = Tr sqrt(sqrt(rho) tau sqrt(rho))"""
        rho_m = self._as_hermitian(rho, "rho").matrix
        tau_m = self._as_hermitian(tau, "tau").matrix
        self._validate_same_dim(rho_m, tau_m, "rho and tau")
        root = psd_power(rho_m, 0.5, self.tolerances.support)
        inner = psd_power(hermitize(root @ tau_m @ root), 0.5, self.tolerances.support)
        return float(np.trace(inner).real)

    def fawzi_renner_check(self, rho: Any, sigma: Any, channel: QuantumChannel) -> Certificate:
        """
        S(rho||sigma) - S(C(rho)||C(sigma)) >= -2 log F(rho, P(C(rho)))

        P is the Petz recovery map of C anchored at sigma.

        Raises:
            InfiniteBranchError: If either relative entropy is infinite
            SingularOperatorError: If sigma or C(sigma) is singular
        """
        rho_state = self._as_density(rho, "rho")
        sigma_state = self._as_density(sigma, "sigma")
        rho_out = self.apply_channel(channel, rho_state)
        sigma_out = self.apply_channel(channel, sigma_state)

        before = self.relative_entropy(rho_state, sigma_state)
        after = self.relative_entropy(rho_out, sigma_out)
        if not (before.is_finite and after.is_finite):
            self._fail(InfiniteBranchError, "Fidelity bound needs finite relative entropies on both sides")

        recovered = self.petz_recovery(sigma_state, channel, rho_out)
        fid = self.fidelity(rho_state, recovered)
        fid_reverse = self.fidelity(recovered, rho_state)
        bound = -2.0 * math.log(max(min(fid, 1.0), np.finfo(float).tiny))
        loss = before.value - after.value

        return Certificate.chain('fawzi_renner', [
            Certificate.equality('fidelity_symmetry', abs(fid - fid_reverse), self.tolerances.fidelity_symmetry),
            Certificate.inequality('fidelity_bound', loss - bound, self.tolerances.fawzi_renner,
                                   entropy_loss=loss, bound=bound, fidelity=fid),
        ], entropy_loss=loss, bound=bound, fidelity=fid)
