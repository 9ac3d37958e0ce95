"""
Qrel Uhlmann Tools

This module provides positive sesquilinear forms on operator spaces (stored as
Gram matrices over the matrix-unit basis), compatible representations,
interpolations gamma^t with f(x, y) = x^(1-t) y^t, the geometric mean and its
extremal property, pull-backs, the relative-entropy form and the monotonicity
chain that needs no invertibility.

Matrix units are ordered as in column stacking: E_ij has index i + j * d, so a
form's Gram matrix is directly comparable with superoperator matrices.
"""

import csv
import io
import logging
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from .qrel_base import (
    BasisError, Certificate, DegenerateFormError, DimensionError, ExtendedReal, OrderError,
    PreconditionError, SeedLike, matrix_to_json
)
from .qrel_tools_channels import BipartiteDims, partial_trace
from .qrel_tools_entropy import divergence_slope, divergence_threshold, entropy_difference
from .qrel_tools_linalg import dagger, eigh, hermitize, min_eigenvalue, psd_power, spectral_norm, support_threshold
from .qrel_tools_petz import Superoperator, left_multiplication, right_multiplication, vec

# Configure logging
logger = logging.getLogger(__name__)


class PositiveForm(BaseModel):
    """Positive sesquilinear form alpha(v, w) = v† G w"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    gram: np.ndarray
    psd_defect: float = 0.0
    basis: str = 'matrix-units'

    @property
    def space_dim(self) -> int:
        return int(self.gram.shape[0])

    def __call__(self, v: np.ndarray, w: np.ndarray) -> complex:
        return complex(np.vdot(v, self.gram @ w))

    def to_json(self) -> Dict[str, Any]:
        data = matrix_to_json(self.gram)
        data['basis'] = self.basis
        data['space_dim'] = self.space_dim
        return data


class FormRepresentation(BaseModel):
    """(H, h, A) with alpha(v, w) = <h v, A h w>"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    h: np.ndarray
    a: np.ndarray
    reproduction_defect: float

    @property
    def target_dim(self) -> int:
        return int(self.h.shape[0])


class CompatiblePair(BaseModel):
    """Representations of alpha and beta sharing h, with [A, B] = 0 and A + B = I"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    rep_alpha: FormRepresentation
    rep_beta: FormRepresentation
    commutator_norm: float
    partition_defect: float

    @property
    def h(self) -> np.ndarray:
        return self.rep_alpha.h


class EntropyFormResult(BaseModel):
    """Difference quotients (gamma^t(A, B) - rho_L(A, B)) / t along a schedule"""

    ts: List[float]
    quotients: List[float]
    running_inf: List[float]
    richardson: float
    slope: float
    divergent: bool
    monotone: bool
    imaginary: float = 0.0
    value: ExtendedReal

    @property
    def branch(self) -> str:
        return 'infinite' if self.divergent else 'finite'

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator='\n')
        writer.writerow(['t', 'quotient', 'running_inf'])
        for row in zip(self.ts, self.quotients, self.running_inf):
            writer.writerow([repr(value) for value in row])
        return buffer.getvalue()


def operator_basis(dim: int) -> np.ndarray:
    """Matrix units E_ij stacked as basis[i + j * dim]"""
    basis = np.zeros((dim * dim, dim, dim), dtype=complex)
    for j in range(dim):
        for i in range(dim):
            basis[i + j * dim, i, j] = 1.0
    return basis


def interpolation_weights(a: np.ndarray, t: float) -> np.ndarray:
    """a^(1-t) (1-a)^t with 0^0 = 1 and 0^s = 0 for s > 0"""
    return np.power(a, 1.0 - t) * np.power(1.0 - a, t)


class UhlmannMixin:
    """Mixin class for the sesquilinear-form route"""

    def positive_form(self, gram: Any) -> PositiveForm:
        """
        Certify a Gram matrix as a positive form

        Raises:
            OrderError: If the Gram matrix is not PSD within tau_support
        """
        op = self._as_hermitian(gram, "gram")
        eigenvalues = np.linalg.eigvalsh(op.matrix)
        if eigenvalues.size and eigenvalues[0] < -support_threshold(eigenvalues, self.tolerances.support):
            self._fail(OrderError, f"Form is not positive: minimum eigenvalue {eigenvalues[0]:.3e}")
        defect = max(0.0, -float(eigenvalues[0])) if eigenvalues.size else 0.0
        return PositiveForm(gram=np.array(op.matrix), psd_defect=defect)

    def _as_form(self, value: Any, name: str = "form") -> PositiveForm:
        if isinstance(value, PositiveForm):
            return value
        return self.positive_form(value)

    def operator_basis(self, dim: int) -> np.ndarray:
        return operator_basis(dim)

    def _validate_basis(self, basis: np.ndarray, dim: int) -> np.ndarray:
        """
        Raises:
            BasisError: If the basis is not a Hilbert-Schmidt orthonormal basis of B(C^dim)
        """
        basis = np.asarray(basis, dtype=complex)
        if basis.shape != (dim * dim, dim, dim):
            self._fail(BasisError, f"Basis must have shape {(dim * dim, dim, dim)}, got {basis.shape}")
        columns = basis.transpose(0, 2, 1).reshape(dim * dim, -1).T
        defect = float(np.linalg.norm(dagger(columns) @ columns - np.eye(dim * dim)))
        if defect > self.tolerances.orthonormality:
            self._fail(BasisError, f"Basis is not orthonormal: defect {defect:.3e}")
        return basis

    def form_from_operator_pair(self,
                                state: Any,
                                side: Literal['left', 'right'],
                                basis: Optional[np.ndarray] = None) -> PositiveForm:
        """
        rho_L(A, B) = Tr(A† rho B) or sigma_R(A, B) = Tr(sigma A† B)

        Args:
            state: Density operator
            side: 'left' for rho_L, 'right' for sigma_R
            basis: Orthonormal operator basis, shape (d^2, d, d); matrix units by default

        Returns:
            PositiveForm; in the matrix-unit basis its Gram matrix is L_rho (resp. R_sigma)

        Raises:
            BasisError: If the basis is not orthonormal
        """
        rho = self._as_density(state, "state").matrix
        dim = rho.shape[0]
        basis = operator_basis(dim) if basis is None else self._validate_basis(basis, dim)

        if side == 'left':
            acted = np.einsum('am,lmb->lab', rho, basis)
            superoperator = left_multiplication(rho)
        elif side == 'right':
            acted = np.einsum('lam,mb->lab', basis, rho)
            superoperator = right_multiplication(rho)
        else:
            self._fail(PreconditionError, f"side must be 'left' or 'right', got {side!r}")
        gram = np.einsum('kab,lab->kl', basis.conj(), acted)

        columns = basis.transpose(0, 2, 1).reshape(dim * dim, -1).T
        duality = float(np.linalg.norm(gram - dagger(columns) @ superoperator @ columns))
        if duality > self.tolerances.hermitian * (1.0 + float(np.linalg.norm(gram))):
            logger.warning(f"Form/superoperator duality defect {duality:.3e}")
        return self.positive_form(hermitize(gram))

    def build_compatible_pair(self, alpha: Any, beta: Any, seed: SeedLike = None) -> CompatiblePair:
        """
        Quotient construction of compatible representations

        With G = G_alpha + G_beta restricted to its support S, W = G|_S^(1/2),
        h = W S†, A = W^-1 S† G_alpha S W^-1 and B = I - A. A seed applies a
        random unitary rotation of the quotient space, giving another
        representation of the same pair.

        Raises:
            DimensionError: If the forms live on different spaces
            DegenerateFormError: If alpha + beta = 0
        """
        form_a = self._as_form(alpha, "alpha")
        form_b = self._as_form(beta, "beta")
        if form_a.space_dim != form_b.space_dim:
            self._fail(DimensionError, f"Forms act on spaces of dimension {form_a.space_dim} and {form_b.space_dim}")

        total = form_a.gram + form_b.gram
        eigenvalues, eigenvectors = eigh(total)
        keep = eigenvalues > support_threshold(eigenvalues, self.tolerances.support)
        if not np.any(keep):
            self._fail(DegenerateFormError, "alpha + beta is the zero form; the quotient space is empty")

        support = eigenvectors[:, keep]
        roots = np.sqrt(eigenvalues[keep])
        h = roots[:, None] * dagger(support)
        a = hermitize((dagger(support) @ form_a.gram @ support) / np.outer(roots, roots))
        if seed is not None:
            rotation = self.random_unitary(len(roots), seed)
            h = rotation @ h
            a = hermitize(rotation @ a @ dagger(rotation))
        b = np.eye(len(roots)) - a

        scale = 1.0 + float(np.linalg.norm(total))
        rep_alpha = FormRepresentation(h=h, a=a, reproduction_defect=float(
            np.linalg.norm(dagger(h) @ a @ h - form_a.gram)) / scale)
        rep_beta = FormRepresentation(h=h, a=b, reproduction_defect=float(
            np.linalg.norm(dagger(h) @ b @ h - form_b.gram)) / scale)
        logger.debug(f"Compatible pair: space {form_a.space_dim} -> quotient {len(roots)}")

        return CompatiblePair(
            rep_alpha=rep_alpha,
            rep_beta=rep_beta,
            commutator_norm=float(np.linalg.norm(a @ b - b @ a)),
            partition_defect=float(np.linalg.norm(a + b - np.eye(len(roots))))
        )

    def certify_compatible_pair(self, pair: CompatiblePair) -> Certificate:
        tol = self.tolerances.form
        return Certificate.chain('compatible_pair', [
            Certificate.equality('commutator', pair.commutator_norm, tol),
            Certificate.equality('partition', pair.partition_defect, tol),
            Certificate.equality('reproduce_alpha', pair.rep_alpha.reproduction_defect, tol),
            Certificate.equality('reproduce_beta', pair.rep_beta.reproduction_defect, tol),
        ], target_dim=pair.rep_alpha.target_dim)

    def _pair_spectrum(self, pair: CompatiblePair) -> Tuple[np.ndarray, np.ndarray]:
        """Eigenvalues of A clamped to {0, 1} within tau_support, and U† h"""
        a, u = eigh(pair.rep_alpha.a)
        tau = self.tolerances.support
        a = np.clip(a, 0.0, 1.0)
        a[a < tau] = 0.0
        a[a > 1.0 - tau] = 1.0
        return a, dagger(u) @ pair.h

    def _interpolation_gram(self, pair: CompatiblePair, t: float) -> np.ndarray:
        a, m = self._pair_spectrum(pair)
        return hermitize(dagger(m) @ (interpolation_weights(a, t)[:, None] * m))

    def interpolate(self, alpha: Any, beta: Any, t: float, seed: SeedLike = None) -> PositiveForm:
        """
        gamma^t_{alpha -> beta}(v, w) = <h v, A^(1-t) B^t h w>

        gamma^0 = alpha and gamma^1 = beta on the joint support.

        Raises:
            ScheduleError: If t is outside [0, 1]
        """
        self._validate_unit_interval(t, "t")
        pair = self.build_compatible_pair(alpha, beta, seed)
        return self.positive_form(self._interpolation_gram(pair, t))

    def interpolate_direct(self, rho: Any, sigma: Any, t: float) -> PositiveForm:
        """gamma^t_{rho_L -> sigma_R} from L_rho^(1-t) R_sigma^t = (sigma^t)^T (x) rho^(1-t)"""
        self._validate_unit_interval(t, "t")
        rho_m = self._as_density(rho, "rho").matrix
        sigma_m = self._as_density(sigma, "sigma").matrix
        self._validate_same_dim(rho_m, sigma_m, "rho and sigma")
        gram = np.kron(psd_power(sigma_m, t, self.tolerances.support).T,
                       psd_power(rho_m, 1.0 - t, self.tolerances.support))
        return self.positive_form(hermitize(gram))

    def check_representation_independence(self,
                                          alpha: Any,
                                          beta: Any,
                                          t: float,
                                          rep_count: int = 3,
                                          seed: SeedLike = None) -> float:
        """
        Max pairwise Gram discrepancy of gamma^t over rotated representations

        Raises:
            PreconditionError: If rep_count < 2
        """
        if rep_count < 2:
            self._fail(PreconditionError, f"rep_count must be at least 2, got {rep_count}")
        self._validate_unit_interval(t, "t")
        rng = self._rng(seed)
        grams = [self._interpolation_gram(self.build_compatible_pair(alpha, beta), t)]
        for _ in range(rep_count - 1):
            grams.append(self._interpolation_gram(self.build_compatible_pair(alpha, beta, rng), t))
        worst = 0.0
        for i, first in enumerate(grams):
            for second in grams[i + 1:]:
                worst = max(worst, float(np.linalg.norm(first - second)))
        return worst

    def interpolation_of_interpolations(self,
                                        alpha: Any,
                                        beta: Any,
                                        t1: float,
                                        t2: float,
                                        t: float) -> Certificate:
        """gamma^t between gamma^t1 and gamma^t2 equals gamma^(t1 (1-t) + t2 t)"""
        for value, name in ((t1, "t1"), (t2, "t2"), (t, "t")):
            self._validate_unit_interval(value, name)
        pair = self.build_compatible_pair(alpha, beta)
        first = self.positive_form(self._interpolation_gram(pair, t1))
        second = self.positive_form(self._interpolation_gram(pair, t2))
        composed = self._interpolation_gram(self.build_compatible_pair(first, second), t)
        combined = t1 * (1.0 - t) + t2 * t
        direct = self._interpolation_gram(pair, combined)
        return Certificate.equality('interpolation_composition', float(np.linalg.norm(composed - direct)),
                                    self.tolerances.representation, combined_t=combined)

    def geometric_mean(self, alpha: Any, beta: Any) -> PositiveForm:
        """sqrt(alpha beta) = gamma^(1/2)"""
        return self.interpolate(alpha, beta, 0.5)

    def _domination_tolerance(self, alpha: PositiveForm, beta: PositiveForm) -> float:
        return self.tolerances.form * (1.0 + spectral_norm(alpha.gram)) * (1.0 + spectral_norm(beta.gram))

    def check_domination(self, r: Any, alpha: Any, beta: Any, probes: int = 1000, seed: SeedLike = None) -> Certificate:
        """|r(v, w)|^2 <= alpha(v, v) beta(w, w) on random unit probe pairs"""
        form_r, form_a, form_b = self._as_form(r, "r"), self._as_form(alpha, "alpha"), self._as_form(beta, "beta")
        n = form_a.space_dim
        rng = self._rng(seed)
        v = rng.standard_normal((n, probes)) + 1j * rng.standard_normal((n, probes))
        w = rng.standard_normal((n, probes)) + 1j * rng.standard_normal((n, probes))
        v /= np.linalg.norm(v, axis=0)
        w /= np.linalg.norm(w, axis=0)

        cross = np.abs(np.einsum('ip,ip->p', v.conj(), form_r.gram @ w)) ** 2
        alpha_vv = np.einsum('ip,ip->p', v.conj(), form_a.gram @ v).real
        beta_ww = np.einsum('ip,ip->p', w.conj(), form_b.gram @ w).real
        return Certificate.inequality('domination', float(np.min(alpha_vv * beta_ww - cross)),
                                      self._domination_tolerance(form_a, form_b), probes=probes)

    def domination_norm(self, r: Any, alpha: Any, beta: Any, eps: Optional[float] = None) -> float:
        """
        ||(G_alpha + eps)^(-1/2) G_r (G_beta + eps)^(-1/2)||

        r is dominated by (alpha, beta) iff this stays <= 1 for every eps > 0.
        """
        form_r, form_a, form_b = self._as_form(r, "r"), self._as_form(alpha, "alpha"), self._as_form(beta, "beta")
        n = form_a.space_dim
        if eps is None:
            eps = self.tolerances.form * (1.0 + spectral_norm(form_a.gram) + spectral_norm(form_b.gram))
        left = psd_power(form_a.gram + eps * np.eye(n), -0.5, 0.0)
        right = psd_power(form_b.gram + eps * np.eye(n), -0.5, 0.0)
        return spectral_norm(left @ form_r.gram @ right)

    def check_geometric_mean_maximality(self,
                                        alpha: Any,
                                        beta: Any,
                                        candidate_count: int = 100,
                                        seed: SeedLike = None) -> Certificate:
        """
        Every dominated positive form r satisfies r <= sqrt(alpha beta)

        Candidates are c * sqrt(alpha beta) with c in (0, 1], followed by
        randomly perturbed scalings kept only when the domination norm is <= 1.
        """
        form_a, form_b = self._as_form(alpha, "alpha"), self._as_form(beta, "beta")
        rng = self._rng(seed)
        pair = self.build_compatible_pair(form_a, form_b)
        mean = self._interpolation_gram(pair, 0.5)
        tol = self._domination_tolerance(form_a, form_b)

        candidates = [mean, 0.5 * mean]
        rejected = 0
        while len(candidates) < candidate_count:
            scale = rng.uniform(0.1, 1.0)
            if rng.random() < 0.5:
                candidates.append(scale * mean)
                continue
            r = pair.rep_alpha.target_dim
            g = rng.standard_normal((r, r)) + 1j * rng.standard_normal((r, r))
            bump = dagger(pair.h) @ (g @ dagger(g)) @ pair.h
            perturbed = hermitize(scale * mean + rng.uniform(0.0, 0.2) * (1.0 - scale) * bump
                                  / max(spectral_norm(bump), 1e-300) * spectral_norm(mean))
            if self.domination_norm(perturbed, form_a, form_b) <= 1.0:
                candidates.append(perturbed)
            else:
                rejected += 1
                if rejected > 20 * candidate_count:
                    break

        margin = min(min_eigenvalue(mean - candidate) for candidate in candidates)
        logger.debug(f"Geometric mean maximality: {len(candidates)} candidates, {rejected} rejected")
        return Certificate.inequality('geometric_mean_maximality', margin, tol,
                                      candidates=len(candidates), rejected=rejected)

    def _loewner_margin(self, lower: np.ndarray, upper: np.ndarray) -> Tuple[float, float]:
        return min_eigenvalue(upper - lower), self.tolerances.form * (1.0 + spectral_norm(upper))

    def check_interpolation_monotonicity(self,
                                         alpha_low: Any,
                                         alpha: Any,
                                         beta_low: Any,
                                         beta: Any,
                                         t_grid: Optional[Sequence[float]] = None) -> Certificate:
        """
        alpha' <= alpha and beta' <= beta imply gamma^t_{alpha'->beta'} <= gamma^t_{alpha->beta}

        Raises:
            PreconditionError: If alpha' <= alpha or beta' <= beta fails
        """
        forms = [self._as_form(x, name) for x, name in
                 ((alpha_low, "alpha'"), (alpha, "alpha"), (beta_low, "beta'"), (beta, "beta"))]
        for low, high, name in ((forms[0], forms[1], "alpha' <= alpha"), (forms[2], forms[3], "beta' <= beta")):
            margin, tol = self._loewner_margin(low.gram, high.gram)
            if margin < -tol:
                self._fail(PreconditionError, f"Precondition {name} fails: minimum eigenvalue {margin:.3e}")

        grid = list(t_grid) if t_grid is not None else self.schedules.t_grid
        lower_pair = self.build_compatible_pair(forms[0], forms[2])
        upper_pair = self.build_compatible_pair(forms[1], forms[3])
        steps = []
        for t in grid:
            margin, tol = self._loewner_margin(self._interpolation_gram(lower_pair, t),
                                               self._interpolation_gram(upper_pair, t))
            steps.append(Certificate.inequality(f't={t:g}', margin, tol, t=t))
        return Certificate.chain('interpolation_monotonicity', steps, t_grid=grid)

    def pullback_form(self, psi: Any, alpha: Any) -> PositiveForm:
        """
        psi* alpha (u, u') = alpha(psi u, psi u'), Gram Psi† G Psi

        Raises:
            DimensionError: If psi does not map into the space of alpha
        """
        form = self._as_form(alpha, "alpha")
        matrix = psi.mat if isinstance(psi, Superoperator) else self._as_matrix(psi, "psi")
        if matrix.shape[0] != form.space_dim:
            self._fail(DimensionError, f"psi has {matrix.shape[0]} output coordinates, form acts on {form.space_dim}")
        return self.positive_form(hermitize(dagger(matrix) @ form.gram @ matrix))

    def check_pullback_inequality(self,
                                  psi: Any,
                                  alpha: Any,
                                  beta: Any,
                                  t_grid: Optional[Sequence[float]] = None) -> Certificate:
        """psi* gamma^t_{alpha->beta} <= gamma^t_{psi* alpha -> psi* beta} on the grid"""
        form_a, form_b = self._as_form(alpha, "alpha"), self._as_form(beta, "beta")
        pulled_pair = self.build_compatible_pair(self.pullback_form(psi, form_a), self.pullback_form(psi, form_b))
        pair = self.build_compatible_pair(form_a, form_b)
        grid = list(t_grid) if t_grid is not None else self.schedules.t_grid

        steps = []
        for t in grid:
            pulled = self.pullback_form(psi, self._interpolation_gram(pair, t)).gram
            margin, tol = self._loewner_margin(pulled, self._interpolation_gram(pulled_pair, t))
            steps.append(Certificate.inequality(f't={t:g}', margin, tol, t=t))
        return Certificate.chain('pullback_inequality', steps, t_grid=grid)

    def _difference_quotients(self,
                              pair: CompatiblePair,
                              probe_a: np.ndarray,
                              probe_b: np.ndarray,
                              ts: Sequence[float]) -> np.ndarray:
        """(gamma^t - gamma^0)(A, B) / t, using expm1 on each eigenvalue of A"""
        a, m = self._pair_spectrum(pair)
        weights = np.conj(m @ probe_a) * (m @ probe_b) * a
        with np.errstate(divide='ignore'):
            log_ratio = np.where(a > 0.0, np.log(1.0 - a) - np.log(np.where(a > 0.0, a, 1.0)), 0.0)
        return np.array([np.sum(weights * np.expm1(t * log_ratio)) / t for t in ts])

    def entropy_form(self,
                     rho: Any,
                     sigma: Any,
                     probe_a: Any = None,
                     probe_b: Any = None,
                     t_schedule: Optional[Sequence[float]] = None) -> EntropyFormResult:
        """
        S_{rho||sigma}(A, B) = -liminf_{t->0+} (gamma^t(A, B) - rho_L(A, B)) / t

        gamma^t interpolates rho_L -> sigma_R. With the default identity probes
        the value is S(rho||sigma). Off-diagonal probes give a complex
        quotient; the real part is used and the last imaginary part reported.

        Returns:
            EntropyFormResult with the running infimum over schedule tails, a
            two-point Richardson extrapolation and the divergence coefficient

        Raises:
            ScheduleError: If the schedule is not strictly decreasing and positive
        """
        rho_state = self._as_density(rho, "rho")
        sigma_state = self._as_density(sigma, "sigma")
        self._validate_same_dim(rho_state.matrix, sigma_state.matrix, "rho and sigma")
        ts = self._validate_schedule(t_schedule or self.schedules.t_schedule, "t_schedule")
        dim = rho_state.dim
        identity = np.eye(dim)
        vec_a = vec(identity if probe_a is None else self._as_matrix(probe_a, "probe_A"))
        vec_b = vec(identity if probe_b is None else self._as_matrix(probe_b, "probe_B"))

        pair = self.build_compatible_pair(self.form_from_operator_pair(rho_state, 'left'),
                                          self.form_from_operator_pair(sigma_state, 'right'))
        complex_quotients = self._difference_quotients(pair, vec_a, vec_b, ts)
        quotients = [float(q) for q in complex_quotients.real]
        running_inf = [float(np.min(quotients[k:])) for k in range(len(quotients))]

        if len(ts) >= 2:
            t_prev, t_last = ts[-2], ts[-1]
            richardson = (quotients[-1] * t_prev - quotients[-2] * t_last) / (t_prev - t_last)
        else:
            richardson = quotients[-1]
        slope = divergence_slope(ts, [-q for q in quotients], self.schedules.divergence_window)
        divergent = slope > divergence_threshold([-q for q in quotients], self.schedules.divergence_window,
                                                 self.tolerances.divergence_slope,
                                                 self.tolerances.regularized_agreement)
        tol = self.tolerances.form / ts[-1]
        monotone = all(later <= earlier + tol for earlier, later in zip(quotients, quotients[1:]))
        value = ExtendedReal.plus_infinity() if divergent else ExtendedReal.finite(-richardson)
        logger.debug(f"Entropy form: last quotient {quotients[-1]:.10f}, extrapolated {-richardson:.10f}, "
                     f"divergence coefficient {slope:.3e}")

        return EntropyFormResult(
            ts=ts,
            quotients=quotients,
            running_inf=running_inf,
            richardson=float(richardson),
            slope=slope,
            divergent=divergent,
            monotone=monotone,
            imaginary=float(complex_quotients[-1].imag),
            value=value
        )

    def entropy_via_form(self, rho: Any, sigma: Any) -> ExtendedReal:
        return self.entropy_form(rho, sigma).value

    def partial_trace_adjoint_matrix(self, dims: BipartiteDims) -> np.ndarray:
        """Matrix of Tr_b†: X -> X (x) I_b in the matrix-unit bases"""
        identity_b = np.eye(dims.d_b)
        return Superoperator.from_map(lambda x: np.kron(x, identity_b), dims.d_a, dims.d_ab).mat

    def uhlmann_monotonicity(self,
                             rho: Any,
                             sigma: Any,
                             dims: BipartiteDims,
                             t_schedule: Optional[Sequence[float]] = None) -> Certificate:
        """
        Certify S(Tr_b rho || Tr_b sigma) <= S(rho || sigma) through forms

        With psi = Tr_b†, alpha = rho_L and beta = sigma_R, every t of the
        schedule certifies psi* gamma^t_{alpha->beta} <= gamma^t_{psi* alpha -> psi* beta}
        <= gamma^t_{(Tr_b rho)_L -> (Tr_b sigma)_R} and the resulting
        comparison at the identity probes. No regularization is used.

        Returns:
            Chain certificate with 'schwarz_alpha', 'schwarz_beta',
            'trace_identity', one chain per t and 'monotonicity'
        """
        rho_state = self._as_density(rho, "rho")
        sigma_state = self._as_density(sigma, "sigma")
        self._validate_dims(rho_state.matrix, dims, "rho")
        self._validate_dims(sigma_state.matrix, dims, "sigma")
        ts = self._validate_schedule(t_schedule or self.schedules.t_schedule, "t_schedule")
        logger.info(f"Uhlmann chain d_a={dims.d_a}, d_b={dims.d_b} over {len(ts)} values of t")

        rho_a = self.density(partial_trace(rho_state.matrix, dims.d_a, dims.d_b))
        sigma_a = self.density(partial_trace(sigma_state.matrix, dims.d_a, dims.d_b))
        alpha = self.form_from_operator_pair(rho_state, 'left')
        beta = self.form_from_operator_pair(sigma_state, 'right')
        alpha_a = self.form_from_operator_pair(rho_a, 'left')
        beta_a = self.form_from_operator_pair(sigma_a, 'right')

        psi = self.partial_trace_adjoint_matrix(dims)
        pulled_alpha = self.pullback_form(psi, alpha)
        pulled_beta = self.pullback_form(psi, beta)
        pair = self.build_compatible_pair(alpha, beta)
        pulled_pair = self.build_compatible_pair(pulled_alpha, pulled_beta)
        reduced_pair = self.build_compatible_pair(alpha_a, beta_a)

        id_ab, id_a = vec(np.eye(dims.d_ab)), vec(np.eye(dims.d_a))
        steps = [
            Certificate.inequality('schwarz_alpha', *self._loewner_margin(pulled_alpha.gram, alpha_a.gram)),
            Certificate.inequality('schwarz_beta', *self._loewner_margin(pulled_beta.gram, beta_a.gram)),
            Certificate.equality('trace_identity', abs(alpha(id_ab, id_ab) - alpha_a(id_a, id_a)),
                                 self.tolerances.form),
        ]

        for t in ts:
            full = self._interpolation_gram(pair, t)
            pulled = hermitize(dagger(psi) @ full @ psi)
            middle = self._interpolation_gram(pulled_pair, t)
            reduced = self._interpolation_gram(reduced_pair, t)
            value_full = float(np.vdot(id_ab, full @ id_ab).real)
            value_reduced = float(np.vdot(id_a, reduced @ id_a).real)
            steps.append(Certificate.chain(f't={t:g}', [
                Certificate.inequality('pullback', *self._loewner_margin(pulled, middle)),
                Certificate.inequality('interpolation_monotonicity', *self._loewner_margin(middle, reduced)),
                Certificate.inequality('probe_inequality', value_reduced - value_full, self.tolerances.form,
                                       full=value_full, reduced=value_reduced),
            ], t=t))

        full_entropy = self.entropy_form(rho_state, sigma_state, t_schedule=ts)
        reduced_entropy = self.entropy_form(rho_a, sigma_a, t_schedule=ts)
        gap = entropy_difference(full_entropy.value, reduced_entropy.value)
        steps.append(Certificate.inequality('monotonicity', gap, self.tolerances.dpi))

        certificate = Certificate.chain('uhlmann_chain', steps, regularized=False,
                                        full_entropy=full_entropy.value.to_json(),
                                        reduced_entropy=reduced_entropy.value.to_json(), gap=gap)
        if not certificate.holds:
            logger.warning(f"Uhlmann chain failed at {[s.check for s in certificate.failed_steps()]}")
        return certificate
