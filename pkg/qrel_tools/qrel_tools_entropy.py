"""
Qrel Relative Entropy Tools

This module provides the support-based and regularized relative entropy, the
unitary invariance and additivity checks, and the data-processing inequality
replayed through a Stinespring dilation.
"""

import logging
import math
from typing import Any, Dict, List, Literal, Optional, Sequence

import numpy as np
from pydantic import BaseModel

from .qrel_base import Certificate, DimensionError, ExtendedReal, PreconditionError
from .qrel_tools_channels import BipartiteDims, QuantumChannel
from .qrel_tools_linalg import dagger, eigh, hermitize, support_threshold

# Configure logging
logger = logging.getLogger(__name__)

MAX_PRODUCT_DIM = 64
ENTROPY_METHODS = ('support', 'regularized', 'modular', 'form')


class RelEntropyResult(BaseModel):
    """S(rho||sigma) with its branch tag"""

    value: ExtendedReal
    branch: Literal['finite', 'infinite']
    support_overlap: float = 0.0

    @property
    def is_finite(self) -> bool:
        return self.branch == 'finite'


class RegularizedRelEntropyResult(BaseModel):
    """Tr(rho_eps log rho_eps - rho_eps log sigma_eps) along a schedule"""

    epsilons: List[float]
    values: List[float]
    limit: float
    extrapolated: float
    slope: float
    threshold: float
    divergent: bool
    value: ExtendedReal

    @property
    def branch(self) -> str:
        return 'infinite' if self.divergent else 'finite'


class MethodComparison(BaseModel):
    """Cross-method relative entropy values; non-finite values are strings"""

    values: Dict[str, Any]
    spread: float
    tolerance: float
    agree: bool


def divergence_slope(parameters: Sequence[float], values: Sequence[float], window: int) -> float:
    """
    Coefficient alpha of values ~ -alpha * log(parameter) over the tail window

    A convergent sequence gives alpha close to 0.
    """
    window = max(2, min(window, len(values)))
    if len(values) < 2:
        return 0.0
    logs = np.log(np.asarray(parameters[-window:], dtype=float))
    slope = np.polyfit(logs, np.asarray(values[-window:], dtype=float), 1)[0]
    return float(-slope)


def divergence_threshold(values: Sequence[float], window: int, slope_tolerance: float, floor: float) -> float:
    """
    Coefficient above which a tail fitted by divergence_slope counts as divergent

    A tail whose last increment is at least half its first keeps growing like
    -alpha * log(parameter) and is held to `floor`. Any other tail is held to
    `slope_tolerance`.
    """
    window = max(2, min(window, len(values)))
    increments = np.abs(np.diff(np.asarray(values[-window:], dtype=float)))
    if len(increments) >= 2 and increments[-1] >= 0.5 * increments[0]:
        return min(floor, slope_tolerance)
    return slope_tolerance


def entropy_difference(larger: ExtendedReal, smaller: ExtendedReal) -> float:
    """larger - smaller on extended reals, +inf - anything = +inf, finite - +inf = -inf"""
    if larger.infinity > 0:
        return math.inf
    if smaller.infinity > 0:
        return -math.inf
    return larger.value - smaller.value


class EntropyMixin:
    """Mixin class for relative entropy operations"""

    def relative_entropy_support(self, rho: Any, sigma: Any) -> RelEntropyResult:
        """
        Support-based relative entropy

        Evaluated in the sigma eigenbasis as
        sum_j lambda_j (log lambda_j - sum_k log mu_k |<x_j, y_k>|^2)
        over the positive spectra; +inf unless supp(rho) lies in supp(sigma).

        Args:
            rho: Density operator
            sigma: Density operator of the same dimension

        Returns:
            RelEntropyResult

        Raises:
            InvalidStateError: If an input is not a state
            DimensionError: If dimensions differ
        """
        rho_state = self._as_density(rho, "rho")
        sigma_state = self._as_density(sigma, "sigma")
        self._validate_same_dim(rho_state.matrix, sigma_state.matrix, "rho and sigma")

        overlap = self.support_overlap(rho_state, sigma_state)
        if overlap > self.tolerances.support_overlap:
            logger.debug(f"Support violation: ||(I-P_sigma)P_rho|| = {overlap:.3e}")
            return RelEntropyResult(value=ExtendedReal.plus_infinity(), branch='infinite', support_overlap=overlap)

        lam, x = eigh(rho_state.matrix)
        mu, y = eigh(sigma_state.matrix)
        rho_support = lam > support_threshold(lam, self.tolerances.support)
        sigma_support = mu > support_threshold(mu, self.tolerances.support)

        overlaps = np.abs(dagger(x[:, rho_support]) @ y[:, sigma_support]) ** 2
        lam_pos = lam[rho_support]
        cross = overlaps @ np.log(mu[sigma_support])
        value = float(np.sum(lam_pos * (np.log(lam_pos) - cross)))

        if value < -self.tolerances.klein:
            logger.warning(f"Klein inequality violated: S = {value:.3e}")
        return RelEntropyResult(value=ExtendedReal.finite(value), branch='finite', support_overlap=overlap)

    def relative_entropy(self, rho: Any, sigma: Any) -> ExtendedReal:
        """Shorthand for the support-based value"""
        return self.relative_entropy_support(rho, sigma).value

    def relative_entropy_regularized(self,
                                     rho: Any,
                                     sigma: Any,
                                     eps_schedule: Optional[Sequence[float]] = None) -> RegularizedRelEntropyResult:
        """
        Regularized relative entropy with divergence detection

        Each term uses the strictly positive rho + eps I and sigma + eps I. The
        tail is fitted against log(eps) and the fitted coefficient is close to
        the weight Tr(rho Pi_0) that rho puts on the kernel of sigma. A coefficient
        above tolerances.divergence_slope flags the +inf branch. A tail that keeps
        growing by a constant step per decade is flagged from
        tolerances.regularized_agreement on, so kernel weight down to that level
        is detected. Smaller kernel weight reads as finite here while the
        support-based value is already +inf.

        Raises:
            ScheduleError: If the schedule is not strictly decreasing and positive
        """
        rho_state = self._as_density(rho, "rho")
        sigma_state = self._as_density(sigma, "sigma")
        self._validate_same_dim(rho_state.matrix, sigma_state.matrix, "rho and sigma")
        epsilons = self._validate_schedule(eps_schedule or self.schedules.eps_schedule, "eps_schedule")

        lam, x = eigh(rho_state.matrix)
        mu, y = eigh(sigma_state.matrix)
        lam, mu = np.maximum(lam, 0.0), np.maximum(mu, 0.0)
        overlaps = np.abs(dagger(x) @ y) ** 2

        values = []
        for epsilon in epsilons:
            shifted_rho, shifted_sigma = lam + epsilon, mu + epsilon
            values.append(float(
                np.sum(shifted_rho * np.log(shifted_rho)) - shifted_rho @ overlaps @ np.log(shifted_sigma)
            ))

        alpha = divergence_slope(epsilons, values, self.schedules.divergence_window)
        threshold = divergence_threshold(values, self.schedules.divergence_window,
                                         self.tolerances.divergence_slope, self.tolerances.regularized_agreement)
        divergent = alpha > threshold
        value = ExtendedReal.plus_infinity() if divergent else ExtendedReal.finite(values[-1])
        logger.debug(f"Regularized relative entropy tail {values[-1]:.10f}, divergence coefficient {alpha:.3e} "
                     f"(threshold {threshold:.1e})")

        # linear in eps for full-rank pairs
        extrapolated = values[-1]
        if len(values) >= 2:
            e_prev, e_last = epsilons[-2], epsilons[-1]
            extrapolated = (values[-1] * e_prev - values[-2] * e_last) / (e_prev - e_last)

        return RegularizedRelEntropyResult(
            epsilons=epsilons,
            values=values,
            limit=values[-1],
            extrapolated=float(extrapolated),
            slope=alpha,
            threshold=threshold,
            divergent=divergent,
            value=value
        )

    def check_unitary_invariance(self, rho: Any, sigma: Any, unitary: Any) -> float:
        """
        |S(U rho U† || U sigma U†) - S(rho || sigma)|

        Returns:
            The defect; 0 when both sides are +inf and inf on a branch mismatch

        Raises:
            PreconditionError: If U is not unitary within tolerances.unitary
        """
        rho_state = self._as_density(rho, "rho")
        sigma_state = self._as_density(sigma, "sigma")
        u = self._as_matrix(unitary, "U")
        if u.shape != rho_state.matrix.shape:
            self._fail(DimensionError, f"Unitary shape {u.shape} does not match state shape {rho_state.matrix.shape}")
        unitary_defect = float(np.linalg.norm(dagger(u) @ u - np.eye(u.shape[0])))
        if unitary_defect > self.tolerances.unitary:
            self._fail(PreconditionError, f"Matrix is not unitary: defect {unitary_defect:.3e}")

        before = self.relative_entropy(rho_state, sigma_state)
        after = self.relative_entropy(
            self.density(hermitize(u @ rho_state.matrix @ dagger(u))),
            self.density(hermitize(u @ sigma_state.matrix @ dagger(u)))
        )
        return self._extended_defect(before, after)

    def _extended_defect(self, first: ExtendedReal, second: ExtendedReal) -> float:
        if first.is_finite and second.is_finite:
            return abs(first.value - second.value)
        return 0.0 if first.infinity == second.infinity else math.inf

    def check_additivity(self, rho1: Any, sigma1: Any, rho2: Any, sigma2: Any) -> float:
        """
        |S(rho1 (x) rho2 || sigma1 (x) sigma2) - S(rho1||sigma1) - S(rho2||sigma2)|

        Raises:
            DimensionError: If the product dimension exceeds the supported size
        """
        r1, s1 = self._as_density(rho1, "rho1"), self._as_density(sigma1, "sigma1")
        r2, s2 = self._as_density(rho2, "rho2"), self._as_density(sigma2, "sigma2")
        if r1.dim * r2.dim > MAX_PRODUCT_DIM:
            self._fail(DimensionError, f"Product dimension {r1.dim * r2.dim} exceeds {MAX_PRODUCT_DIM}")

        joint = self.relative_entropy(self.density(np.kron(r1.matrix, r2.matrix)),
                                      self.density(np.kron(s1.matrix, s2.matrix)))
        first, second = self.relative_entropy(r1, s1), self.relative_entropy(r2, s2)
        if first.is_finite and second.is_finite:
            return self._extended_defect(joint, ExtendedReal.finite(first.value + second.value))
        return 0.0 if joint.infinity > 0 else math.inf

    def dpi_via_stinespring(self, rho: Any, sigma: Any, channel: QuantumChannel) -> Certificate:
        """
        Data-processing inequality S(C(rho)||C(sigma)) <= S(rho||sigma)

        For a square channel the derivation is replayed step by step: dilate,
        append the environment state (additivity), conjugate by U (unitary
        invariance) and trace out the environment (partial-trace monotonicity).

        Returns:
            Chain certificate; the final 'dpi' step compares both sides directly
        """
        rho_state = self._as_density(rho, "rho")
        sigma_state = self._as_density(sigma, "sigma")
        logger.info(f"Certifying DPI for {channel.name or 'channel'} ({channel.d_in} -> {channel.d_out})")

        before = self.relative_entropy(rho_state, sigma_state)
        after = self.relative_entropy(self.apply_channel(channel, rho_state), self.apply_channel(channel, sigma_state))
        steps: List[Certificate] = []

        if channel.d_in == channel.d_out:
            dilation = self.stinespring_dilate(channel)
            env = dilation.env_state.matrix
            u = dilation.unitary
            steps.append(Certificate.equality('dilation', dilation.round_trip_defect, self.tolerances.dilation,
                                              env_dim=dilation.env_dim))

            rho_ext = self.density(np.kron(rho_state.matrix, env))
            sigma_ext = self.density(np.kron(sigma_state.matrix, env))
            extended = self.relative_entropy(rho_ext, sigma_ext)
            steps.append(Certificate.equality('additivity', self._extended_defect(extended, before),
                                              self.tolerances.invariance))

            rho_rot = self.density(hermitize(u @ rho_ext.matrix @ dagger(u)))
            sigma_rot = self.density(hermitize(u @ sigma_ext.matrix @ dagger(u)))
            rotated = self.relative_entropy(rho_rot, sigma_rot)
            steps.append(Certificate.equality('unitary_invariance', self._extended_defect(rotated, extended),
                                              self.tolerances.invariance))

            env_dims = BipartiteDims(d_a=channel.d_in, d_b=dilation.env_dim)
            traced = self.relative_entropy(self.density(self.partial_trace_b(rho_rot, env_dims)),
                                           self.density(self.partial_trace_b(sigma_rot, env_dims)))
            steps.append(Certificate.inequality('partial_trace_monotonicity', entropy_difference(rotated, traced),
                                                self.tolerances.dpi, reduced=traced.to_json(), joint=rotated.to_json()))

        steps.append(Certificate.inequality('dpi', entropy_difference(before, after), self.tolerances.dpi,
                                            input_entropy=before.to_json(), output_entropy=after.to_json()))
        certificate = Certificate.chain('dpi_via_stinespring', steps,
                                        input_entropy=before.to_json(), output_entropy=after.to_json(),
                                        replayed=channel.d_in == channel.d_out)
        if not certificate.holds:
            logger.warning(f"DPI certificate failed at steps {[s.check for s in certificate.failed_steps()]}")
        return certificate

    def compare_methods(self, rho: Any, sigma: Any, methods: Optional[Sequence[str]] = None) -> MethodComparison:
        """
        S(rho||sigma) by the support, regularized, modular and form methods

        Full-rank pairs use the eps-extrapolated regularized value and the
        agreement tolerance. Singular pairs compare against the
        regularized_agreement tolerance, and the modular method is reported as
        not applicable on a finite branch.

        Raises:
            PreconditionError: If a method name is unknown
        """
        methods = list(methods or ENTROPY_METHODS)
        unknown = [m for m in methods if m not in ENTROPY_METHODS]
        if unknown:
            self._fail(PreconditionError, f"Unknown entropy method(s): {unknown}")
        rho_state = self._as_density(rho, "rho")
        sigma_state = self._as_density(sigma, "sigma")

        support = self.relative_entropy(rho_state, sigma_state)
        full_rank = self.is_positive_definite(rho_state.matrix) and self.is_positive_definite(sigma_state.matrix)
        values: Dict[str, Any] = {}
        for method in methods:
            if method == 'support':
                values[method] = support.to_json()
            elif method == 'regularized':
                regularized = self.relative_entropy_regularized(rho_state, sigma_state)
                values[method] = '+inf' if regularized.divergent else (
                    regularized.extrapolated if full_rank else regularized.limit)
            elif method == 'modular':
                if not support.is_finite:
                    values[method] = '+inf'
                else:
                    values[method] = (self.entropy_via_modular(rho_state, sigma_state) if full_rank
                                      else 'not applicable (singular input)')
            else:
                values[method] = self.entropy_via_form(rho_state, sigma_state).to_json()

        finite = [v for v in values.values() if isinstance(v, float)]
        coherent = not (finite and any(v == '+inf' for v in values.values()))
        spread = max(finite) - min(finite) if finite else 0.0
        if full_rank or 'regularized' not in values:
            tolerance = self.tolerances.agreement
        else:
            tolerance = self.tolerances.regularized_agreement * (1.0 + (abs(support.value) if support.is_finite else 0.0))
        agree = coherent and spread <= tolerance
        logger.info(f"Entropy methods {methods}: spread {spread:.3e}, agree={agree}")
        return MethodComparison(values=values, spread=spread, tolerance=tolerance, agree=agree)
