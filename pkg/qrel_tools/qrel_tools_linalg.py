"""
Qrel Linear Algebra Tools

This module provides dense Hermitian linear algebra: certified spectral
decompositions, matrix functions, the extended-real logarithm, Loewner-order
certificates, support extraction and the randomized operator convexity /
monotonicity / Jensen checks.
"""

import logging
import math
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
import scipy.linalg
from pydantic import BaseModel, ConfigDict, Field

from .qrel_base import (
    ArrayLike, Certificate, DomainError, EigensolverError, OrderError, PreconditionError,
    QrelError, SeedLike, matrix_to_json
)

# Configure logging
logger = logging.getLogger(__name__)

ScalarFunction = Callable[[np.ndarray], np.ndarray]


def hermitize(matrix: np.ndarray) -> np.ndarray:
    """Hermitian part (A + A†)/2"""
    return 0.5 * (matrix + matrix.conj().T)


def dagger(matrix: np.ndarray) -> np.ndarray:
    return matrix.conj().T


def eigh(matrix: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Ascending eigenvalues and eigenvectors of the Hermitian part of `matrix`

    Falls back to the QR-iteration driver when the divide-and-conquer driver
    does not converge.

    Raises:
        EigensolverError: If neither driver converges; the residual is then inf
    """
    herm = hermitize(matrix)
    try:
        return np.linalg.eigh(herm)
    except np.linalg.LinAlgError as e:
        logger.warning(f"Divide-and-conquer eigensolver failed ({e}), retrying with QR iteration")
    try:
        eigenvalues, eigenvectors = scipy.linalg.eigh(herm, driver='ev')
    except np.linalg.LinAlgError as e:
        message = f"Hermitian eigensolver did not converge: {e}"
        logger.error(message)
        raise EigensolverError(message, math.inf)
    residual = recomposition_residual(herm, eigenvalues, eigenvectors)
    logger.debug(f"QR-iteration eigensolver residual {residual:.3e}")
    return eigenvalues, eigenvectors


def recomposition_residual(matrix: np.ndarray, eigenvalues: np.ndarray, eigenvectors: np.ndarray) -> float:
    """||A - V diag(lambda) V†||_F"""
    return float(np.linalg.norm((eigenvectors * eigenvalues) @ dagger(eigenvectors) - matrix))


def spectral_apply(matrix: np.ndarray, values: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """U f(D) U† for a function acting on the eigenvalue vector"""
    eigenvalues, eigenvectors = eigh(matrix)
    return hermitize((eigenvectors * values(eigenvalues)) @ dagger(eigenvectors))


def support_threshold(eigenvalues: np.ndarray, relative_tol: float) -> float:
    """Absolute kernel threshold tau = tol * (1 + lambda_max)"""
    largest = float(np.max(eigenvalues)) if eigenvalues.size else 0.0
    return relative_tol * (1.0 + max(largest, 0.0))


def psd_power(matrix: np.ndarray, power: float, relative_tol: float = 1e-10) -> np.ndarray:
    """
    A^p of a PSD matrix with eigenvalues clamped at zero

    Kernel eigenvalues map to 1 for p == 0 and to 0 otherwise, so negative
    powers act as pseudo-inverse powers on the support.
    """
    eigenvalues, eigenvectors = eigh(matrix)
    clamped = np.maximum(eigenvalues, 0.0)
    on_support = clamped > support_threshold(clamped, relative_tol)
    if power == 0:
        powered = np.ones_like(clamped)
    else:
        powered = np.zeros_like(clamped)
        powered[on_support] = clamped[on_support] ** power
    return hermitize((eigenvectors * powered) @ dagger(eigenvectors))


def support_projector_matrix(matrix: np.ndarray, relative_tol: float = 1e-10) -> np.ndarray:
    eigenvalues, eigenvectors = eigh(matrix)
    columns = eigenvectors[:, eigenvalues > support_threshold(eigenvalues, relative_tol)]
    return columns @ dagger(columns)


def min_eigenvalue(matrix: np.ndarray) -> float:
    if matrix.size == 0:
        return 0.0
    return float(np.linalg.eigvalsh(hermitize(matrix))[0])


def spectral_norm(matrix: np.ndarray) -> float:
    if matrix.size == 0:
        return 0.0
    return float(np.linalg.norm(matrix, 2))


class HermitianOperator(BaseModel):
    """Square complex matrix certified Hermitian at construction"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    matrix: np.ndarray
    hermiticity_defect: float = 0.0

    def model_post_init(self, __context: Any) -> None:
        self.matrix.setflags(write=False)

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[0])

    def to_json(self) -> Dict[str, Any]:
        return matrix_to_json(self.matrix)


class SpectralDecomposition(BaseModel):
    """Ascending eigenvalues with a unitary matrix of eigenvectors (columns)"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    recomposition_defect: float = 0.0
    orthonormality_defect: float = 0.0

    def recompose(self, values: Optional[np.ndarray] = None) -> np.ndarray:
        """U diag(values) U†, defaulting to the eigenvalues themselves"""
        diagonal = self.eigenvalues if values is None else values
        return (self.eigenvectors * diagonal) @ dagger(self.eigenvectors)


class LogDecomposition(BaseModel):
    """
    log A = finite_part + (-inf) * kernel_projector

    The -inf term is carried by the projector, never as a float.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    finite_part: HermitianOperator
    kernel_projector: HermitianOperator

    def exp(self) -> np.ndarray:
        """exp(log A) = exp(finite_part) (I - P_0), using exp(-inf) = 0"""
        dim = self.finite_part.dim
        return spectral_apply(self.finite_part.matrix, np.exp) @ (np.eye(dim) - self.kernel_projector.matrix)


class Interval(BaseModel):
    """Real interval used as a declared function domain"""

    lower: float = -math.inf
    upper: float = math.inf
    lower_closed: bool = False
    upper_closed: bool = False

    @classmethod
    def positive(cls) -> 'Interval':
        return cls(lower=0.0, upper=math.inf)

    @classmethod
    def nonnegative(cls) -> 'Interval':
        return cls(lower=0.0, upper=math.inf, lower_closed=True)

    def outside(self, values: np.ndarray, slack: float = 0.0) -> np.ndarray:
        """Boolean mask of values not in the interval (closed ends get `slack`)"""
        values = np.asarray(values, dtype=float)
        if self.lower_closed:
            below = values < self.lower - slack
        else:
            below = values <= self.lower
        if self.upper_closed:
            above = values > self.upper + slack
        else:
            above = values >= self.upper
        return below | above

    def clip(self, values: np.ndarray) -> np.ndarray:
        return np.clip(values, self.lower, self.upper)

    def margin(self, values: np.ndarray) -> float:
        """Distance from the values to the nearest endpoint"""
        values = np.asarray(values, dtype=float)
        return float(min(np.min(values - self.lower), np.min(self.upper - values)))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Points strictly inside the interval, log-uniform near a finite endpoint"""
        lower_finite, upper_finite = math.isfinite(self.lower), math.isfinite(self.upper)
        if lower_finite and upper_finite:
            return self.lower + (self.upper - self.lower) * rng.uniform(0.02, 0.98, size)
        if lower_finite:
            return self.lower + np.exp(rng.uniform(-3.0, 3.0, size))
        if upper_finite:
            return self.upper - np.exp(rng.uniform(-3.0, 3.0, size))
        return rng.normal(0.0, 2.0, size)


class OperatorPropertyReport(BaseModel):
    """Result of a randomized operator convexity or monotonicity check"""

    property: str
    trials: int
    violations: int
    worst_violation: float = Field(default=0.0, description="Most negative Loewner gap eigenvalue seen")
    dims_checked: List[int]
    witness: Optional[Dict[str, Any]] = None


class LinalgCoreMixin:
    """Mixin class for Hermitian spectral operations"""

    def _as_hermitian(self, value: Any, name: str = "operator") -> HermitianOperator:
        """
        Coerce input to a certified HermitianOperator

        Raises:
            DimensionError: If the matrix is not square
            QrelError: If ||A - A†||_F exceeds hermitian * (1 + ||A||_F)
        """
        if isinstance(value, HermitianOperator):
            return value
        matrix = self._as_matrix(value, name)
        self._validate_square(matrix, name)
        defect = float(np.linalg.norm(matrix - dagger(matrix)))
        limit = self.tolerances.hermitian * (1.0 + float(np.linalg.norm(matrix)))
        if defect > limit:
            self._fail(QrelError, f"{name} is not Hermitian: defect {defect:.3e} exceeds {limit:.3e}")
        return HermitianOperator(matrix=np.array(hermitize(matrix)), hermiticity_defect=defect)

    def hermitian(self, matrix: ArrayLike) -> HermitianOperator:
        """Certify and wrap a Hermitian matrix"""
        return self._as_hermitian(matrix)

    def eig_hermitian(self, operator: Any) -> SpectralDecomposition:
        """
        Certified spectral decomposition A = U D U†

        Args:
            operator: HermitianOperator or Hermitian matrix

        Returns:
            SpectralDecomposition with ascending eigenvalues

        Raises:
            EigensolverError: If the solver fails or the recomposition /
                orthonormality invariants are violated
        """
        op = self._as_hermitian(operator)
        eigenvalues, eigenvectors = eigh(op.matrix)

        recomposition = recomposition_residual(op.matrix, eigenvalues, eigenvectors)
        orthonormality = float(np.linalg.norm(dagger(eigenvectors) @ eigenvectors - np.eye(op.dim)))
        limit = self.tolerances.recomposition * (1.0 + float(np.linalg.norm(op.matrix)))

        if recomposition > limit:
            self._fail(EigensolverError, f"Spectral recomposition defect {recomposition:.3e} exceeds {limit:.3e}",
                       recomposition)
        if orthonormality > self.tolerances.orthonormality:
            self._fail(EigensolverError, f"Eigenvector orthonormality defect {orthonormality:.3e}", recomposition)

        logger.debug(f"eig_hermitian d={op.dim}: recomposition={recomposition:.2e}, orthonormality={orthonormality:.2e}")
        return SpectralDecomposition(
            eigenvalues=eigenvalues,
            eigenvectors=eigenvectors,
            recomposition_defect=recomposition,
            orthonormality_defect=orthonormality
        )

    def matrix_function(self,
                        operator: Any,
                        function: ScalarFunction,
                        domain: Optional[Interval] = None) -> HermitianOperator:
        """
        f(A) = U f(D) U† for a vectorized real scalar function

        Args:
            operator: HermitianOperator or Hermitian matrix
            function: Callable applied to the eigenvalue array
            domain: Declared domain of `function`; eigenvalues within the
                support tolerance of a closed endpoint are clamped onto it

        Raises:
            DomainError: If an eigenvalue lies outside `domain` or `function`
                returns a non-finite value
        """
        op = self._as_hermitian(operator)
        spectrum = self.eig_hermitian(op)
        eigenvalues = spectrum.eigenvalues

        if domain is not None:
            slack = support_threshold(eigenvalues, self.tolerances.support)
            bad = domain.outside(eigenvalues, slack)
            if np.any(bad):
                offending = float(eigenvalues[bad][0])
                self._fail(DomainError, f"Eigenvalue {offending:.6g} lies outside the declared domain "
                                        f"({domain.lower}, {domain.upper})", offending)
            eigenvalues = domain.clip(eigenvalues)

        with np.errstate(divide='ignore', invalid='ignore'):
            values = np.asarray(function(eigenvalues))
        if np.iscomplexobj(values):
            values = values.real
        if not np.all(np.isfinite(values)):
            offending = float(eigenvalues[~np.isfinite(values)][0])
            self._fail(DomainError, f"Function is not finite at eigenvalue {offending:.6g}", offending)

        return HermitianOperator(matrix=np.array(hermitize(spectrum.recompose(values))))

    def log_extended(self, operator: Any) -> LogDecomposition:
        """
        Logarithm of a PSD operator with the -inf kernel term carried symbolically

        Raises:
            OrderError: If A has an eigenvalue below -tau_support
        """
        op = self._as_hermitian(operator)
        eigenvalues, eigenvectors = eigh(op.matrix)
        tau = support_threshold(eigenvalues, self.tolerances.support)
        if eigenvalues[0] < -tau:
            self._fail(OrderError, f"log_extended requires a PSD operator; minimum eigenvalue {eigenvalues[0]:.3e}")

        on_support = eigenvalues > tau
        logs = np.zeros_like(eigenvalues)
        logs[on_support] = np.log(eigenvalues[on_support])
        kernel = eigenvectors[:, ~on_support]

        return LogDecomposition(
            finite_part=HermitianOperator(matrix=np.array(hermitize((eigenvectors * logs) @ dagger(eigenvectors)))),
            kernel_projector=HermitianOperator(matrix=np.array(kernel @ dagger(kernel)))
        )

    def loewner_leq(self, lower: Any, upper: Any, tol: Optional[float] = None) -> Certificate:
        """
        Certificate for A <= B, i.e. lambda_min(B - A) >= -tol

        Returns:
            Certificate whose margin is lambda_min(B - A)
        """
        a = self._as_hermitian(lower, "lower operator")
        b = self._as_hermitian(upper, "upper operator")
        self._validate_same_dim(a.matrix, b.matrix, "Loewner operands")
        tol = self.tolerances.inequality if tol is None else tol
        return Certificate.inequality('loewner_leq', min_eigenvalue(b.matrix - a.matrix), tol)

    def support_projector(self, operator: Any, tol: Optional[float] = None) -> HermitianOperator:
        """Orthogonal projector onto the span of eigenvectors with eigenvalue > tau"""
        op = self._as_hermitian(operator)
        relative = self.tolerances.support if tol is None else tol
        eigenvalues = np.linalg.eigvalsh(op.matrix)
        tau = support_threshold(eigenvalues, relative)
        if eigenvalues[0] < -tau:
            self._fail(OrderError, f"support_projector requires a PSD operator; minimum eigenvalue {eigenvalues[0]:.3e}")
        return HermitianOperator(matrix=np.array(support_projector_matrix(op.matrix, relative)))

    def eigenspace_projectors(self, operator: Any) -> List[Tuple[float, np.ndarray]]:
        """
        Spectral projectors with eigenvalues clustered within tau_cluster

        Returns:
            List of (mean eigenvalue, projector) in ascending order
        """
        op = self._as_hermitian(operator)
        eigenvalues, eigenvectors = eigh(op.matrix)
        tau = self.tolerances.cluster * (1.0 + float(np.max(np.abs(eigenvalues))))

        clusters: List[List[int]] = [[0]]
        for index in range(1, len(eigenvalues)):
            if eigenvalues[index] - eigenvalues[clusters[-1][-1]] <= tau:
                clusters[-1].append(index)
            else:
                clusters.append([index])

        projectors = []
        for members in clusters:
            columns = eigenvectors[:, members]
            projectors.append((float(np.mean(eigenvalues[members])), columns @ dagger(columns)))
        return projectors

    def psd_power(self, operator: Any, power: float) -> HermitianOperator:
        """A^p on a PSD operator, with 0^p = 0 for p != 0 and 0^0 = 1"""
        op = self._as_hermitian(operator)
        if min_eigenvalue(op.matrix) < -support_threshold(np.linalg.eigvalsh(op.matrix), self.tolerances.support):
            self._fail(OrderError, "psd_power requires a PSD operator")
        return HermitianOperator(matrix=np.array(psd_power(op.matrix, power, self.tolerances.support)))

    def random_hermitian(self,
                         dim: int,
                         interval: Optional[Interval] = None,
                         seed: SeedLike = None) -> HermitianOperator:
        """Haar-rotated Hermitian matrix with spectrum sampled inside `interval`"""
        rng = self._rng(seed)
        interval = interval or Interval()
        eigenvalues = interval.sample(rng, dim)
        unitary = self.random_unitary(dim, rng)
        return HermitianOperator(matrix=np.array(hermitize((unitary * eigenvalues) @ dagger(unitary))))

    def random_unitary(self, dim: int, seed: SeedLike = None) -> np.ndarray:
        """Haar unitary from the QR of a complex Ginibre matrix with phase fix"""
        rng = self._rng(seed)
        ginibre = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2.0)
        q, r = np.linalg.qr(ginibre)
        phases = np.diag(r) / np.abs(np.diag(r))
        return q * phases

    def _operator_pair(self,
                       interval: Interval,
                       dim: int,
                       rng: np.random.Generator,
                       nearby: bool) -> Tuple[np.ndarray, np.ndarray]:
        """A random pair inside `interval`; `nearby` pairs are local perturbations"""
        a = self.random_hermitian(dim, interval, rng).matrix
        if not nearby:
            return a, self.random_hermitian(dim, interval, rng).matrix

        direction = self.random_hermitian(dim, Interval(lower=-1.0, upper=1.0), rng).matrix
        margin = interval.margin(np.linalg.eigvalsh(a))
        scale = 1.0 if not math.isfinite(margin) else 0.5 * margin
        return a, a + scale * direction / max(spectral_norm(direction), 1e-300)

    def _lifted(self, matrix: np.ndarray, function: ScalarFunction) -> np.ndarray:
        with np.errstate(divide='ignore', invalid='ignore'):
            return spectral_apply(matrix, lambda w: np.real(function(w)))

    def check_operator_convexity(self,
                                 function: ScalarFunction,
                                 interval: Optional[Interval] = None,
                                 trials: int = 100,
                                 dim: int = 3,
                                 seed: SeedLike = None,
                                 concave: bool = False) -> OperatorPropertyReport:
        """
        Sample pairs and test f((A+B)/2) <= (f(A)+f(B))/2 in the Loewner order

        Half of the trials draw independent pairs, half draw local perturbations
        B = A + sH, which is where non-operator-convex functions fail.

        Args:
            function: Vectorized scalar function
            interval: Domain the spectra are sampled from
            trials: Number of sampled pairs
            dim: Matrix dimension
            seed: Seed or generator
            concave: Test operator concavity instead

        Returns:
            OperatorPropertyReport; the finitely many dimensions checked are
            listed, the universal property is never claimed
        """
        interval = interval or Interval()
        rng = self._rng(seed)
        sign = -1.0 if concave else 1.0
        label = 'concavity' if concave else 'convexity'
        logger.info(f"Checking operator {label} on {trials} pairs, d={dim}")

        violations, worst, witness = 0, 0.0, None
        for trial in range(trials):
            a, b = self._operator_pair(interval, dim, rng, nearby=trial % 2 == 1)
            fa, fb = self._lifted(a, function), self._lifted(b, function)
            fm = self._lifted(0.5 * (a + b), function)
            gap = sign * (0.5 * (fa + fb) - fm)
            tol = self.tolerances.inequality * (1.0 + spectral_norm(fa) + spectral_norm(fb))
            margin = min_eigenvalue(gap)
            if margin < -tol:
                violations += 1
                if margin < worst:
                    worst = margin
                    witness = {'A': matrix_to_json(a), 'B': matrix_to_json(b)}

        if violations:
            logger.warning(f"Operator {label} violated in {violations}/{trials} trials (worst {worst:.3e})")
        return OperatorPropertyReport(property=label, trials=trials, violations=violations,
                                      worst_violation=worst, dims_checked=[dim], witness=witness)

    def check_operator_monotonicity(self,
                                    function: ScalarFunction,
                                    interval: Optional[Interval] = None,
                                    trials: int = 100,
                                    dim: int = 3,
                                    seed: SeedLike = None) -> OperatorPropertyReport:
        """Sample A <= B = A + P (P random PSD) and test f(A) <= f(B)"""
        interval = interval or Interval()
        rng = self._rng(seed)
        logger.info(f"Checking operator monotonicity on {trials} pairs, d={dim}")

        violations, worst, witness = 0, 0.0, None
        for trial in range(trials):
            a = self.random_hermitian(dim, interval, rng).matrix
            rank = 1 + trial % dim
            g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
            increment = g @ dagger(g)
            increment *= math.exp(rng.uniform(-3.0, 2.0)) / spectral_norm(increment)
            room = interval.upper - float(np.max(np.linalg.eigvalsh(a)))
            if math.isfinite(room):
                increment *= min(1.0, 0.5 * room / spectral_norm(increment))
            b = a + increment

            fa, fb = self._lifted(a, function), self._lifted(b, function)
            tol = self.tolerances.inequality * (1.0 + spectral_norm(fa) + spectral_norm(fb))
            margin = min_eigenvalue(fb - fa)
            if margin < -tol:
                violations += 1
                if margin < worst:
                    worst = margin
                    witness = {'A': matrix_to_json(a), 'B': matrix_to_json(b)}

        if violations:
            logger.warning(f"Operator monotonicity violated in {violations}/{trials} trials (worst {worst:.3e})")
        return OperatorPropertyReport(property='monotonicity', trials=trials, violations=violations,
                                      worst_violation=worst, dims_checked=[dim], witness=witness)

    def check_jensen_inequality(self,
                                function: ScalarFunction,
                                contraction: ArrayLike,
                                operator: Any,
                                domain: Optional[Interval] = None,
                                tol: Optional[float] = None) -> Certificate:
        """
        Certificate for f(V†XV) <= V†f(X)V

        For an isometry V this holds for every operator convex f. For a
        contraction that is not an isometry it additionally needs f(0) <= 0;
        the certificate records whether that precondition is met.

        Args:
            function: Vectorized scalar function
            contraction: V, an n x m matrix with V†V <= I
            operator: Hermitian X on n dimensions
            domain: Declared domain of `function`
            tol: Loewner tolerance (default: tolerances.inequality)

        Raises:
            PreconditionError: If V is not a contraction
        """
        v = self._as_matrix(contraction, "contraction")
        x = self._as_hermitian(operator, "operator")
        if v.shape[0] != x.dim:
            self._fail(PreconditionError, f"Contraction has {v.shape[0]} rows but operator has dimension {x.dim}")

        gram = dagger(v) @ v
        norm = spectral_norm(gram)
        if norm > 1.0 + self.tolerances.isometry:
            self._fail(PreconditionError, f"V is not a contraction: ||V†V|| = {norm:.6g}")
        isometry_defect = float(np.linalg.norm(gram - np.eye(v.shape[1])))
        is_isometry = isometry_defect <= self.tolerances.isometry

        with np.errstate(divide='ignore', invalid='ignore'):
            f_zero = float(np.real(np.asarray(function(np.array([0.0])))[0]))
        precondition = is_isometry or (math.isfinite(f_zero) and f_zero <= 0.0)

        compressed = hermitize(dagger(v) @ x.matrix @ v)
        f_x = self.matrix_function(x, function, domain).matrix
        f_compressed = self.matrix_function(compressed, function, domain).matrix
        gap = hermitize(dagger(v) @ f_x @ v) - f_compressed

        tol = self.tolerances.inequality * (1.0 + spectral_norm(f_x)) if tol is None else tol
        certificate = Certificate.inequality(
            'jensen', min_eigenvalue(gap), tol,
            isometry=is_isometry,
            isometry_defect=isometry_defect,
            f_at_zero=f_zero if math.isfinite(f_zero) else str(f_zero),
            precondition_holds=precondition
        )
        if not certificate.holds:
            logger.warning(f"Jensen inequality fails with margin {certificate.margin:.3e} "
                           f"(isometry={is_isometry}, f(0)={f_zero})")
        return certificate
