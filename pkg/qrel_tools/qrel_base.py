"""
Qrel Base Module

This module provides the base QrelBase class with configuration binding,
the error hierarchy, shared validation helpers, the matrix JSON codec and the
result types (ExtendedReal, Certificate) used by every toolkit mixin.
"""

import logging
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from config import Config, ToleranceConfig, ScheduleConfig

# Configure logging
logger = logging.getLogger(__name__)

ArrayLike = Union[np.ndarray, Sequence[Sequence[complex]]]
SeedLike = Union[int, np.random.Generator, None]


class QrelError(Exception):
    """Base exception for toolkit errors"""
    pass


class DimensionError(QrelError):
    """Operands have incompatible dimensions"""
    pass


class DomainError(QrelError):
    """An eigenvalue lies outside the declared domain of a scalar function"""

    def __init__(self, message: str, eigenvalue: float):
        super().__init__(message)
        self.eigenvalue = eigenvalue


class OrderError(QrelError):
    """An operator fails a required positivity condition"""
    pass


class EigensolverError(QrelError):
    """
    The Hermitian eigensolver did not converge or failed its invariants

    `residual` is ||A - U D U†||_F of the rejected decomposition, inf when no
    decomposition was produced.
    """

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class InvalidStateError(QrelError):
    """Input is not a density operator"""
    pass


class ChannelError(QrelError):
    """Input is not a CPTP map or violates a channel requirement"""
    pass


class SingularOperatorError(QrelError):
    """An operator that must be invertible is singular"""
    pass


class PreconditionError(QrelError):
    """A certificate precondition is not met"""
    pass


class ScheduleError(QrelError):
    """A regularization or interpolation schedule is invalid"""
    pass


class DegenerateFormError(QrelError):
    """Sum of forms is zero, so the compatible quotient space is empty"""
    pass


class BasisError(QrelError):
    """Operator basis is not orthonormal"""
    pass


class InfiniteBranchError(QrelError):
    """Operation requires finite relative entropies"""
    pass


class UnknownCheckError(QrelError):
    """Campaign names a check that is not registered"""
    pass


class WitnessSchemaError(QrelError):
    """Serialized witness does not match the expected schema"""
    pass


class ExtendedReal(BaseModel):
    """
    Real number or signed infinity, carried as a tag instead of a float infinity

    Comparisons are total: -inf < every finite value < +inf.
    """

    model_config = ConfigDict(frozen=True)

    value: float = 0.0
    infinity: int = Field(default=0, description="-1 for -inf, +1 for +inf, 0 when finite")

    @classmethod
    def finite(cls, value: float) -> 'ExtendedReal':
        return cls(value=float(value), infinity=0)

    @classmethod
    def plus_infinity(cls) -> 'ExtendedReal':
        return cls(value=0.0, infinity=1)

    @classmethod
    def minus_infinity(cls) -> 'ExtendedReal':
        return cls(value=0.0, infinity=-1)

    @property
    def is_finite(self) -> bool:
        return self.infinity == 0

    def sort_key(self):
        return (self.infinity, self.value if self.infinity == 0 else 0.0)

    def leq(self, other: 'ExtendedReal', tol: float = 0.0) -> bool:
        """self <= other + tol, with infinities compared by tag"""
        if self.is_finite and other.is_finite:
            return self.value <= other.value + tol
        return self.sort_key() <= other.sort_key()

    def __le__(self, other: 'ExtendedReal') -> bool:
        return self.leq(other)

    def __lt__(self, other: 'ExtendedReal') -> bool:
        return self.sort_key() < other.sort_key()

    def to_json(self) -> Union[float, str]:
        if self.infinity > 0:
            return "+inf"
        if self.infinity < 0:
            return "-inf"
        return self.value

    def __str__(self) -> str:
        return str(self.to_json())


class Certificate(BaseModel):
    """
    Outcome of a numerical certificate

    `margin` is signed (for Loewner checks it is the minimum eigenvalue of the
    gap), `defect` is the non-negative discrepancy aggregated by campaigns.
    """

    check: str
    holds: bool
    margin: float = 0.0
    defect: float = 0.0
    tolerance: float = 0.0
    details: Dict[str, Any] = Field(default_factory=dict)
    steps: List['Certificate'] = Field(default_factory=list)

    @classmethod
    def inequality(cls, check: str, margin: float, tolerance: float, **details: Any) -> 'Certificate':
        """Certificate for `margin >= -tolerance`"""
        margin = float(margin)
        return cls(
            check=check,
            holds=margin >= -tolerance,
            margin=margin,
            defect=max(0.0, -margin),
            tolerance=tolerance,
            details=details
        )

    @classmethod
    def equality(cls, check: str, discrepancy: float, tolerance: float, **details: Any) -> 'Certificate':
        """Certificate for `discrepancy <= tolerance`"""
        discrepancy = float(discrepancy)
        return cls(
            check=check,
            holds=discrepancy <= tolerance,
            margin=-discrepancy,
            defect=discrepancy,
            tolerance=tolerance,
            details=details
        )

    @classmethod
    def chain(cls, check: str, steps: List['Certificate'], **details: Any) -> 'Certificate':
        """Certificate holding iff every step holds"""
        return cls(
            check=check,
            holds=all(step.holds for step in steps),
            margin=min((step.margin for step in steps), default=0.0),
            defect=max((step.defect for step in steps), default=0.0),
            tolerance=max((step.tolerance for step in steps), default=0.0),
            details=details,
            steps=steps
        )

    def failed_steps(self) -> List['Certificate']:
        """Leaf certificates that do not hold"""
        if not self.steps:
            return [] if self.holds else [self]
        failed = []
        for step in self.steps:
            failed.extend(step.failed_steps())
        if not self.holds and not failed:
            failed.append(self)
        return failed


def matrix_to_json(matrix: np.ndarray) -> Dict[str, Any]:
    """Encode a matrix as {"rows", "cols", "re", "im"} with row-major arrays"""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=complex))
    return {
        'rows': int(matrix.shape[0]),
        'cols': int(matrix.shape[1]),
        're': matrix.real.tolist(),
        'im': matrix.imag.tolist(),
    }


def matrix_from_json(data: Dict[str, Any]) -> np.ndarray:
    """
    Decode the matrix JSON format

    Raises:
        DimensionError: If the declared shape does not match the arrays
        QrelError: If a field is missing or an entry is not finite
    """
    try:
        rows, cols = int(data['rows']), int(data['cols'])
        real = np.asarray(data['re'], dtype=float)
        imag = np.asarray(data.get('im', np.zeros((rows, cols))), dtype=float)
    except (KeyError, TypeError, ValueError) as e:
        raise QrelError(f"Malformed matrix JSON: {e}")

    if real.shape != (rows, cols) or imag.shape != (rows, cols):
        raise DimensionError(
            f"Matrix JSON declares {rows}x{cols} but arrays have shapes {real.shape} and {imag.shape}"
        )

    matrix = real + 1j * imag
    if not np.all(np.isfinite(matrix)):
        raise QrelError("Matrix JSON contains NaN or Inf entries")
    return matrix


class QrelBase:
    """
    Base class for the relative-entropy toolkit

    Binds a configuration and provides the shared validation helpers that the
    mixins use. Holds no mutable numerical state: every operation is a pure
    function of its arguments and the configuration.
    """

    def __init__(self, config: Optional[Config] = None):
        """
        Initialize the toolkit base with configuration

        Args:
            config: Configuration object; defaults to Config.from_env()
        """
        self.config = config if config is not None else Config.from_env()

    @property
    def tolerances(self) -> ToleranceConfig:
        return self.config.tolerances

    @property
    def schedules(self) -> ScheduleConfig:
        return self.config.schedules

    def _fail(self, error_cls, message: str, *args):
        """Log at ERROR and raise `error_cls(message, *args)`"""
        logger.error(message)
        raise error_cls(message, *args)

    def _as_matrix(self, value: Any, name: str = "matrix") -> np.ndarray:
        """
        Coerce input to a finite complex 2-D array

        Args:
            value: Array-like or an object exposing `.matrix`
            name: Name used in error messages

        Returns:
            Complex ndarray

        Raises:
            DimensionError: If the input is not two-dimensional
            QrelError: If an entry is NaN or Inf
        """
        if hasattr(value, 'matrix'):
            value = value.matrix
        matrix = np.asarray(value, dtype=complex)
        if matrix.ndim != 2:
            self._fail(DimensionError, f"{name} must be a 2-D matrix, got shape {matrix.shape}")
        if not np.all(np.isfinite(matrix)):
            self._fail(QrelError, f"{name} contains NaN or Inf entries")
        return matrix

    def _validate_square(self, matrix: np.ndarray, name: str = "matrix") -> int:
        if matrix.shape[0] != matrix.shape[1]:
            self._fail(DimensionError, f"{name} must be square, got shape {matrix.shape}")
        return matrix.shape[0]

    def _validate_same_dim(self, first: np.ndarray, second: np.ndarray, names: str = "operands") -> None:
        if first.shape != second.shape:
            self._fail(DimensionError, f"Dimension mismatch between {names}: {first.shape} vs {second.shape}")

    def _validate_unit_interval(self, value: float, name: str) -> None:
        if not 0.0 <= value <= 1.0:
            self._fail(ScheduleError, f"{name} must lie in [0, 1], got {value}")

    def _validate_schedule(self, schedule: Sequence[float], name: str = "schedule") -> List[float]:
        """
        Validate a strictly decreasing, positive schedule

        Raises:
            ScheduleError: If the schedule is empty, non-positive or not strictly decreasing
        """
        values = [float(v) for v in schedule]
        if not values:
            self._fail(ScheduleError, f"{name} must not be empty")
        if any(v <= 0.0 for v in values):
            self._fail(ScheduleError, f"{name} must contain strictly positive values")
        if any(later >= earlier for earlier, later in zip(values, values[1:])):
            self._fail(ScheduleError, f"{name} must be strictly decreasing, got {values}")
        return values

    @staticmethod
    def _rng(seed: SeedLike) -> np.random.Generator:
        """Counter-based generator from a seed, or the generator itself"""
        if isinstance(seed, np.random.Generator):
            return seed
        return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


Certificate.model_rebuild()
