"""Structured error taxonomy for the seizure detection pipeline.

Every failure the library raises on purpose derives from StructuredError and
carries:
- a category (usage, configuration, data, shape, numeric, leakage)
- a severity level
- a details dict with machine-readable context
- the process exit code the CLI should return for it

The CLI prints ``to_dict()`` as JSON on stderr, so scripted experiments can
parse failures the same way they parse results.

Example:
    >>> try:
    ...     raise DataError("label value '2' is not binary", details={"row": 17})
    ... except StructuredError as e:
    ...     payload = e.to_dict()
    ...     print(payload["category"], e.exit_code)
    data 2
"""
from contextlib import contextmanager
from enum import Enum
from typing import Optional, Dict, Any, Iterator
from datetime import datetime, timezone


class ErrorCategory(Enum):
    """Error categories for classification."""
    USAGE = "usage"                  # Bad command line
    CONFIGURATION = "configuration"  # Invalid or unknown config values
    DATA = "data"                    # Malformed files, unusable labels
    SHAPE = "shape"                  # Tensor / layer length violations
    NUMERIC = "numeric"              # Non-finite values, divergence
    LEAKAGE = "leakage"              # Test subject reached its own training fold
    UNKNOWN = "unknown"


class ErrorSeverity(Enum):
    """Error severity levels."""
    INFO = "info"
    WARNING = "warning"
    ERROR = "error"
    CRITICAL = "critical"


class StructuredError(Exception):
    """Base class for all structured errors.

    Attributes:
        message: Human-readable error message
        category: ErrorCategory classification
        severity: ErrorSeverity level
        details: Additional context (dict)
        timestamp: When the error occurred (UTC)
        exit_code: Process exit code used by the CLI
    """

    exit_code: int = 1

    def __init__(
        self,
        message: str,
        category: ErrorCategory = ErrorCategory.UNKNOWN,
        severity: ErrorSeverity = ErrorSeverity.ERROR,
        details: Optional[Dict[str, Any]] = None
    ):
        """Initialize structured error.

        Args:
            message: Human-readable error message
            category: Error category (default: UNKNOWN)
            severity: Error severity (default: ERROR)
            details: Additional context dictionary (default: None)
        """
        super().__init__(message)
        self.message = message
        self.category = category
        self.severity = severity
        self.details = details or {}
        self.timestamp = datetime.now(timezone.utc)

    def to_dict(self) -> Dict[str, Any]:
        """Convert error to structured dictionary.

        Returns:
            Dictionary with a predictable schema:
            {
                "error_type": "ErrorClassName",
                "message": "Human-readable message",
                "category": "usage|configuration|data|shape|numeric|leakage",
                "severity": "info|warning|error|critical",
                "details": {...},
                "timestamp": "2026-01-01T12:00:00.000000+00:00"
            }
        """
        return {
            "error_type": self.__class__.__name__,
            "message": self.message,
            "category": self.category.value,
            "severity": self.severity.value,
            "details": self.details,
            "timestamp": self.timestamp.isoformat()
        }


class UsageError(StructuredError):
    """Command line could not be parsed or is inconsistent."""

    exit_code = 1

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(
            message=message,
            category=ErrorCategory.USAGE,
            severity=ErrorSeverity.ERROR,
            details=details
        )


class ConfigurationError(StructuredError):
    """Configuration value is invalid, unknown, or mutually inconsistent.

    Raised for bad experiment config files, synthetic-generator settings that
    cannot be realised (events that do not fit the recording), and filter
    specs the sample rate cannot support.

    Example:
        >>> raise ConfigurationError(
        ...     "sample rate too low for pass band",
        ...     details={"fs": 20.0, "high_cut_hz": 12.8}
        ... )
    """

    exit_code = 1

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(
            message=message,
            category=ErrorCategory.CONFIGURATION,
            severity=ErrorSeverity.CRITICAL,
            details=details
        )


class DataError(StructuredError):
    """Input data is malformed or unusable.

    Covers recording sidecars that disagree with their payload, label files
    with non-binary or non-contiguous rows, truncated weight blobs, and
    label sets that hold a single class where two are required.
    """

    exit_code = 2

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(
            message=message,
            category=ErrorCategory.DATA,
            severity=ErrorSeverity.ERROR,
            details=details
        )


class ShapeError(StructuredError):
    """A tensor is too short for a layer, or shapes disagree.

    ``details["layer"]`` names the offending layer when one is known.
    """

    exit_code = 2

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(
            message=message,
            category=ErrorCategory.SHAPE,
            severity=ErrorSeverity.ERROR,
            details=details
        )


class NumericError(StructuredError):
    """Computation produced non-finite values."""

    exit_code = 3

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(
            message=message,
            category=ErrorCategory.NUMERIC,
            severity=ErrorSeverity.CRITICAL,
            details=details
        )


class LeakageError(StructuredError):
    """A held-out subject's windows reached its own fold's training data."""

    exit_code = 3

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(
            message=message,
            category=ErrorCategory.LEAKAGE,
            severity=ErrorSeverity.CRITICAL,
            details=details
        )


@contextmanager
def writing(path: Any) -> Iterator[None]:
    """Re-raise filesystem failures while producing ``path`` as DataError."""
    try:
        yield
    except OSError as e:
        raise DataError(f"cannot write {path}: {e}", details={"path": str(path)}) from e
