"""
Simulator error types.
Every error names the quantity that failed so cli can report it verbatim.
"""
from typing import Optional, Tuple


class AnSimError(Exception):
    """Base class for all simulator errors."""


class ConfigValidationError(AnSimError, ValueError):
    """A configuration or plan violates one of its invariants."""

    def __init__(self, name: str, message: str):
        self.name = name
        super().__init__(f"{name}: {message}")


class ContractError(AnSimError, ValueError):
    """An input breaks the calling contract of a kernel (shape, finiteness, symmetry)."""


class UnsupportedShapeError(AnSimError, ValueError):
    """The requested route or bound is not defined for this system shape."""


class NumericalError(AnSimError, ArithmeticError):
    """Base class for failures of the numerical kernels."""


class NumericalFailure(NumericalError):
    def __init__(self, message: str, shape: Optional[Tuple[int, ...]] = None):
        self.shape = shape
        if shape is not None:
            message = f"{message} (shape {shape[0]}x{shape[1]})" if len(shape) == 2 else f"{message} (shape {shape})"
        super().__init__(message)


class PsdViolation(NumericalError):
    def __init__(self, which: str, min_eigenvalue: float):
        self.min_eigenvalue = min_eigenvalue
        super().__init__(f"{which} is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")


class DegeneracyError(NumericalError):
    def __init__(self, column: int):
        self.column = column
        super().__init__(f"column {column} is linearly dependent on the previous columns")


class SingularityError(NumericalError):
    def __init__(self, message: str, magnitude: float):
        self.magnitude = magnitude
        super().__init__(f"{message} (magnitude {magnitude:.3e})")


class ConditioningError(NumericalError):
    def __init__(self, growth: float, residual: float):
        self.growth = growth
        self.residual = residual
        super().__init__(
            f"Toeplitz determined block is ill-conditioned "
            f"(solve growth {growth:.3e}, cancellation residual {residual:.3e})"
        )


class ConstructionConventionError(NumericalError):
    def __init__(self, which: str, off_block_ratio: float):
        self.off_block_ratio = off_block_ratio
        super().__init__(
            f"{which} channel is not block diagonal after CP/FFT processing "
            f"(off-block ratio {off_block_ratio:.3e}); tap ordering is inconsistent"
        )


class DegenerateChannelError(NumericalError):
    def __init__(self, subcarrier: int, n_streams: int):
        self.subcarrier = subcarrier
        super().__init__(f"subcarrier {subcarrier} has rank below {n_streams} streams")


class RankAnomalyError(NumericalError):
    def __init__(self, expected: int, found: int):
        self.expected = expected
        self.found = found
        super().__init__(f"temporal AN null space has {found} columns, expected {expected}")


class TrialFailure(AnSimError):
    """A Monte Carlo trial failed; wraps the original error."""

    def __init__(self, trial: int, cause: Exception):
        self.trial = trial
        self.cause = cause
        super().__init__(f"trial {trial} failed: {cause}")
