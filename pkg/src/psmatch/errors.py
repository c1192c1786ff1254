"""Exception types raised across the package.

The hierarchy mirrors pipeline stages so the CLI can map failures to
stable exit codes: input (1), estimation (2), matching (3), io (4).
"""


class PsmatchError(Exception):
    """Base class for all package errors."""


class InputError(PsmatchError):
    """Invalid input data or configuration (exit code 1)."""


class MissingValue(InputError):
    """An empty or non-numeric cell in a required column."""

    def __init__(self, row: int, column: str):
        self.row = row
        self.column = column
        super().__init__(f"missing or non-numeric value in column '{column}', row {row}")


class NonBinaryTreatment(InputError):
    """Treatment value outside {0, 1}."""

    def __init__(self, value):
        self.value = value
        super().__init__(f"treatment values must be 0 or 1, found {value!r}")


class EmptyGroup(InputError):
    """Zero treated or zero control units."""


class DuplicateColumn(InputError):
    """Duplicate, reserved, or conflicting column name."""


class UnknownColumn(InputError):
    """A named column is absent from the file header."""

    def __init__(self, column: str):
        self.column = column
        super().__init__(f"column '{column}' not found in header")


class EstimationError(PsmatchError):
    """Propensity model could not be fit (exit code 2)."""


class RankDeficient(EstimationError):
    """Collinear design matrix."""

    def __init__(self, column: str):
        self.column = column
        super().__init__(f"design matrix is rank deficient at column '{column}'")


class SeparationDetected(EstimationError):
    """Quasi-complete separation: coefficients diverge or the fit fails to converge."""


class DimensionMismatch(EstimationError):
    """Covariate vector length does not match the fitted model."""


class MatchingError(PsmatchError):
    """Matching could not proceed (exit code 3)."""


class NoTreated(MatchingError):
    """No treated units remain after discarding."""


class NoControl(MatchingError):
    """No control units remain after discarding."""


class InvalidSpec(MatchingError):
    """Inconsistent or out-of-range matching options."""


class SingularCovariance(PsmatchError):
    """Covariance matrix of group differences has numerical rank zero."""


class DegenerateData(PsmatchError):
    """Data without spread where spread is required (e.g. KDE input)."""


class NotPositiveDefinite(InputError):
    """Correlation matrix for simulation is not symmetric positive-definite."""
