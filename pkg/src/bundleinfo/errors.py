"""Exception hierarchy shared across the package.

Every error can carry the module and operation it came from plus a
remediation hint; the CLI turns these into machine-readable error records
and exit codes (see :mod:`bundleinfo.cli`).
"""

from __future__ import annotations


class BundleInfoError(Exception):
    """Base class for all package errors."""

    exit_code = 5

    def __init__(self, message: str, *, module: str | None = None,
                 operation: str | None = None, hint: str | None = None):
        super().__init__(message)
        self.module = module
        self.operation = operation
        self.hint = hint


class ConfigError(BundleInfoError):
    """Invalid run configuration or synthetic-system specification."""

    exit_code = 2


class StationarityError(ConfigError):
    """Autoregressive specification with companion spectral radius >= 1."""


class DataError(BundleInfoError):
    """Problems with observed or generated data."""

    exit_code = 3


class ParseError(DataError):
    """Malformed input file (ragged rows, unparseable cells)."""


class SchemaError(DataError):
    """Structurally invalid input (duplicate names, bad graph records)."""


class DegenerateVariableError(DataError):
    """A variable is constant or has too few observations to standardize."""


class InsufficientDataError(DataError):
    """No (or too few) complete-case rows left after lagged extraction."""


class UnknownVariableError(DataError, KeyError):
    """Lookup of a variable name that the data or graph does not define."""

    def __str__(self) -> str:  # bypass KeyError's repr-quoting
        return Exception.__str__(self)


class InstabilityError(DataError):
    """A simulated trajectory left its admissible state space."""


class EstimationError(BundleInfoError):
    """Information estimation failed."""

    exit_code = 4


class DegenerateGeometryError(EstimationError):
    """Zero k-th-neighbor distances; tie-breaking jitter required."""


class OracleDegenerateError(EstimationError):
    """Closed-form information oracle hit a singular covariance."""


class SweepError(EstimationError):
    """Every cell of a sweep failed."""


class ContractViolationError(BundleInfoError):
    """A documented precondition was violated by the caller."""

    exit_code = 5
