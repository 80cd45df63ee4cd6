"""Error taxonomy shared across the package.

Exit-code mapping used by the CLI: ConfigurationError / DataError / UsageError
terminate with code 1, NumericError with code 2, InvariantError (including
blow-up aborts) with code 3.
"""


class KKFlowError(Exception):
    """Base class for all package errors."""


class ConfigurationError(KKFlowError):
    """Invalid build or run configuration (bad dims, CFL violation, bad scenario)."""


class DataError(KKFlowError):
    """Malformed or inconsistent input data (chart files, non-SPD supplied metric)."""


class UsageError(KKFlowError):
    """API misuse such as mismatched chart/field shapes."""


class NumericError(KKFlowError):
    """Solver divergence, operator indefiniteness, singular pointwise inversion."""


class InvariantError(KKFlowError):
    """A runtime invariant failed (SPD loss, norm blow-up); carries diagnostics."""

    def __init__(self, message: str, details: dict | None = None):
        super().__init__(message)
        self.details = details or {}
