"""Exception types shared across the package."""


class RpzenoError(Exception):
    """Base class for package-specific failures."""


class ConfigError(RpzenoError):
    """Invalid, unparseable or inconsistent run configuration."""

    def __init__(self, message, path=None, line=None, column=None):
        self.path = path
        self.line = line
        self.column = column
        prefix = ""
        if line is not None:
            prefix = f"line {line}, column {column}: "
        if path:
            prefix += f"{path}: "
        super().__init__(prefix + message)


class DegenerateDecompositionError(RpzenoError):
    """Eigenvector matrix too ill-conditioned to trust the spectral path.

    Callers may retry after perturbing the sink rate by one part in 1e9,
    or fall back to the superoperator path.
    """


class DivergentYieldError(RpzenoError):
    """Yield integral does not converge (non-decaying dynamics)."""


class DimensionCapError(RpzenoError):
    """Superoperator construction refused: Hilbert dimension above the cap."""


class SensitivityUndefinedError(RpzenoError):
    """Relative anisotropy requested for a zero mean yield."""


class CheckpointMismatchError(RpzenoError):
    """Checkpoint file belongs to a different configuration."""


class QuadratureError(RpzenoError):
    """Adaptive time quadrature failed to converge."""
