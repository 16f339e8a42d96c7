"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: data problems exit with 3, solver
non-convergence with 4.
"""


class QsvmError(Exception):
    """Base class for package errors."""


class ConfigurationError(QsvmError, ValueError):
    pass


class ShapeError(QsvmError, ValueError):
    pass


class UnsupportedGateError(QsvmError, ValueError):
    pass


class DomainError(QsvmError, ValueError):
    pass


class NormalizationError(QsvmError, ValueError):
    pass


class DataError(QsvmError, ValueError):
    """Malformed or inconsistent input data."""


class ParseError(DataError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class GenerationError(QsvmError, RuntimeError):
    pass


class ResourceError(QsvmError, ValueError):
    pass


class TrainingError(QsvmError, ValueError):
    pass


class ConvergenceError(QsvmError, RuntimeError):
    pass
