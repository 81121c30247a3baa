"""Exception hierarchy shared by every catforge module.

Each class carries the CLI exit code it maps to (2 usage, 3 data, 4 numerical).
"""


class CatforgeError(Exception):
    exit_code = 1


class ParameterError(CatforgeError, ValueError):
    """Invalid physical or numerical parameter."""

    exit_code = 2


class DimensionError(ParameterError):
    pass


class DegenerateNormalizationError(ParameterError):
    """Odd-cat normalization N_- = 2 - 2 exp(-2 alpha^2) vanishes."""


class UnsupportedPhaseError(ParameterError):
    pass


class GridError(ParameterError):
    pass


class DataError(CatforgeError, ValueError):
    exit_code = 3


class ZeroNormError(DataError):
    """An operation produced the zero vector (e.g. annihilating vacuum)."""


class HeraldImpossibleError(DataError):
    pass


class NumericalError(CatforgeError):
    exit_code = 4


class FitError(NumericalError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ConvergenceWarning(RuntimeWarning):
    pass
