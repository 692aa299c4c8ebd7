"""Exception types shared across the package."""


class SymrcError(Exception):
    """Base class for all symrc errors."""


class ParameterError(SymrcError, ValueError):
    """A scalar parameter is outside its admissible range."""


class ShapeError(SymrcError, ValueError):
    """An array argument has an incompatible shape."""


class DomainError(SymrcError, ValueError):
    """An array argument contains values outside its domain (e.g. non-±1 bits)."""


class ConfigurationError(SymrcError, ValueError):
    """A pipeline or experiment configuration is inconsistent."""


class InsufficientHistoryError(SymrcError, ValueError):
    """A delayed-window lookup reaches before the start of the series."""


class NormalizationError(SymrcError, ValueError):
    """A metric normalizer is degenerate (e.g. constant target series)."""


class SolverError(SymrcError, RuntimeError):
    """A linear solve failed; typically a singular system at alpha = 0."""


class InstantiationError(SymrcError, RuntimeError):
    """Random instantiation failed repeatedly (e.g. all-zero weight draw)."""


class DivergenceError(SymrcError, RuntimeError):
    """Integration produced non-finite state values.

    Attributes:
        step_index: 1-based index of the integration step that diverged.
    """

    def __init__(self, message: str, step_index: int):
        super().__init__(message)
        self.step_index = step_index
