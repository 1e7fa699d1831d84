"""Exception types raised by the library."""


class BJJError(Exception):
    """Base class for all library errors."""


class ConfigError(BJJError, ValueError):
    """Invalid junction configuration or run settings."""


class ConvergenceError(BJJError, RuntimeError):
    """A numerical procedure did not reach its accuracy contract."""


class ScheduleError(BJJError, ValueError):
    """A control schedule cannot be constructed or evaluated."""


class GridError(BJJError, ValueError):
    """A spatial grid is unsuitable for the requested operation."""


class QuadratureError(ConvergenceError):
    """Time quadrature failed its self-convergence check."""


class SensitivityError(ConvergenceError):
    """Finite-difference derivative estimate did not converge."""


class CoherenceError(BJJError, ValueError):
    """Phase coherence vanishes, so coherent squeezing is undefined."""


class TableFormatError(BJJError, ValueError):
    """A persisted result table could not be parsed."""
