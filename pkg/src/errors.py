"""Exceptions raised across the package.

The CLI maps these onto its exit codes, so every failure a command can hit
should surface as one of the classes below.
"""


class WulffSpectraError(Exception):
    """Root of every error raised by this package."""


class ConfigError(WulffSpectraError):
    """Invalid configuration, command-line flag, or environment variable."""


class GaugeError(WulffSpectraError, ValueError):
    """Invalid gauge specification or an operation undefined for it."""


class SolverError(WulffSpectraError):
    """A numerical solver could not produce a trustworthy value."""


class BracketError(SolverError):
    """No sign change was found where a root must lie."""


class PoleEncountered(SolverError):
    """A Bessel ratio was evaluated too close to a zero of its denominator."""


class EtaOutOfRange(SolverError):
    """Eigenvalue level outside the interval where a weight can be inverted."""


class ConvergenceError(SolverError):
    """An iterative method stopped before meeting its tolerance."""


class OracleMismatch(WulffSpectraError):
    """Two independent code paths disagree beyond tolerance."""
