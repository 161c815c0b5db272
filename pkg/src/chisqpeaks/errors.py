"""Exception hierarchy shared across the package.

The CLI maps these onto distinct exit codes, so raise the most specific
class that applies.
"""


class ChisqpeaksError(Exception):
    """Base class for all package errors."""


class ParameterError(ChisqpeaksError, ValueError):
    """Invalid or unsupported input: bad spectra, N < 4, malformed grids."""


class DegenerateGammaError(ParameterError):
    """gamma at or beyond the delta-shell boundary where 1/(1-gamma^2) blows up."""


class NumericalError(ChisqpeaksError, RuntimeError):
    """A numerical procedure failed: divergent moment, tolerance not met,
    zero acceptance, all-zero integrand."""


class DivergentMomentError(NumericalError):
    """A spectral moment integral does not converge."""


class DegenerateHessianError(ChisqpeaksError):
    """A stationary-point classification fell inside the tolerance band
    around a zero minor; the sample is reported, never guessed."""
