"""Exception hierarchy shared across the pipeline.

Exit-code mapping used by the CLI: ConfigurationError -> 2,
NumericalError/ConvergenceError -> 3, ResonanceError -> 4.
"""


class FloqmixError(Exception):
    pass


class ConfigurationError(FloqmixError):
    """Invalid model, drive, or run configuration."""


class NumericalError(FloqmixError):
    """Eigensolver or propagation failure."""


class ConvergenceError(NumericalError):
    """Parameter ladder exhausted without reaching tolerance."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace or []


class ResonanceError(FloqmixError):
    """Multiphoton resonance: the single-Floquet-state picture breaks down."""

    def __init__(self, message, k=None, band=None, overlaps=None):
        super().__init__(message)
        self.k = k
        self.band = band
        self.overlaps = overlaps
