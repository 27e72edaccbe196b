"""Exception hierarchy shared by all markovlab modules."""


class MarkovLabError(Exception):
    """Base class for every error raised by this package."""


class NonHermitianInput(MarkovLabError, ValueError):
    pass


class DimensionMismatch(MarkovLabError, ValueError):
    pass


class TruncationTooSmall(MarkovLabError):
    """A Fock truncation is too small for the requested dynamics."""


class CommutationViolation(MarkovLabError, ValueError):
    pass


class IndexOverflow(MarkovLabError, ValueError):
    """A combinatorial index exceeded the configured factorial table."""


class TailTooLarge(MarkovLabError):
    """A truncated series or Fourier integral could not meet its tail bound."""


class SeriesDivergence(TailTooLarge):
    """The ratio test shows that a series does not converge at all."""


class StepTooLarge(MarkovLabError, ValueError):
    pass


class SingularGreens(MarkovLabError):
    pass


class InsufficientSamples(MarkovLabError, ValueError):
    pass


class DensityInvariantViolation(MarkovLabError):
    """An emitted reduced density matrix is not Hermitian, unit-trace or positive."""


class ConfigError(MarkovLabError, ValueError):
    pass
