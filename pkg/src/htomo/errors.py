"""Exception and warning types shared across the package."""


class DomainError(ValueError):
    """An argument is outside the domain an operation supports."""


class DatasetFormatError(ValueError):
    """A dataset file is malformed or fails range validation."""


class SamplingError(RuntimeError):
    """The rejection sampler's envelope failed (acceptance collapsed)."""


class NumericalError(RuntimeError):
    """A numerical routine failed without a usable fallback."""


class TruncationWarning(UserWarning):
    """A Fock-space truncation leaves non-negligible tail mass."""


class SaturationWarning(UserWarning):
    """An irregular wavefunction value was clamped at the overflow cap."""


class MetadataWarning(UserWarning):
    """Dataset metadata was missing and defaults were substituted."""
