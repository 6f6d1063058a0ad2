class SpimError(Exception):
    """Base class for errors raised by afspim."""


class DimensionError(SpimError, ValueError):
    """Array or lattice sizes do not agree."""


class DomainError(SpimError, ValueError):
    """A value lies outside its allowed range."""


class ConfigurationError(SpimError, ValueError):
    """Optics, detector or solver settings are inconsistent."""


class SpecError(SpimError, ValueError):
    """A coupling specification is malformed."""


class CalibrationError(SpimError, RuntimeError):
    """Origin calibration could not locate a usable peak."""


class FormatError(SpimError, ValueError):
    """A data file does not follow its documented layout."""
