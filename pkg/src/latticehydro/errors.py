"""Exception hierarchy shared by all modules."""


class LatticeHydroError(Exception):
    """Base class for every error raised by this package."""


class InvalidParameterError(LatticeHydroError, ValueError):
    pass


class ConditionE3Error(LatticeHydroError):
    """The Fourier symbol has a negative eigenvalue beyond tolerance."""


class CriticalSetError(LatticeHydroError):
    """A wavenumber sits on (or too close to) a band crossing."""

    def __init__(self, message, theta=None):
        super().__init__(message)
        self.theta = theta


class DegenerateHessianError(LatticeHydroError):
    pass


class InvalidBoxError(LatticeHydroError, ValueError):
    pass


class BoxTooSmallError(LatticeHydroError):
    def __init__(self, message, required=None):
        super().__init__(message)
        self.required = required


class ModelViolationError(LatticeHydroError):
    pass


class GibbsUndefinedError(LatticeHydroError):
    pass


class SamplingError(LatticeHydroError):
    pass


class InvalidQueryError(LatticeHydroError, ValueError):
    pass


class FractionalPowerError(LatticeHydroError):
    pass


class GridTooSmallError(LatticeHydroError, ValueError):
    pass


class WindowError(LatticeHydroError):
    pass


class UnsupportedProfileError(LatticeHydroError):
    pass
