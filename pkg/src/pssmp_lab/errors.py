"""Exception types raised across the package."""


class LabError(Exception):
    """Base class for all errors raised by pssmp_lab."""


class InvalidParam(LabError, ValueError):
    pass


class DomainError(LabError, ValueError):
    """Argument outside the moment-generating domain of the jump law."""


class NoRoot(LabError):
    pass


class NotApplicable(LabError):
    """Preconditions of an operation (drift sign, killing, jump sign) fail."""


class NegativeKilling(LabError):
    """The requested exponential tilt is not a sub-Markovian kernel."""


class InvalidTilt(LabError, ValueError):
    pass


class NotAbsorbed(LabError):
    pass


class IdentityViolation(LabError, AssertionError):
    """A pathwise identity that must hold exactly was violated (a bug, not noise)."""


class Infeasible(LabError):
    """Rare-event guard failed: too few expected hits for the requested sample size."""


class NoConvergence(LabError):
    pass


class EmptySample(LabError, ValueError):
    pass


class DegenerateDesign(LabError, ValueError):
    pass


class ConfigError(LabError):
    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
