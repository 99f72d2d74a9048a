"""Exception hierarchy shared by every conegap module."""


class ConegapError(Exception):
    """Base class for all library errors."""


class DimensionMismatch(ConegapError, ValueError):
    pass


class RankDeficient(ConegapError, ValueError):
    pass


class NoConvergence(ConegapError, RuntimeError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ConeMembership(ConegapError, ValueError):
    """A vector or subspace required to lie in the cone does not."""


class InvalidAperturePair(ConegapError, ValueError):
    pass


class NotContracting(ConegapError, RuntimeError):
    pass


class ConeExit(ConegapError, RuntimeError):
    """An iterate left the cone it was supposed to stay in."""


class NotInvariant(ConegapError, ValueError):
    pass


class GapViolated(ConegapError, RuntimeError):
    pass


class DefectiveLambda(ConegapError, RuntimeError):
    pass


class SingularStep(ConegapError, RuntimeError):
    pass


class ApertureDegenerate(ConegapError, RuntimeError):
    pass


class DomainExit(ConegapError, ValueError):
    pass


class ConfigError(ConegapError, ValueError):
    pass
