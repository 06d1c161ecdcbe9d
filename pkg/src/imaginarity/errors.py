"""Exception hierarchy shared by every module."""


class ImaginarityError(ValueError):
    """Base class for all errors raised by this package."""


class DomainError(ImaginarityError):
    pass


class ShapeMismatch(ImaginarityError):
    pass


class DimensionError(ImaginarityError):
    pass


class DimensionTooLarge(ImaginarityError):
    pass


class NotHermitian(ImaginarityError):
    pass


class TraceNotOne(ImaginarityError):
    pass


class NotPSD(ImaginarityError):
    pass


class NegativeEigenvalue(ImaginarityError):
    pass


class SupportMismatch(ImaginarityError):
    pass


class OutputInvalid(ImaginarityError):
    """A channel produced something that is not a density matrix."""


class RankDeficient(ImaginarityError):
    pass


class NoConvergence(RuntimeError):
    """An iterative routine exhausted its budget."""
