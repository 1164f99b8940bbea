"""Exception hierarchy shared by all modules."""


class ConvPowError(Exception):
    """Base class for every error raised by convpow."""


class InvalidSpec(ConvPowError, ValueError):
    pass


class OutOfDomain(ConvPowError, ValueError):
    def __init__(self, s, boundary):
        self.s = s
        self.boundary = boundary
        super().__init__(f"s={s!r} lies outside the domain of the transform (abscissa {boundary!r})")


class RatioOutOfRange(ConvPowError, ValueError):
    def __init__(self, ratio, s_minus, s_plus):
        self.ratio = ratio
        self.s_minus = s_minus
        self.s_plus = s_plus
        super().__init__(f"ratio t/j={ratio!r} is not inside ({s_minus!r}, {s_plus!r})")


class SolverStall(ConvPowError, RuntimeError):
    pass


class NoRoot(ConvPowError, ValueError):
    def __init__(self, message, scan_range=None):
        self.scan_range = scan_range
        super().__init__(message)


class UnsupportedOrder(ConvPowError, ValueError):
    pass


class HorizonTooSmall(ConvPowError, ValueError):
    pass


class ScanInconclusive(ConvPowError, RuntimeError):
    pass


class MissingMoment(ConvPowError, ValueError):
    pass


class NotProbability(ConvPowError, ValueError):
    pass
