"""Exception types raised across the package."""


class MCFError(Exception):
    """Base class for all errors raised by mcf_lab."""


class InsufficientPrecision(MCFError):
    """A truncated p-adic value does not determine the requested quantity."""


class PrecisionExhausted(InsufficientPrecision):
    """A Jacobi-Perron step cannot be certified at the available precision."""


class NonPAdicDenominator(MCFError, ValueError):
    """A value expected in Z[1/p] has a denominator prime other than p."""


class NonSimpleRoot(MCFError, ValueError):
    """Hensel lifting was asked to lift a root that is not simple mod p."""


class InvalidPlan(MCFError, ValueError):
    """A growth plan violates one of its defining conditions."""


class IndexOutOfRange(MCFError, IndexError):
    pass
