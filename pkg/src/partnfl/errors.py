"""Exception hierarchy shared by every module."""


class PartnflError(Exception):
    """Base class for all errors raised by partnfl."""


class InvalidPartitionError(PartnflError, ValueError):
    """Malformed partition, shape, label sequence or mismatched sizes."""


class LimitExceededError(PartnflError, ValueError):
    """A size exceeds a configured hard limit (Bell limit, enumeration limit)."""


class EmptyUniverseError(PartnflError, ValueError):
    """The requested random model has no members (e.g. interior with n < 3)."""


class DegenerateMetricError(PartnflError, ArithmeticError):
    """A metric's normalizing denominator vanishes."""


class ZeroVarianceError(DegenerateMetricError):
    """The null distribution of the statistic has zero variance."""


class BudgetExceededError(PartnflError, ValueError):
    """A verification run would exceed its configured work budget."""
