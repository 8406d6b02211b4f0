"""Exception types shared across the package."""


class UsageError(ValueError):
    """Invalid input: bad parameters, mismatched models, malformed configs."""


class NumericError(ArithmeticError):
    """A numerical routine could not produce a trustworthy answer."""


class RateOverflow(ArithmeticError):
    """A rate value exceeds the active bit budget.

    ``lower`` is a certified lower bound on the value that could not be
    represented. Every composite rate is at least as large as the inner
    quantities it is built from, so the bound remains valid when the error
    propagates outward.
    """

    def __init__(self, message, lower=0):
        super().__init__(message)
        self.lower = lower
