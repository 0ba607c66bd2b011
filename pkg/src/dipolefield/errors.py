"""Package exceptions."""


class NumericalError(Exception):
    """A numerical routine failed to reach its requested tolerance.

    The best available value is attached as ``estimate`` (may be None) and
    the achieved error bound as ``achieved`` so callers can decide whether
    the partial result is still usable.
    """

    def __init__(self, message, estimate=None, achieved=None):
        super().__init__(message)
        self.estimate = estimate
        self.achieved = achieved
