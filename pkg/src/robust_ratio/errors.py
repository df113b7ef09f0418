"""Exception types raised across the package."""


class RobustRatioError(Exception):
    pass


class ParameterDomainError(RobustRatioError, ValueError):
    """A parameter lies outside its admissible domain."""


class DatasetError(RobustRatioError, ValueError):
    """Malformed dataset (zero explanatory value, length mismatch, non-finite entry)."""


class NumericalFailure(RobustRatioError, ArithmeticError):
    def __init__(self, message, **info):
        super().__init__(message)
        self.info = info


class OptimizationFailure(NumericalFailure):
    """No start of the simplex search converged; ``best`` holds the best point seen."""

    def __init__(self, message, best=None, **info):
        super().__init__(message, **info)
        self.best = best


class NonIntegrablePosterior(NumericalFailure):
    pass


class MultimodalityError(NumericalFailure):
    """Raised by HPD computation; ``regions`` lists every (lo, hi) region above the cut."""

    def __init__(self, message, regions):
        super().__init__(message, regions=regions)
        self.regions = regions
