"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class NumericError(FloatingPointError):
    """Non-finite values were encountered where finite ones are required."""


class OracleConvergenceError(RuntimeError):
    """The brute-force barycenter oracle hit its iteration cap.

    The best iterate found so far is kept on ``best`` together with its
    objective value so callers can still inspect it.
    """

    def __init__(self, message, best, objective):
        super().__init__(message)
        self.best = best
        self.objective = objective


class SpecError(ValueError):
    """An experiment spec file failed validation."""
