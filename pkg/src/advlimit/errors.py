"""Exception types shared across the package."""


class AdvLimitError(Exception):
    """Base class for all package errors."""


class ParseError(AdvLimitError):
    """A scenario file or expression could not be parsed."""


class ValidationError(AdvLimitError):
    """Scenario data violates a declared invariant."""


class SingularSystem(AdvLimitError):
    """A tridiagonal factorization hit a zero pivot."""


class NoConvergence(AdvLimitError):
    """Power iteration did not reach the requested tolerance."""

    def __init__(self, max_iter, last_residual):
        self.max_iter = max_iter
        self.last_residual = last_residual
        super().__init__(
            f"no convergence after {max_iter} iterations "
            f"(last residual {last_residual:.3e})"
        )


class DegenerateWidth(AdvLimitError):
    """A moving interval became narrower than the allowed minimum."""


class HypothesisViolation(AdvLimitError):
    """Interval or segment labels violate the hypotheses of a limit prediction."""


class AmbiguousSign(AdvLimitError):
    """A drift function hovers near zero on a set that is neither a plateau nor isolated points."""
