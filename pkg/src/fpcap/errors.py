"""Exception types raised by the solver library."""


class DomainError(ValueError):
    """An argument lies outside the domain of the function."""


class InfiniteDivergenceError(ArithmeticError):
    """A Bernoulli KL divergence is infinite (q in {0, 1} with p != q)."""


class BoundaryGradientError(ValueError):
    """Gradient requested at an interior channel coordinate equal to 0 or 1."""


class UnsupportedSizeError(ValueError):
    """Coalition size too large for a brute-force routine."""


class ConvergenceError(RuntimeError):
    """An iterative routine hit its iteration cap.

    ``best`` carries the best iterate found so far; its type depends on the
    raising routine (a channel, a value bracket, or a partial solution).
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
