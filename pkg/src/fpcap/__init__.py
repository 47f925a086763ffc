"""Binary fingerprinting capacity by solving the coalition/code-designer game."""

from .attacks import (ArcsineQuadrature, BoundsReport, arcsine_quadrature, arcsine_value,
                      bounds_report, conjectured_capacity, interleaving_channel,
                      interleaving_value, lower_bound, upper_bound)
from .errors import (BoundaryGradientError, ConvergenceError, DomainError,
                     InfiniteDivergenceError, UnsupportedSizeError)
from .oracle import oracle_solve
from .payoff import (BinomialWeights, CodeDistribution, CollusionChannel, binary_entropy,
                     binomial_weights, kl_bernoulli)
from .solver import (SaddleSolution, SolverOptions, VerificationReport, best_response_p,
                     best_response_w, solve_game, verify_solution)

__version__ = "0.1.0"

__all__ = [
    "ArcsineQuadrature", "BinomialWeights", "BoundaryGradientError", "BoundsReport",
    "CodeDistribution", "CollusionChannel", "ConvergenceError", "DomainError",
    "InfiniteDivergenceError", "SaddleSolution", "SolverOptions", "UnsupportedSizeError",
    "VerificationReport", "arcsine_quadrature", "arcsine_value", "best_response_p",
    "best_response_w", "binary_entropy", "binomial_weights", "bounds_report",
    "conjectured_capacity", "interleaving_channel", "interleaving_value", "kl_bernoulli",
    "lower_bound", "oracle_solve", "solve_game", "upper_bound", "verify_solution",
]
