"""Brute-force reference solver for small coalitions.

Both strategy spaces are discretized (a grid of code biases against a full
tensor grid of channels, with no symmetry assumed) and the resulting matrix
game is solved by fictitious play.  Only sensible for ``k <= 3``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import payoff as pf
from .errors import ConvergenceError, UnsupportedSizeError

MAX_ORACLE_K = 3


@dataclass(frozen=True)
class DiscretizedGame:
    k: int
    w_nodes: np.ndarray
    p_nodes: np.ndarray
    channels: np.ndarray   # (n_channels, k + 1)
    payoff_matrix: np.ndarray  # (n_w, n_channels)


@dataclass(frozen=True)
class OracleResult:
    k: int
    capacity: float
    lower: float
    upper: float
    w_nodes: np.ndarray
    w_weights: np.ndarray
    channel: np.ndarray
    iterations: int

    @property
    def gap(self):
        return self.upper - self.lower


def discretize(k: int, n_w: int = 401, n_p: int = 201, delta: float = 1e-4) -> DiscretizedGame:
    k = pf._check_k(k)
    if k > MAX_ORACLE_K:
        raise UnsupportedSizeError(f"oracle handles k <= {MAX_ORACLE_K}, got {k}")
    w = np.linspace(delta, 1.0 - delta, n_w)
    grid = np.linspace(0.0, 1.0, n_p)
    combos = list(itertools.product(grid, repeat=k - 1))
    inner = np.array(combos, dtype=float).reshape(len(combos), k - 1)
    chans = np.hstack([np.zeros((inner.shape[0], 1)), inner, np.ones((inner.shape[0], 1))])
    z = np.arange(k + 1)
    comb = np.array([math.comb(k, i) for i in z], dtype=float)
    alpha = comb * w[:, None] ** z * (1.0 - w[:, None]) ** (k - z)
    mix = alpha @ chans.T
    mat = pf.binary_entropy(mix) - alpha @ pf.binary_entropy(chans).T
    # tiny negative values are roundoff in h2(mix) - mean h2
    mat = np.clip(mat, 0.0, 1.0)
    return DiscretizedGame(k, w, grid, chans, mat)


def fictitious_play(mat, gap_tol=1e-4, max_iter=1_000_000):
    """Alternating fictitious play on ``max_x min_y x' M y``.

    Returns ``(x, y_best, lower, upper, iterations)`` with ``x`` the row
    player's empirical mixture, ``lower = min_j (x' M)_j`` and ``upper`` the
    smallest ``max_i (M y)_i`` seen over the column player's empirical
    mixtures and pure columns.
    """
    n_rows, n_cols = mat.shape
    # the pure minmax already bounds the value from above
    col_max = mat.max(axis=0)
    j = int(np.argmin(col_max))
    upper = float(col_max[j])
    row_sum = mat[:, j].copy()      # M y (unnormalized)
    col_sum = np.zeros(n_cols)       # x' M (unnormalized)
    counts = np.zeros(n_rows)
    lower = -np.inf
    best_x = None
    for t in range(1, max_iter + 1):
        i = int(np.argmax(row_sum))
        counts[i] += 1.0
        col_sum += mat[i]
        j = int(np.argmin(col_sum))
        row_sum += mat[:, j]
        lo = float(col_sum[j]) / t
        if lo > lower:
            lower, best_x = lo, counts / t
        upper = min(upper, float(row_sum.max()) / t)
        if upper - lower < gap_tol:
            return best_x, lower, upper, t
    raise ConvergenceError(f"fictitious play gap {upper - lower:.3g} after {max_iter} rounds",
                           best=(best_x, lower, upper))


def oracle_solve(k: int, n_w: int = 401, n_p: int = 201, delta: float = 1e-4,
                 gap_tol: float = 1e-4, max_iter: int = 1_000_000) -> OracleResult:
    """Capacity of the discretized game, reported as the bracket midpoint over ``k``."""
    game = discretize(k, n_w, n_p, delta)
    mat = game.payoff_matrix
    x, lower, upper, its = fictitious_play(mat, gap_tol, max_iter)
    j = int(np.argmin(mat.max(axis=0)))
    return OracleResult(k=game.k, capacity=0.5 * (lower + upper) / game.k,
                        lower=lower / game.k, upper=upper / game.k,
                        w_nodes=game.w_nodes, w_weights=x, channel=game.channels[j],
                        iterations=its)
