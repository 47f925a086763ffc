"""Named strategies and closed-form capacity bounds.

The interleaving channel ``p_z = z / k`` is the natural coalition strategy;
the arcsine density ``1 / (pi sqrt(w (1 - w)))`` the natural code
distribution.  Playing either one against a best response brackets the
capacity from above and below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import payoff as pf
from .payoff import CollusionChannel
from .responses import maximize_over_w, minimize_channel

# the payoff behaves like w log w at the endpoints, so Gauss-Chebyshev
# converges only as n**-3; this many nodes keeps the doubling change < 1e-9
DEFAULT_ARCSINE_NODES = 1025


def interleaving_channel(k: int) -> CollusionChannel:
    """Channel ``p_z = z / k``: output a uniformly chosen colluder's bit."""
    k = pf._check_k(k)
    return CollusionChannel(np.arange(k + 1) / k)


def upper_bound(k: int) -> float:
    """``1 / (k^2 ln 2)`` bits."""
    k = pf._check_k(k)
    return 1.0 / (k * k * math.log(2.0))


def lower_bound(k: int) -> float:
    """``2 / (k^2 pi^2 ln 2)`` bits."""
    k = pf._check_k(k)
    return 2.0 / (k * k * math.pi ** 2 * math.log(2.0))


def conjectured_capacity(k: int) -> float:
    """Large-k approximation ``1 / (2 k^2 ln 2)``."""
    k = pf._check_k(k)
    return 1.0 / (2.0 * k * k * math.log(2.0))


@dataclass(frozen=True)
class ArcsineQuadrature:
    """Nodes and weights with ``sum(weights * f(nodes)) ~ E f(W)``, W arcsine."""

    nodes: np.ndarray
    weights: np.ndarray

    def __len__(self):
        return self.nodes.size

    def integrate(self, f) -> float:
        return float(self.weights @ np.asarray(f(self.nodes), dtype=float))


def arcsine_quadrature(n_nodes: int) -> ArcsineQuadrature:
    """Gauss-Chebyshev rule for the arcsine weight on (0, 1).

    With ``w = (1 + cos t) / 2`` the arcsine measure becomes uniform in ``t``
    on (0, pi), and the Gauss rule is the midpoint rule in ``t``.  Exact for
    polynomials in ``w`` of degree below ``2 n_nodes``.
    """
    n = int(n_nodes)
    if n < 1 or n != n_nodes:
        raise pf.DomainError("n_nodes must be a positive integer")
    t = (2.0 * np.arange(1, n + 1) - 1.0) * np.pi / (2.0 * n)
    nodes = 0.5 * (1.0 + np.cos(t))
    if n % 2 == 1:
        nodes[n // 2] = 0.5  # cos(pi/2) is not exactly 0 in floating point
    nodes.setflags(write=False)
    weights = np.full(n, 1.0 / n)
    weights.setflags(write=False)
    return ArcsineQuadrature(nodes, weights)


def interleaving_value(k: int, w_grid_resolution: int = 2049) -> float:
    """``(1/k) max_w C(w, p)`` for the interleaving channel."""
    k = pf._check_k(k)
    p = interleaving_channel(k).p
    return max(v for _, v in maximize_over_w(p, w_grid_resolution)) / k


def arcsine_value(k: int, quadrature: Optional[ArcsineQuadrature] = None,
                  gtol: float = 1e-10, max_iter: int = 100_000):
    """``(1/k) min_p E C(W, p)`` with W arcsine; returns ``(value, channel)``.

    The minimization runs over mirror-symmetric channels from the
    interleaving start.  Raises :class:`~fpcap.errors.ConvergenceError` when
    the descent does not converge.
    """
    k = pf._check_k(k)
    if quadrature is None:
        quadrature = arcsine_quadrature(DEFAULT_ARCSINE_NODES)
    p, value, _ = minimize_channel(quadrature.nodes, quadrature.weights, k, symmetric=True,
                                   gtol=gtol, max_iter=max_iter)
    p = np.clip(p, 0.0, 1.0)
    return value / k, CollusionChannel(p)


@dataclass(frozen=True)
class BoundsReport:
    k: int
    upper_bound: float
    lower_bound: float
    interleaving_value: float
    arcsine_value: float

    def as_row(self):
        return (self.k, self.lower_bound, self.upper_bound, self.interleaving_value,
                self.arcsine_value)


def bounds_report(k: int, w_grid_resolution: int = 2049,
                  quadrature: Optional[ArcsineQuadrature] = None) -> BoundsReport:
    k = pf._check_k(k)
    return BoundsReport(k=k, upper_bound=upper_bound(k), lower_bound=lower_bound(k),
                        interleaving_value=interleaving_value(k, w_grid_resolution),
                        arcsine_value=arcsine_value(k, quadrature)[0])
