"""Best responses of the two players, shared by the solver and the attacks.

* :func:`minimize_channel` minimizes ``sum_i q_i C(w_i, p)`` over channels
  obeying the marking assumption (damped Newton with Armijo backtracking on
  the convex objective, kept inside the box by a fraction-to-boundary rule).
* :func:`maximize_over_w` scans ``C(., p)`` on a dense grid and polishes
  every local maximum with safeguarded Newton steps.
"""

from __future__ import annotations

import numpy as np

from . import payoff as pf
from .errors import ConvergenceError


# free channel coordinates never reach exactly 0 or 1 (log terms blow up)
_X_FLOOR = 1e-250
_X_CEIL = 1.0 - 2.0 ** -53


class ChannelMap:
    """Affine map from free coordinates ``x`` to a full channel vector ``p``.

    With ``symmetric=True`` the free coordinates are ``p_1 .. p_m`` with
    ``m = (k - 1) // 2``; the mirror entries follow ``p_{k-z} = 1 - p_z`` and
    ``p_{k/2} = 1/2`` for even ``k``.  Otherwise the free coordinates are all
    of ``p_1 .. p_{k-1}``.
    """

    def __init__(self, k: int, symmetric: bool = True):
        self.k = k
        self.symmetric = symmetric
        base = np.zeros(k + 1)
        base[k] = 1.0
        if symmetric:
            m = (k - 1) // 2
            if k % 2 == 0:
                base[k // 2] = 0.5
            basis = np.zeros((k + 1, m))
            for i in range(m):
                basis[i + 1, i] = 1.0
                basis[k - i - 1, i] = -1.0
                base[k - i - 1] = 1.0
        else:
            m = k - 1
            basis = np.zeros((k + 1, m))
            basis[1:k, :] = np.eye(m)
        self.m = m
        self.base = base
        self.basis = basis
        # restriction to interior coordinates, used for chain rules
        self.inner = basis[1:k, :]

    def to_p(self, x) -> np.ndarray:
        return self.base + self.basis @ np.asarray(x, dtype=float)

    def to_x(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if self.symmetric:
            k = self.k
            return np.array([(p[z] + 1.0 - p[k - z]) / 2.0 for z in range(1, self.m + 1)])
        return p[1:self.k].copy()

    def grad(self, ws, weights, x):
        """Objective value and gradient in ``x``."""
        p = self.to_p(x)
        vals = pf.payoff_grid(ws, p)
        gp = weights @ pf.payoff_grad_p_grid(ws, p)
        return float(weights @ vals), self.basis.T @ gp

    def hess(self, ws, weights, x):
        p = self.to_p(x)
        hp = np.einsum("n,nij->ij", weights, pf.payoff_hess_p_grid(ws, p))
        return self.inner.T @ hp @ self.inner


def minimize_channel(ws, weights, k: int, symmetric: bool = True, x0=None,
                     gtol: float = 1e-10, max_iter: int = 100_000):
    """Best channel against the code distribution ``{(ws[i], weights[i])}``.

    Returns ``(p, value, iterations)`` where ``value`` is the minimized
    expectation.  Raises :class:`ConvergenceError` (carrying ``(p, value)``)
    if the gradient norm does not drop below ``gtol`` within ``max_iter``
    iterations.
    """
    ws = np.atleast_1d(np.asarray(ws, dtype=float))
    weights = np.atleast_1d(np.asarray(weights, dtype=float))
    cmap = ChannelMap(k, symmetric)
    if cmap.m == 0:
        p = cmap.to_p(np.zeros(0))
        return p, float(weights @ pf.payoff_grid(ws, p)), 0
    if x0 is None:
        x = cmap.to_x(np.arange(k + 1) / k)
    else:
        x = np.clip(np.asarray(x0, dtype=float), _X_FLOOR, _X_CEIL)
    f, g = cmap.grad(ws, weights, x)
    f_prev, flat = f, 0
    for it in range(max_iter):
        gnorm = float(np.max(np.abs(g)))
        if gnorm < gtol:
            return cmap.to_p(x), f, it
        # degenerate supports push coordinates toward 0 or 1 where the gradient
        # cannot vanish in floating point; stop once f is frozen at roundoff
        flat = flat + 1 if f_prev - f <= 1e-15 * abs(f) + 1e-300 else 0
        f_prev = f
        if flat >= 8:
            return cmap.to_p(x), f, it
        try:
            h = cmap.hess(ws, weights, x)
            d = -np.linalg.solve(h, g)
            if not np.all(np.isfinite(d)) or g @ d >= 0.0:
                raise np.linalg.LinAlgError
        except np.linalg.LinAlgError:
            d = -g / max(gnorm, 1.0)
        # fraction to the boundary of the open box
        step = 1.0
        for xi, di in zip(x, d):
            if di < 0.0:
                step = min(step, 0.995 * xi / -di)
            elif di > 0.0:
                step = min(step, 0.995 * (1.0 - xi) / di)
        slope = g @ d
        if -slope < 1e-13 * max(abs(f), 1e-300) and step == 1.0:
            # predicted decrease is below roundoff in f: Armijo cannot see it,
            # but a full Newton step is safe this close to the minimum
            x = np.clip(x + d, _X_FLOOR, _X_CEIL)
            f, g = cmap.grad(ws, weights, x)
            continue
        while True:
            xn = np.clip(x + step * d, _X_FLOOR, _X_CEIL)
            fn, gn = cmap.grad(ws, weights, xn)
            if fn <= f + 1e-4 * step * slope:
                break
            step *= 0.5
            if step < 1e-16:
                break
        if step < 1e-16:
            # no descent representable in floating point: accept if nearly stationary
            if gnorm < 1e3 * gtol:
                return cmap.to_p(x), f, it
            raise ConvergenceError("channel descent stalled", best=(cmap.to_p(x), f))
        x, f, g = xn, fn, gn
    raise ConvergenceError("channel descent hit its iteration cap", best=(cmap.to_p(x), f))


def dense_grid(n: int) -> np.ndarray:
    """``n`` interior points of (0, 1), clustered toward the endpoints.

    Uses ``w = (1 - cos t) / 2`` on a uniform ``t`` grid, which resolves the
    steep parts of the payoff near 0 and 1.
    """
    t = np.linspace(0.0, np.pi, n + 2)[1:-1]
    return 0.5 * (1.0 - np.cos(t))


def _polish_max(lo, hi, w, p, iters=60):
    """Safeguarded Newton for a zero of dC/dw inside ``[lo, hi]`` near ``w``."""
    with np.errstate(divide="ignore", invalid="ignore"):
        _, d1, d2 = pf.payoff_grid_derivatives(np.array([lo, hi]), p)
    if d1[0] < 0.0 or d1[1] > 0.0:
        # bracket lost (grid max at a bracket edge); fall back to the grid point
        lo_ok = d1[0] >= 0.0
        hi_ok = d1[1] <= 0.0
        if not (lo_ok or hi_ok):
            return w
    for _ in range(iters):
        with np.errstate(divide="ignore", invalid="ignore"):
            _, d1, d2 = pf.payoff_grid_derivatives(np.array([w]), p)
        g, h = d1[0], d2[0]
        if not np.isfinite(g):
            return w
        if g > 0.0:
            lo = w
        else:
            hi = w
        if np.isfinite(h) and h < 0.0:
            wn = w - g / h
        else:
            wn = 0.5 * (lo + hi)
        if not lo < wn < hi:
            wn = 0.5 * (lo + hi)
        if abs(wn - w) <= 1e-15 * max(1.0, abs(w)) or hi - lo < 1e-16:
            return wn
        w = wn
    return w


def maximize_over_w(p, grid_size: int = 2049, window: float = 0.0,
                    merge_distance: float = 1e-6):
    """Local maximizers of ``C(., p)`` within ``window`` of the global maximum.

    Returns a list of ``(w, value)`` sorted by ``w``; the first-ranked global
    maximum is always included.
    """
    p = np.asarray(p, dtype=float)
    grid = dense_grid(grid_size)
    vals = pf.payoff_grid(grid, p)
    n = grid.size
    peaks = [i for i in range(n)
             if (i == 0 or vals[i] >= vals[i - 1]) and (i == n - 1 or vals[i] >= vals[i + 1])]
    found = []
    for i in peaks:
        lo = grid[i - 1] if i > 0 else grid[0] * 1e-3
        hi = grid[i + 1] if i < n - 1 else 1.0 - (1.0 - grid[-1]) * 1e-3
        w = _polish_max(lo, hi, grid[i], p)
        v = float(pf.payoff_grid(w, p))
        if v < vals[i]:
            w, v = float(grid[i]), float(vals[i])
        found.append((float(w), v))
    best = max(v for _, v in found)
    keep = sorted((w, v) for w, v in found if v >= best - window)
    merged = []
    for w, v in keep:
        if merged and w - merged[-1][0] < merge_distance:
            if v > merged[-1][1]:
                merged[-1] = (w, v)
            continue
        merged.append((w, v))
    return merged
