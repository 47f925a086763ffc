"""Saddle-point solver for the binary fingerprinting capacity game.

The code designer picks a finitely supported distribution of the bias ``W``
(maximizer); the coalition picks a channel ``p`` (minimizer).  The game value
divided by ``k`` is the capacity ``C_{k,2}``.

:func:`solve_game` runs a double-oracle loop over a growing set of support
points, solving each restricted game by exponentiated-gradient ascent on the
code weights (with an exact channel best response inside) finished by Newton
on the restricted optimality system.  Once the support pattern settles the
full stationarity system, including the atom positions, is solved by Newton.
The result is certified by the duality gap between the channel's worst-case
payoff and the distribution's guaranteed payoff.

Both strategies are kept mirror-symmetric throughout: atoms are stored as
points ``u`` in (0, 1/2] standing for the pair ``{u, 1 - u}`` and channels
as their free coordinates ``p_1 .. p_{(k-1)//2}``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from . import payoff as pf
from .errors import ConvergenceError, DomainError
from .payoff import CodeDistribution, CollusionChannel
from .responses import ChannelMap, maximize_over_w, minimize_channel

log = logging.getLogger(__name__)

CUTTING_PLANE = "cutting_plane"
NEWTON_POLISHED = "newton_polished"


@dataclass(frozen=True)
class SolverOptions:
    tolerance: float = 1e-8
    w_grid: int = 2049
    max_outer_iterations: int = 200
    atom_merge_distance: float = 1e-6
    newton_enabled: bool = True
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.tolerance < 1e-3:
            raise DomainError("tolerance must lie in (0, 1e-3)")
        if self.w_grid < 3 or self.max_outer_iterations < 1:
            raise DomainError("w_grid must be >= 3 and max_outer_iterations >= 1")
        if self.atom_merge_distance <= 0.0 or self.seed < 0:
            raise DomainError("atom_merge_distance must be positive and seed non-negative")


@dataclass
class SaddleSolution:
    k: int
    capacity: float
    channel: CollusionChannel
    distribution: CodeDistribution
    maxmin_value: float
    minmax_value: float
    gap: float
    kkt_residual: float
    iterations: int
    method_tag: str
    history: List[dict] = field(default_factory=list, repr=False)

    @property
    def bracket(self):
        return self.maxmin_value / self.k, self.minmax_value / self.k


def support_bound(k: int) -> int:
    """Largest support size of an optimal code distribution, ``(k + 1) // 2``."""
    return (k + 1) // 2


# --------------------------------------------------------------------------
# best responses
# --------------------------------------------------------------------------

def best_response_w(channel, options: SolverOptions = SolverOptions()):
    """Maximizers of ``C(., p)`` over (0, 1) within ``tolerance`` of the maximum."""
    channel = pf.as_channel(channel)
    return maximize_over_w(channel.p, options.w_grid, window=options.tolerance,
                           merge_distance=options.atom_merge_distance)


def best_response_p(distribution: CodeDistribution, k: int,
                    options: SolverOptions = SolverOptions(),
                    symmetric: Optional[bool] = None) -> CollusionChannel:
    """Channel minimizing the expected payoff against ``distribution``.

    The symmetric reduction is used when the distribution is mirror-symmetric
    (or when ``symmetric`` forces it either way).
    """
    p, _ = _best_response_p_value(distribution, symmetric, k=pf._check_k(k))
    return CollusionChannel(_snap_marking(p))


def _best_response_p_value(distribution, symmetric=None, k=None):
    if k is None:
        raise DomainError("coalition size is required")
    if symmetric is None:
        symmetric = distribution.symmetry_residual() < 1e-12
    p, value, _ = minimize_channel(distribution.points, distribution.weights, k, symmetric)
    return p, value


def _snap_marking(p):
    p = np.clip(np.asarray(p, dtype=float), 0.0, 1.0)
    p[0], p[-1] = 0.0, 1.0
    return p


# --------------------------------------------------------------------------
# symmetric half-support bookkeeping
# --------------------------------------------------------------------------

def _unfold(half, hq):
    """Half-support ``(u, mass)`` to full atom list ``[(w, weight), ...]``."""
    atoms = []
    for u, m in zip(half, hq):
        if abs(u - 0.5) < 1e-15:
            atoms.append((0.5, m))
        else:
            atoms.append((u, m / 2.0))
            atoms.append((1.0 - u, m / 2.0))
    return atoms


def _fold(w, snap=1e-7):
    u = min(w, 1.0 - w)
    # a point this close to 1/2 is the self-paired centre atom
    return 0.5 if 0.5 - u < snap else u


def _make_distribution(half, hq):
    hq = np.asarray(hq, dtype=float)
    hq = hq / hq.sum()
    atoms = _unfold(half, hq)
    total = math.fsum(q for _, q in atoms)
    return CodeDistribution(tuple((w, q / total) for w, q in atoms))


# --------------------------------------------------------------------------
# Newton on optimality systems
# --------------------------------------------------------------------------

def _kkt_system(cmap, u, center, q, x, value, free_positions):
    """Residual and Jacobian of the restricted or full optimality system.

    Atoms are ``u`` (pairs, each in (0, 1/2)) followed by an optional atom at
    1/2; ``q`` holds their masses.  Unknowns are ``[u (if free), q, x, value]``.
    Equations: payoff at each atom equals ``value``; dC/dw = 0 at each pair
    (if free); weighted channel gradient vanishes; masses sum to one.
    """
    atoms = np.concatenate([u, [0.5]]) if center else np.asarray(u, dtype=float)
    n_pair, n = len(u), len(atoms)
    m = cmap.m
    p = cmap.to_p(x)
    val, d1, d2 = pf.payoff_grid_derivatives(atoms, p)
    grad_x = pf.payoff_grad_p_grid(atoms, p) @ cmap.basis
    n_u = n_pair if free_positions else 0
    n_var = n_u + n + m + 1
    rows = []
    res = []
    # payoff equalization
    for j in range(n):
        r = np.zeros(n_var)
        if free_positions and j < n_pair:
            r[j] = d1[j]
        r[n_u + n:n_u + n + m] = grad_x[j]
        r[-1] = -1.0
        rows.append(r)
        res.append(val[j] - value)
    if m:
        hess = pf.payoff_hess_p_grid(atoms, p)
        cross = pf.payoff_cross_grid(atoms, p) @ cmap.inner
    # first-order condition in w at pair atoms
    if free_positions:
        for j in range(n_pair):
            r = np.zeros(n_var)
            r[j] = d2[j]
            if m:
                r[n_u + n:n_u + n + m] = cross[j]
            rows.append(r)
            res.append(d1[j])
    # weighted stationarity in the channel
    if m:
        hx = np.einsum("n,nij->ij", q, hess)
        hx = cmap.inner.T @ hx @ cmap.inner
        stat = q @ grad_x
        for i in range(m):
            r = np.zeros(n_var)
            if free_positions:
                r[:n_pair] = q[:n_pair] * cross[:n_pair, i]
            r[n_u:n_u + n] = grad_x[:, i]
            r[n_u + n:n_u + n + m] = hx[i]
            rows.append(r)
            res.append(stat[i])
    r = np.zeros(n_var)
    r[n_u:n_u + n] = 1.0
    rows.append(r)
    res.append(q.sum() - 1.0)
    return np.array(res), np.array(rows)


def _newton_kkt(cmap, u, center, q, x, value, free_positions, max_iter=60, rtol=1e-13):
    """Damped Newton on :func:`_kkt_system`; returns the new point or None."""
    u = np.array(u, dtype=float)
    q = np.array(q, dtype=float)
    x = np.array(x, dtype=float)
    n_pair, n, m = len(u), len(q), cmap.m
    n_u = n_pair if free_positions else 0

    def unpack(z):
        return (z[:n_u] if free_positions else u), z[n_u:n_u + n], z[n_u + n:n_u + n + m], z[-1]

    def system(z):
        uu, qq, xx, vv = unpack(z)
        with np.errstate(all="ignore"):
            res, jac = _kkt_system(cmap, uu, center, qq, xx, vv, free_positions)
        if not (np.all(np.isfinite(res)) and np.all(np.isfinite(jac))):
            res = np.full_like(res, np.inf)
        return res, jac

    z = np.concatenate([u if free_positions else [], q, x, [value]])
    lower = np.concatenate([np.zeros(n_u), np.zeros(n), np.zeros(m), [-np.inf]])
    upper = np.concatenate([np.full(n_u, 0.5), np.full(n, np.inf), np.ones(m), [np.inf]])
    res, jac = system(z)
    norm = float(np.max(np.abs(res)))
    for _ in range(max_iter):
        if norm < rtol:
            break
        try:
            d = np.linalg.solve(jac, -res)
        except np.linalg.LinAlgError:
            d = np.linalg.lstsq(jac, -res, rcond=None)[0]
        if not np.all(np.isfinite(d)):
            return None
        step = 1.0
        for zi, di, lo, hi in zip(z, d, lower, upper):
            if di < 0.0 and np.isfinite(lo):
                step = min(step, 0.9 * (zi - lo) / -di)
            elif di > 0.0 and np.isfinite(hi):
                step = min(step, 0.9 * (hi - zi) / di)
        improved = False
        while step > 1e-10:
            zn = z + step * d
            rn, jn = system(zn)
            nn = float(np.max(np.abs(rn)))
            if nn < norm or nn < rtol:
                improved = True
                break
            step *= 0.5
        if not improved:
            break
        z, res, jac, norm = zn, rn, jn, nn
    uu, qq, xx, vv = unpack(z)
    return np.array(uu), np.array(qq), np.array(xx), float(vv), norm


# --------------------------------------------------------------------------
# restricted game on a fixed support
# --------------------------------------------------------------------------

def _restricted_game(cmap, half, q0, x0, tol, max_iter=400):
    """Solve ``max_q min_x sum_j q_j C(half_j, p(x))`` on fixed points ``half``.

    Returns ``(q, x, lower, upper)`` where ``lower`` is the guaranteed value of
    ``q`` and ``upper`` the largest payoff of ``p(x)`` on the support.
    """
    k = cmap.k
    half = np.asarray(half, dtype=float)
    q = np.asarray(q0, dtype=float)
    q = q / q.sum()
    p, lower, _ = minimize_channel(half, q, k, True, x0)
    x = cmap.to_x(p)
    eta = None
    for _ in range(max_iter):
        f = pf.payoff_grid(half, p)
        upper = float(f.max())
        if upper - lower <= tol:
            break
        if eta is None:
            eta = 1.0 / max(upper - float(f.min()), 1e-12)
        qn = q * np.exp(eta * (f - upper))
        qn /= qn.sum()
        pn, ln, _ = minimize_channel(half, qn, k, True, x)
        if ln >= lower:
            q, p, lower, x = qn, pn, ln, cmap.to_x(pn)
            eta *= 2.0
        else:
            eta *= 0.25
            if eta < 1e-300:
                break
    f = pf.payoff_grid(half, p)
    upper = float(f.max())
    if upper - lower > tol and cmap.m > 0:
        polished = _polish_restricted(cmap, half, q, x, lower)
        if polished is not None:
            q, x, lower, upper = polished
    return q, x, lower, upper


def _polish_restricted(cmap, half, q, x, value):
    """Active-set Newton on the restricted optimality system.

    Generically at most ``m + 1`` atoms can share the top payoff, so the
    active set starts as the ``m + 1`` heaviest atoms and is repaired when an
    atom outside it ends above the value or a mass inside turns negative.
    """
    k = cmap.k
    is_c = np.abs(half - 0.5) < 1e-15
    order = np.argsort(-q, kind="stable")
    active = [int(i) for i in order[:cmap.m + 1] if q[i] > 1e-12 * q.max()]
    x0, v0 = x, value
    for _ in range(2 * len(half) + 2):
        act = np.array(sorted(active, key=lambda i: (is_c[i], i)))
        pairs = half[act][~is_c[act]]
        center = bool(np.any(is_c[act]))
        qa = q[act] / q[act].sum()
        out = _newton_kkt(cmap, pairs, center, qa, x0, v0, free_positions=False)
        if out is None:
            return None
        _, qn, xn, vn, norm = out
        if norm > 1e-11:
            # stalled against a vanishing mass: that atom leaves the active set
            if len(act) > 1 and qn.min() < 1e-6:
                active.remove(int(act[int(np.argmin(qn))]))
                continue
            return None
        f = pf.payoff_grid(half, cmap.to_p(xn))
        outside = [i for i in range(len(half)) if i not in act]
        worst = max(outside, key=lambda i: f[i], default=None)
        if np.any(qn <= 0.0):
            active.remove(int(act[int(np.argmin(qn))]))
        elif worst is not None and f[worst] > vn + 1e-14:
            active.append(worst)
            if len(active) > cmap.m + 1:
                active.remove(int(act[int(np.argmin(qn))]))
        else:
            qfull = np.zeros_like(q)
            qfull[act] = qn
            p, lower, _ = minimize_channel(half, qfull, k, True, xn)
            return qfull, cmap.to_x(p), lower, float(pf.payoff_grid(half, p).max())
    return None


# --------------------------------------------------------------------------
# certification helpers
# --------------------------------------------------------------------------

def _kkt_residuals(k, distribution, p, value):
    """Residuals of the stationarity conditions at the full (unfolded) support.

    Returns ``(value_res, slope_res, channel_res)`` as arrays.  The slope at
    an atom at exactly 1/2 vanishes by symmetry and is still reported.
    """
    w, q = distribution.points, distribution.weights
    val, d1, _ = pf.payoff_grid_derivatives(w, p)
    grads = q @ pf.payoff_grad_p_grid(w, p)
    mfree = (k - 1) // 2
    chan = np.array([grads[z] - grads[k - z] for z in range(1, mfree + 1)])
    return val - value, d1, chan


def kkt_residual(k, distribution, p, value) -> float:
    a, b, c = _kkt_residuals(k, distribution, p, value)
    return float(max(np.max(np.abs(a)), np.max(np.abs(b)), np.max(np.abs(c), initial=0.0)))


def _certify(k, distribution, p, options):
    """Lower (maxmin) and upper (minmax) values for a candidate pair."""
    _, lower = _best_response_p_value(distribution, symmetric=False, k=k)
    # the candidate channel itself bounds the minimum from above
    lower = min(lower, pf.expected_payoff(distribution, p))
    upper = max(v for _, v in maximize_over_w(p, options.w_grid))
    return lower, upper


# --------------------------------------------------------------------------
# main entry point
# --------------------------------------------------------------------------

def _closed_form_k1(options):
    ch = CollusionChannel([0.0, 1.0])
    dist = CodeDistribution(((0.5, 1.0),))
    return SaddleSolution(1, 1.0, ch, dist, 1.0, 1.0, 0.0, 0.0, 0, CUTTING_PLANE, [])


def solve_game(k: int, options: SolverOptions = SolverOptions()) -> SaddleSolution:
    """Capacity ``C_{k,2}`` with optimal channel and code distribution.

    Raises :class:`ConvergenceError` if the duality gap does not reach
    ``options.tolerance``; its ``best`` attribute holds the best bracketing
    :class:`SaddleSolution` found.
    """
    k = pf._check_k(k)
    if k == 1:
        return _closed_form_k1(options)
    tol = options.tolerance
    rng = np.random.default_rng(options.seed)
    cmap = ChannelMap(k, symmetric=True)
    p = np.arange(k + 1) / k
    x = cmap.to_x(p)
    half = _admit([], [_fold(w) for w, _ in maximize_over_w(p, options.w_grid)],
                  options.atom_merge_distance)
    half = _admit(half, [0.5], options.atom_merge_distance)
    hq = np.ones(len(half)) / len(half)

    history = []
    best = None  # (gap, half, hq, p, lower, upper, method)
    lower_best, upper_best = -np.inf, np.inf
    method = CUTTING_PLANE
    for it in range(1, options.max_outer_iterations + 1):
        half_arr = np.array(half)
        hq, x, lower, _ = _restricted_game(cmap, half_arr, hq, x, tol / 10)
        p = cmap.to_p(x)
        # prune atoms that carry no mass
        keep = hq > 1e-12
        half_arr, hq = half_arr[keep], hq[keep] / hq[keep].sum()
        half = half_arr.tolist()
        maxima = maximize_over_w(p, options.w_grid, window=tol,
                                 merge_distance=options.atom_merge_distance)
        upper = max(v for _, v in maxima)
        lower_best, upper_best = max(lower_best, lower), min(upper_best, upper)
        gap = upper - lower
        history.append(dict(iteration=it, restricted_value=lower, minmax_value=upper, gap=gap,
                            support=len(half), lower_best=lower_best, upper_best=upper_best))
        log.debug("k=%d it=%d support=%d lower=%.15g upper=%.15g gap=%.3g",
                  k, it, len(half), lower, upper, gap)
        if best is None or gap < best[0]:
            best = (gap, list(half), hq.copy(), p.copy(), lower, upper, CUTTING_PLANE)
        if gap <= tol:
            break

        if options.newton_enabled:
            polished = _polish_full(cmap, half_arr, hq, x, lower, options)
            if polished is not None:
                ph, pq, pp, plow, pup = polished
                pgap = pup - plow
                history[-1]["polished_gap"] = pgap
                if pgap <= gap:
                    best = min(best, (pgap, ph, pq, pp, plow, pup, NEWTON_POLISHED),
                               key=lambda b: b[0])
                    if pgap <= tol:
                        break


        new = [_fold(w) for w, v in maxima if v > lower + tol / 4]
        if not new:
            new = [_fold(w) for w, v in maxima]
        grown = _admit(half, new, options.atom_merge_distance)
        if len(grown) == len(half):
            # nothing new to add: perturb the weights to leave a stalled restricted solve
            hq = hq * np.exp(0.1 * rng.standard_normal(hq.size))
        else:
            hq = np.array([hq[half.index(u)] if u in half else 0.5 / len(grown) for u in grown])
        half = grown
        hq = hq / hq.sum()

    gap, half, hq, p, lower, upper, method = best
    if method == CUTTING_PLANE and len(half) > 1:
        merged = _consolidate(cmap, half, hq, p, gap, options)
        if merged is not None:
            half, hq, p, lower, upper = merged
    sol = _assemble(k, half, hq, p, lower, upper, method, len(history), history, options)
    if sol.gap > tol:
        raise ConvergenceError(
            f"duality gap {sol.gap:.3g} above tolerance {tol:.3g} after {len(history)} iterations",
            best=sol)
    return sol


def _admit(half, new, merge):
    out = list(half)
    for u in new:
        if all(abs(u - v) >= merge for v in out):
            out.append(float(u))
    return sorted(out)


def _pool(p, half, hq, options):
    """Pool support mass onto the nearest local maxima of ``C(., p)``.

    Returns ``(points, masses)`` on the half line; an atom at 1/2 stands for
    itself.  Near-centre peaks are read as the centre atom whenever 1/2 is
    itself a local maximum.
    """
    peaks = [_fold(w) for w, _ in maximize_over_w(p, options.w_grid, window=np.inf)]
    _, _, d2c = pf.payoff_grid_derivatives(np.array([0.5]), p)
    if d2c[0] <= 0.0:
        peaks = [u for u in peaks if 0.5 - u > 1e-3] + [0.5]
    peaks = np.array(_admit([], peaks, options.atom_merge_distance))
    mass = np.zeros(peaks.size)
    for u, m in zip(half, hq):
        mass[int(np.argmin(np.abs(peaks - u)))] += m
    live = mass > 1e-6 * mass.sum()
    return peaks[live], mass[live] / mass[live].sum()


def _consolidate(cmap, half, hq, p, gap, options, rounds=10):
    """Merge clustered atoms onto the peaks of ``C(., p)`` and re-solve.

    The cutting-plane loop tends to surround each optimal atom with a
    cluster of nearby points.  Pooling onto the peaks and re-solving the
    restricted game is repeated (a fixed-point iteration on the atom
    positions) until the certified gap is back within the tolerance.
    """
    tol = options.tolerance
    pts, pq = _pool(p, np.asarray(half), np.asarray(hq), options)
    if len(pts) >= len(half):
        return None
    x = cmap.to_x(p)
    for _ in range(rounds):
        q, x, _, _ = _restricted_game(cmap, pts, pq, x, tol / 10)
        live = q > 1e-12
        pts, pq = pts[live], q[live] / q[live].sum()
        newp = cmap.to_p(x)
        lower, upper = _certify(cmap.k, _make_distribution(pts, pq), newp, options)
        if upper - lower <= max(gap, tol):
            return pts.tolist(), pq, newp, lower, upper
        moved, mq = _pool(newp, pts, pq, options)
        if len(moved) != len(pts):
            break
        pts, pq = moved, mq
    log.debug("consolidation rejected: gap %.3g", upper - lower)
    return None


def _polish_full(cmap, half, hq, x, value, options):
    """Newton polish of atom positions, weights and channel.

    Active atoms are first pooled onto the local maxima of ``C(., p)``, which
    collapses the clusters of nearby points the cutting-plane loop
    accumulates.  A pair driven onto 1/2 is retried as a centre atom.
    """
    k = cmap.k
    pts, q = _pool(cmap.to_p(x), half, hq, options)
    for _ in range(3):
        is_c = np.abs(pts - 0.5) < 1e-12
        if np.sum(~is_c) * 2 + np.sum(is_c) > support_bound(k):
            log.debug("polish skipped: pooled atoms %s exceed the support bound", pts)
            return None
        center = bool(np.any(is_c))
        pairs = pts[~is_c]
        qa = np.concatenate([q[~is_c], q[is_c]])
        out = _newton_kkt(cmap, pairs, center, qa, x, value, free_positions=True)
        if out is None:
            return None
        u, qn, xn, vn, norm = out
        near_c = 0.5 - u < options.atom_merge_distance
        if np.any(near_c) and norm <= 1e-10:
            # collapse onto the centre atom and solve again
            keep = ~near_c
            qc = qn[:len(u)][near_c].sum() + (qn[-1] if center else 0.0)
            pts = np.concatenate([u[keep], [0.5]])
            q = np.concatenate([qn[:len(u)][keep], [qc]])
            continue
        break
    else:
        return None
    if norm > 1e-10 or np.any(qn <= 0.0) or np.any(u <= 0.0) or np.any(near_c):
        log.debug("polish rejected: residual %.3g, support %s, masses %s", norm, pts, qn)
        return None
    newhalf = list(u) + ([0.5] if center else [])
    if len(newhalf) > 1 and np.min(np.diff(np.sort(newhalf))) < options.atom_merge_distance:
        return None
    p = cmap.to_p(xn)
    dist = _make_distribution(newhalf, qn)
    # second-order check: every atom must be a local maximum of C(., p)
    _, _, d2 = pf.payoff_grid_derivatives(dist.points, p)
    if np.any(d2 > 1e-8):
        log.debug("polish rejected: curvature %s at atoms", d2)
        return None
    lower, upper = _certify(k, dist, p, options)
    order = np.argsort(newhalf)
    return [newhalf[i] for i in order], qn[order], p, lower, upper


def _assemble(k, half, hq, p, lower, upper, method, iterations, history, options):
    dist = _make_distribution(half, hq)
    p = _snap_marking(p)
    channel = CollusionChannel(p)
    lower_c, upper_c = _certify(k, dist, p, options)
    lower, upper = min(lower, lower_c), upper_c
    resid = kkt_residual(k, dist, p, lower)
    return SaddleSolution(k=k, capacity=lower / k, channel=channel, distribution=dist,
                          maxmin_value=lower, minmax_value=upper, gap=upper - lower,
                          kkt_residual=resid, iterations=iterations, method_tag=method,
                          history=history)


# --------------------------------------------------------------------------
# independent verification
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Check:
    passed: bool
    residual: float
    limit: float


@dataclass
class VerificationReport:
    checks: Dict[str, Check]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values())

    def failed(self) -> List[str]:
        return [name for name, c in self.checks.items() if not c.passed]

    def lines(self) -> List[str]:
        return [f"{'PASS' if c.passed else 'FAIL'} {name}: residual {c.residual:.3e} "
                f"(limit {c.limit:.1e})" for name, c in self.checks.items()]


def _structure_residual(k, p, w, q):
    """Largest violation of the channel and distribution invariants."""
    bad = [abs(q.sum() - 1.0)]
    bad.append(max(0.0, -float(np.min(p)), float(np.max(p)) - 1.0))
    bad.append(abs(p[0]) + abs(p[-1] - 1.0))
    bad.append(max(0.0, -float(np.min(q)), float(np.max(q)) - 1.0))
    bad.append(max(0.0, -float(np.min(w)), float(np.max(w)) - 1.0))
    if np.any(w <= 0.0) or np.any(w >= 1.0) or np.any(q <= 0.0) or p.size != k + 1:
        bad.append(np.inf)
    if w.size > 1 and np.min(np.diff(np.sort(w))) < 1e-9:
        bad.append(np.inf)
    if w.size > support_bound(k):
        bad.append(float(w.size - support_bound(k)))
    return float(max(bad))


def verify_solution(solution: SaddleSolution,
                    options: SolverOptions = SolverOptions()) -> VerificationReport:
    """Recompute the saddle-point certificate of ``solution`` from scratch.

    Checks, each with its residual: structural invariants, the code
    designer's best response against the channel, the coalition's best
    response against the distribution, mirror symmetry of both strategies,
    the stationarity conditions at every atom and in the channel, and the
    second-order maximizer condition at every atom.
    """
    k, tol = solution.k, options.tolerance
    p = np.asarray(solution.channel.p, dtype=float)
    w = np.asarray(solution.distribution.points, dtype=float)
    q = np.asarray(solution.distribution.weights, dtype=float)
    value = k * solution.capacity
    checks = {}

    struct = _structure_residual(k, p, w, q)
    checks["structure"] = Check(struct <= 1e-12, struct, 1e-12)
    if not checks["structure"].passed:
        # the remaining checks assume a well-formed pair
        for name, limit in (("best_response_w", tol), ("best_response_p", tol),
                            ("symmetry", 1e-6), ("stationarity_value", 1e-8),
                            ("stationarity_slope", 1e-7), ("stationarity_channel", 1e-7),
                            ("curvature", 1e-8)):
            checks[name] = Check(False, float("nan"), limit)
        return VerificationReport(checks)

    upper = max(v for _, v in maximize_over_w(p, options.w_grid))
    excess = upper - value
    checks["best_response_w"] = Check(bool(excess <= tol), float(max(excess, 0.0)), tol)
    if k == 1:
        lower = float(q @ pf.payoff_grid(w, p))
    else:
        _, lower, _ = minimize_channel(w, q, k, symmetric=False)
    short = value - lower
    checks["best_response_p"] = Check(bool(short <= tol), float(max(short, 0.0)), tol)

    sym_p = float(np.max(np.abs(p - (1.0 - p[::-1]))))
    sym_w = CodeDistribution.symmetry_residual(solution.distribution)
    sym = max(sym_p, sym_w)
    checks["symmetry"] = Check(sym < 1e-6, sym, 1e-6)

    with np.errstate(all="ignore"):
        res_v, res_s, res_c = _kkt_residuals(k, solution.distribution, p, value)
        _, _, d2 = pf.payoff_grid_derivatives(w, p)
    for name, arr, limit in (("stationarity_value", res_v, 1e-8),
                             ("stationarity_slope", res_s, 1e-7),
                             ("stationarity_channel", res_c, 1e-7)):
        r = float(np.max(np.abs(arr), initial=0.0))
        checks[name] = Check(bool(r < limit), r, limit)
    curv = float(np.max(d2))
    checks["curvature"] = Check(bool(curv <= 1e-8), max(curv, 0.0), 1e-8)
    return VerificationReport(checks)
