"""Per-position mutual-information payoff of the binary fingerprinting game.

For a coalition of size ``k`` the colluders hold ``Z`` ones out of ``k``
bits, where ``Z ~ Binomial(k, w)`` given the code bias ``w``.  A collusion
channel is the vector ``p`` with ``p[z] = P(Y = 1 | Z = z)``; the marking
assumption pins ``p[0] = 0`` and ``p[k] = 1``.  The payoff is

    C(w, p) = h2(alpha(w)' p) - alpha(w)' h2(p)        (bits)

with ``alpha(w)`` the binomial pmf.  Everything is in base-2 logarithms.

The public scalar functions validate their inputs.  The ``*_grid`` helpers
are vectorized over ``w`` and skip validation; the solver uses those.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import gammaln, xlog1py, xlogy

from .errors import BoundaryGradientError, DomainError, InfiniteDivergenceError

LN2 = math.log(2.0)

# Above this size C(k, z) w^z (1-w)^(k-z) is assembled in log space.
_DIRECT_BINOMIAL_MAX_K = 25


def _check_k(k) -> int:
    if isinstance(k, bool) or int(k) != k or k < 1:
        raise DomainError(f"coalition size must be a positive integer, got {k!r}")
    return int(k)


def _check_unit(x, name):
    x = float(x)
    if not 0.0 <= x <= 1.0 or math.isnan(x):
        raise DomainError(f"{name} must lie in [0, 1], got {x!r}")
    return x


# --------------------------------------------------------------------------
# scalar information measures
# --------------------------------------------------------------------------

def _h2(p):
    """Binary entropy on arrays, 0 log 0 = 0, no validation."""
    p = np.asarray(p, dtype=float)
    q = 1.0 - p
    out = np.zeros(p.shape)
    inner = (p > 0.0) & (q > 0.0)
    pi, qi = p[inner], q[inner]
    out[inner] = -(pi * np.log2(pi) + qi * np.log2(qi))
    return out


def _dh2(p):
    """Derivative of h2: log2((1 - p) / p)."""
    p = np.asarray(p, dtype=float)
    return np.log2((1.0 - p) / p)


def _d2h2(p):
    p = np.asarray(p, dtype=float)
    return -1.0 / (p * (1.0 - p) * LN2)


def binary_entropy(p):
    """Binary entropy ``h2(p)`` in bits.

    Accepts a scalar or an array; raises :class:`DomainError` for any entry
    outside [0, 1].
    """
    arr = np.asarray(p, dtype=float)
    if np.any(~((arr >= 0.0) & (arr <= 1.0))):
        raise DomainError(f"binary entropy needs arguments in [0, 1], got {p!r}")
    out = _h2(arr)
    return float(out) if out.ndim == 0 else out


def _kl2(p, q):
    """Elementwise d2(p || q) in bits for q in (0, 1); no validation."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    p, q = np.broadcast_arrays(p, q)
    out = np.zeros(p.shape)
    a = p > 0.0
    out[a] += p[a] * np.log2(p[a] / q[a])
    b = p < 1.0
    out[b] += (1.0 - p[b]) * np.log2((1.0 - p[b]) / (1.0 - q[b]))
    return out


def kl_bernoulli(p: float, q: float) -> float:
    """KL divergence ``d2(p || q)`` between Bernoulli(p) and Bernoulli(q), in bits.

    ``q`` may sit on {0, 1} only when ``p == q``; otherwise the divergence is
    infinite and :class:`InfiniteDivergenceError` is raised.
    """
    p = _check_unit(p, "p")
    q = _check_unit(q, "q")
    if p == q:
        return 0.0
    if q in (0.0, 1.0):
        raise InfiniteDivergenceError(f"d2({p} || {q}) is infinite")
    return max(float(_kl2(p, q)), 0.0)


# --------------------------------------------------------------------------
# strategy types
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CollusionChannel:
    """The colluders' pure strategy ``p[z] = P(Y = 1 | Z = z)``, ``z = 0..k``."""

    p: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=float).reshape(-1)
        if p.size < 2:
            raise DomainError("a channel needs k + 1 >= 2 entries")
        if np.any(~((p >= 0.0) & (p <= 1.0))):
            raise DomainError("channel entries must lie in [0, 1]")
        if p[0] != 0.0 or p[-1] != 1.0:
            raise DomainError("marking assumption requires p[0] = 0 and p[k] = 1")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @property
    def k(self) -> int:
        return self.p.size - 1

    def mirrored(self) -> "CollusionChannel":
        """Channel with ``p~[z] = 1 - p[k - z]`` (relabel 0 <-> 1)."""
        return CollusionChannel(1.0 - self.p[::-1])

    def symmetry_residual(self) -> float:
        return float(np.max(np.abs(self.p - (1.0 - self.p[::-1]))))

    def __eq__(self, other):
        return isinstance(other, CollusionChannel) and np.array_equal(self.p, other.p)

    @classmethod
    def unchecked(cls, p) -> "CollusionChannel":
        """Build without validation, for auditing possibly corrupt input."""
        obj = object.__new__(cls)
        object.__setattr__(obj, "p", np.array(p, dtype=float).reshape(-1))
        return obj

    def __repr__(self):
        return f"CollusionChannel(k={self.k}, p={self.p.tolist()})"


def as_channel(channel) -> CollusionChannel:
    if isinstance(channel, CollusionChannel):
        return channel
    return CollusionChannel(channel)


@dataclass(frozen=True, eq=False)
class CodeDistribution:
    """Finitely supported distribution of the code bias ``W`` on (0, 1).

    Built from ``(w, weight)`` pairs; atoms are kept sorted by ``w``.
    """

    atoms: tuple

    def __post_init__(self):
        pairs = sorted((float(w), float(q)) for w, q in self.atoms)
        if not pairs:
            raise DomainError("distribution needs at least one atom")
        w = np.array([a for a, _ in pairs])
        q = np.array([b for _, b in pairs])
        if np.any(~((w > 0.0) & (w < 1.0))):
            raise DomainError("atoms must lie strictly inside (0, 1)")
        if np.any(~((q > 0.0) & (q <= 1.0))):
            raise DomainError("atom weights must lie in (0, 1]")
        if abs(q.sum() - 1.0) > 1e-12:
            raise DomainError(f"weights sum to {q.sum()!r}, not 1")
        if w.size > 1 and np.min(np.diff(w)) < 1e-9:
            raise DomainError("atoms must be separated by at least 1e-9")
        object.__setattr__(self, "atoms", tuple(pairs))

    @property
    def points(self) -> np.ndarray:
        return np.array([w for w, _ in self.atoms])

    @property
    def weights(self) -> np.ndarray:
        return np.array([q for _, q in self.atoms])

    def __len__(self):
        return len(self.atoms)

    def symmetry_residual(self) -> float:
        """Mismatch between the distribution and its image under ``w -> 1 - w``.

        Each atom is matched to the nearest mirrored atom; the residual is the
        largest position or weight discrepancy.
        """
        w, q = self.points, self.weights
        mirror = 1.0 - w
        worst = 0.0
        for wi, qi in zip(w, q):
            j = int(np.argmin(np.abs(mirror - wi)))
            worst = max(worst, abs(mirror[j] - wi), abs(q[j] - qi))
        return worst

    def cdf(self, x):
        """Right-continuous CDF evaluated at ``x`` (scalar or array)."""
        x = np.asarray(x, dtype=float)
        w, q = self.points, self.weights
        out = (x[..., None] >= w).astype(float) @ q
        return float(out) if out.ndim == 0 else out

    @classmethod
    def unchecked(cls, atoms) -> "CodeDistribution":
        """Build without validation, for auditing possibly corrupt input."""
        obj = object.__new__(cls)
        object.__setattr__(obj, "atoms", tuple(sorted((float(w), float(q)) for w, q in atoms)))
        return obj

    def __repr__(self):
        return f"CodeDistribution({list(self.atoms)})"


@dataclass
class BinomialWeights:
    """``alpha[z] = C(k, z) w^z (1 - w)^(k - z)`` and optionally its w-derivative."""

    k: int
    w: float
    alpha: np.ndarray
    dalpha_dw: Optional[np.ndarray] = field(default=None)


# --------------------------------------------------------------------------
# binomial weights
# --------------------------------------------------------------------------

def _bernstein(k, w):
    """Rows of binomial pmfs, shape ``w.shape + (k + 1,)``; ``k >= 0``."""
    w = np.asarray(w, dtype=float)[..., None]
    z = np.arange(k + 1)
    if k <= _DIRECT_BINOMIAL_MAX_K:
        coef = np.array([math.comb(k, j) for j in range(k + 1)], dtype=float)
        return coef * w ** z * (1.0 - w) ** (k - z)
    logc = gammaln(k + 1) - gammaln(z + 1) - gammaln(k - z + 1)
    return np.exp(logc + xlogy(z, w) + xlog1py(k - z, -w))


def _shift_diff(b, times):
    """Forward-difference operator on Bernstein coefficients (pads to length + times)."""
    for _ in range(times):
        pad = np.zeros(b.shape[:-1] + (1,))
        b = np.concatenate([pad, b], axis=-1) - np.concatenate([b, pad], axis=-1)
    return b


def binomial_table(k: int, w, order: int = 0):
    """Binomial pmf and its first ``order`` w-derivatives, vectorized over ``w``.

    Derivatives use the Bernstein difference identity
    ``d alpha_z^(k) / dw = k (alpha_{z-1}^(k-1) - alpha_z^(k-1))``, which is
    exact at the endpoints as well.  Returns a list ``[alpha, d1, d2, ...]``.
    """
    out = [_bernstein(k, w)]
    for r in range(1, order + 1):
        if r > k:
            out.append(np.zeros_like(out[0]))
            continue
        scale = math.perm(k, r)
        out.append(scale * _shift_diff(_bernstein(k - r, w), r))
    return out


def binomial_weights(k: int, w: float, with_derivative: bool = False) -> BinomialWeights:
    k = _check_k(k)
    w = _check_unit(w, "w")
    table = binomial_table(k, w, 1 if with_derivative else 0)
    return BinomialWeights(k, w, table[0], table[1] if with_derivative else None)


# --------------------------------------------------------------------------
# payoff and derivatives (vectorized, unchecked)
# --------------------------------------------------------------------------

def payoff_grid(ws, p) -> np.ndarray:
    """Payoff at every ``w`` in ``ws`` for channel vector ``p``."""
    p = np.asarray(p, dtype=float)
    alpha = _bernstein(p.size - 1, ws)
    return _h2(alpha @ p) - alpha @ _h2(p)


def payoff_grid_derivatives(ws, p):
    """Payoff, first and second w-derivative at every ``w`` in ``ws``.

    ``ws`` must be interior so that the mixture ``alpha' p`` is in (0, 1).
    """
    p = np.asarray(p, dtype=float)
    k = p.size - 1
    a0, a1, a2 = binomial_table(k, ws, 2)
    hp = _h2(p)
    y = a0 @ p
    y1 = a1 @ p
    y2 = a2 @ p
    val = _h2(y) - a0 @ hp
    g = _dh2(y)
    d1 = g * y1 - a1 @ hp
    d2 = _d2h2(y) * y1 ** 2 + g * y2 - a2 @ hp
    return val, d1, d2


def payoff_grad_p_grid(ws, p) -> np.ndarray:
    """Gradient in ``p`` at every ``w``; shape ``(len(ws), k + 1)``.

    Coordinates 0 and k are reported as 0.  Interior entries of ``p`` must be
    in (0, 1).
    """
    p = np.asarray(p, dtype=float)
    k = p.size - 1
    alpha = _bernstein(k, ws)
    y = alpha @ p
    out = np.zeros(alpha.shape)
    if k >= 2:
        inner = p[1:k]
        out[..., 1:k] = alpha[..., 1:k] * (_dh2(y)[..., None] - _dh2(inner))
    return out


def payoff_hess_p_grid(ws, p) -> np.ndarray:
    """Hessian in the interior coordinates ``p[1..k-1]``, shape ``(n, k-1, k-1)``."""
    p = np.asarray(p, dtype=float)
    k = p.size - 1
    alpha = np.atleast_2d(_bernstein(k, ws))
    a = alpha[:, 1:k]
    y = alpha @ p
    inner = p[1:k]
    outer = np.einsum("ni,nj->nij", a, a) * _d2h2(y)[:, None, None]
    diag = a * (-_d2h2(inner))
    idx = np.arange(k - 1)
    outer[:, idx, idx] += diag
    return outer


def payoff_cross_grid(ws, p) -> np.ndarray:
    """Mixed derivative d^2 C / (dw dp_z) on interior coordinates; shape ``(n, k-1)``."""
    p = np.asarray(p, dtype=float)
    k = p.size - 1
    a0, a1 = binomial_table(k, np.atleast_1d(ws), 1)
    y = a0 @ p
    y1 = a1 @ p
    inner = p[1:k]
    return (a1[:, 1:k] * (_dh2(y)[:, None] - _dh2(inner))
            + a0[:, 1:k] * (_d2h2(y) * y1)[:, None])


# --------------------------------------------------------------------------
# public scalar API
# --------------------------------------------------------------------------

def payoff(w: float, channel) -> float:
    """Mutual information ``I(X_K; Y | W = w)`` in bits (entropy form)."""
    channel = as_channel(channel)
    w = _check_unit(w, "w")
    if w in (0.0, 1.0):
        return 0.0
    return float(payoff_grid(w, channel.p))


def payoff_kl_form(w: float, channel) -> float:
    """Same payoff written as ``sum_z alpha_z(w) d2(p_z || alpha' p)``.

    Independent of :func:`payoff`; used to cross-check it.
    """
    channel = as_channel(channel)
    w = _check_unit(w, "w")
    p = channel.p
    alpha = binomial_table(channel.k, w)[0]
    y = float(alpha @ p)
    live = alpha > 0.0
    if y in (0.0, 1.0):
        if np.any(p[live] != y):
            raise InfiniteDivergenceError("mixture is deterministic but the channel is not")
        return 0.0
    return float(alpha[live] @ _kl2(p[live], y))


def payoff_grad_w(w: float, channel) -> float:
    """Partial derivative of the payoff in ``w``, for ``w`` in (0, 1)."""
    channel = as_channel(channel)
    w = _check_unit(w, "w")
    if w in (0.0, 1.0):
        raise DomainError("payoff_grad_w is defined on the open interval (0, 1)")
    return float(payoff_grid_derivatives(np.array([w]), channel.p)[1][0])


def payoff_curvature_w(w: float, channel) -> float:
    """Second partial derivative of the payoff in ``w``, for ``w`` in (0, 1)."""
    channel = as_channel(channel)
    w = _check_unit(w, "w")
    if w in (0.0, 1.0):
        raise DomainError("payoff_curvature_w is defined on the open interval (0, 1)")
    return float(payoff_grid_derivatives(np.array([w]), channel.p)[2][0])


def payoff_grad_p(w: float, channel) -> np.ndarray:
    """Gradient of the payoff in the channel coordinates (length ``k + 1``).

    Entries 0 and ``k`` are frozen by the marking assumption and reported as 0.
    """
    channel = as_channel(channel)
    w = _check_unit(w, "w")
    if w in (0.0, 1.0):
        raise DomainError("payoff_grad_p is defined on the open interval (0, 1)")
    inner = channel.p[1:-1]
    if np.any((inner == 0.0) | (inner == 1.0)):
        raise BoundaryGradientError("interior channel coordinate at 0 or 1 has no finite gradient")
    return payoff_grad_p_grid(w, channel.p)


def expected_payoff(distribution: CodeDistribution, channel) -> float:
    """``E_{p_W} C(W, p)`` for a finitely supported code distribution."""
    channel = as_channel(channel)
    return float(distribution.weights @ payoff_grid(distribution.points, channel.p))
