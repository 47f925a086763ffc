import math

import mpmath as mp
import numpy as np
import pytest

from fpcap import attacks
from fpcap import payoff as pf
from fpcap.attacks import arcsine_quadrature, arcsine_value, interleaving_value

from conftest import solved


def test_interleaving_channel():
    assert attacks.interleaving_channel(2).p.tolist() == [0.0, 0.5, 1.0]
    assert attacks.interleaving_channel(1).p.tolist() == [0.0, 1.0]
    assert attacks.interleaving_channel(4).p.tolist() == [0.0, 0.25, 0.5, 0.75, 1.0]


def test_bound_constants():
    assert attacks.upper_bound(10) == pytest.approx(0.014426950408889634, abs=1e-16)
    assert attacks.lower_bound(10) == pytest.approx(0.0029235113835560135, abs=1e-16)
    # constants 1.443/k^2 and 0.292/k^2
    assert 100 * attacks.upper_bound(10) == pytest.approx(1.4427, abs=1e-4)
    assert 100 * attacks.lower_bound(10) == pytest.approx(0.2924, abs=1e-4)
    assert attacks.upper_bound(1) > 1.0
    for k in range(1, 30):
        assert attacks.upper_bound(k) == 1.0 / (k * k * math.log(2))
        assert attacks.lower_bound(k) == 2.0 / (k * k * math.pi ** 2 * math.log(2))


def test_quadrature_basics():
    q = arcsine_quadrature(1)
    assert q.nodes.tolist() == [0.5] and q.weights.tolist() == [1.0]
    for n in (1, 2, 7, 129):
        q = arcsine_quadrature(n)
        assert np.all(q.weights > 0) and abs(q.weights.sum() - 1.0) < 1e-12
        assert np.all((q.nodes > 0) & (q.nodes < 1))
        assert q.integrate(lambda w: np.ones_like(w)) == pytest.approx(1.0, abs=1e-12)
    assert arcsine_quadrature(2).integrate(lambda w: w) == pytest.approx(0.5, abs=1e-15)
    with pytest.raises(pf.DomainError):
        arcsine_quadrature(0)


@pytest.mark.parametrize("n", [3, 8, 20])
def test_quadrature_polynomial_exactness(n):
    q = arcsine_quadrature(n)
    for d in range(n):
        # E W^d under the arcsine law is C(2d, d) / 4^d
        exact = math.comb(2 * d, d) / 4 ** d
        assert abs(q.integrate(lambda w: w ** d) - exact) < 1e-12


def test_interleaving_values():
    assert interleaving_value(1) == pytest.approx(1.0, abs=1e-12)
    assert interleaving_value(2) == pytest.approx(0.25, abs=1e-12)
    # 1-D oracle on a fine uniform grid
    w = np.linspace(0, 1, 200001)
    brute = np.max(pf.payoff_grid(w, np.arange(4) / 3)) / 3
    assert interleaving_value(3) == pytest.approx(brute, abs=1e-9)
    for k in range(1, 41):
        assert interleaving_value(k) <= attacks.upper_bound(k) + 1e-12


def test_interleaving_asymptotic_trend():
    ratios = [k * k * 2 * math.log(2) * interleaving_value(k) for k in range(5, 41, 5)]
    assert all(r > 1.0 for r in ratios)
    assert all(a > b for a, b in zip(ratios, ratios[1:]))
    # the max over w sits near w ~ 1.3/k, where the ratio levels off near 1.14
    assert ratios[-1] < 1.17


@pytest.mark.parametrize("w", [0.2, 0.5])
def test_interleaving_pointwise_limit(w):
    gaps = [abs(k * 2 * math.log(2) * pf.payoff(w, np.arange(k + 1) / k) - 1.0)
            for k in (10, 40, 160, 640)]
    assert all(a > b for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 2e-3


def test_arcsine_k1_closed_form():
    mp.mp.dps = 30
    dens = lambda w: 1 / (mp.pi * mp.sqrt(w * (1 - w)))
    h2 = lambda w: -(w * mp.log(w, 2) + (1 - w) * mp.log(1 - w, 2))
    exact = mp.quad(lambda w: h2(w) * dens(w), [0, 0.5, 1])
    assert float(exact) == pytest.approx(2 - 1 / math.log(2), abs=1e-15)
    v, ch = arcsine_value(1)
    assert v == pytest.approx(float(exact), abs=1e-9)
    assert ch.p.tolist() == [0.0, 1.0]


def test_arcsine_k2_midpoint():
    v, ch = arcsine_value(2)
    assert ch.p[1] == pytest.approx(0.5, abs=1e-12)


@pytest.mark.parametrize("k", range(1, 11))
def test_arcsine_gate_and_bounds(k):
    v, ch = arcsine_value(k)
    v2, _ = arcsine_value(k, arcsine_quadrature(2 * attacks.DEFAULT_ARCSINE_NODES))
    assert abs(v - v2) < 1e-9
    assert attacks.lower_bound(k) - 1e-9 <= v <= attacks.upper_bound(k)
    assert ch.symmetry_residual() < 1e-6


@pytest.mark.parametrize("k", range(2, 11))
def test_sandwich(k):
    cap = solved(k).capacity
    rep = attacks.bounds_report(k)
    assert rep.lower_bound <= rep.arcsine_value <= cap <= rep.interleaving_value <= rep.upper_bound
