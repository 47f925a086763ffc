"""Acceptance suite: one test and one printed PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v`` (lines are printed even when
output capture is on) or directly with ``python3 tests/test_acceptance.py``.
"""

import math
import subprocess
import sys
import time

import numpy as np
import pytest

from fpcap import attacks
from fpcap import payoff as pf
from fpcap.cli import main as cli_main
from fpcap.oracle import oracle_solve
from fpcap.solver import solve_game, verify_solution

KS = range(2, 11)
CONJ = 1.0 / (2.0 * math.log(2.0))


def report(request, number, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}"
    capman = request.config.pluginmanager.getplugin("capturemanager") if request else None
    if capman is not None:
        with capman.global_and_fixture_disabled():
            print("\n" + line)
    else:
        print(line)
    assert ok, line


@pytest.fixture(scope="module")
def sweep():
    t0 = time.perf_counter()
    sols = {k: solve_game(k) for k in KS}
    return sols, time.perf_counter() - t0


def test_criterion_1_closed_forms(request):
    t0 = time.perf_counter()
    s1, s2 = solve_game(1), solve_game(2)
    elapsed = time.perf_counter() - t0
    ok = (abs(s1.capacity - 1.0) <= 1e-12
          and abs(s2.capacity - 0.25) <= 1e-8
          and np.max(np.abs(s2.channel.p - [0.0, 0.5, 1.0])) <= 1e-8
          and len(s2.distribution) == 1 and abs(s2.distribution.points[0] - 0.5) <= 1e-8
          and elapsed < 1.0)
    report(request, 1, ok, f"C1={s1.capacity!r}, C2={s2.capacity!r}, "
                           f"p*={s2.channel.p.tolist()}, atoms={s2.distribution.points.tolist()}, "
                           f"{elapsed:.2f}s")


def test_criterion_2_bound_sandwich(request, sweep):
    sols, elapsed = sweep
    bad = []
    t0 = time.perf_counter()
    for k, s in sols.items():
        lo, up = attacks.lower_bound(k), attacks.upper_bound(k)
        arc = attacks.arcsine_value(k)[0]
        il = attacks.interleaving_value(k)
        if not (lo <= s.capacity <= up and arc <= s.capacity <= il):
            bad.append(k)
    elapsed += time.perf_counter() - t0
    ok = not bad and elapsed < 300
    report(request, 2, ok, f"lower <= arcsine <= C <= interleaving <= upper for k=2..10 "
                           f"(violations {bad}), {elapsed:.1f}s")


def test_criterion_3_saddle_certificate(request, sweep):
    sols, _ = sweep
    gaps = {k: s.gap for k, s in sols.items()}
    failed = {k: verify_solution(s).failed() for k, s in sols.items()}
    failed = {k: f for k, f in failed.items() if f}
    ok = all(-1e-12 <= g <= 1e-8 for g in gaps.values()) and not failed
    report(request, 3, ok, f"max gap {max(gaps.values()):.2e}, verify failures {failed}")


def test_criterion_4_stationarity(request, sweep):
    sols, _ = sweep
    kkt = max(s.kkt_residual for s in sols.values())
    curv = -np.inf
    for s in sols.values():
        _, _, d2 = pf.payoff_grid_derivatives(s.distribution.points, s.channel.p)
        curv = max(curv, float(np.max(d2)))
    ok = kkt < 1e-7 and curv <= 1e-8
    report(request, 4, ok, f"max KKT residual {kkt:.2e}, max d2C/dw2 at atoms {curv:.3e}")


def test_criterion_5_symmetry(request, sweep):
    sols, _ = sweep
    sols = dict(sols)
    sols[1] = solve_game(1)
    rp = max(s.channel.symmetry_residual() for s in sols.values())
    rw = max(s.distribution.symmetry_residual() for s in sols.values())
    ok = rp < 1e-6 and rw < 1e-6
    report(request, 5, ok, f"channel residual {rp:.2e}, distribution residual {rw:.2e}")


def test_criterion_6_oracle(request, sweep):
    sols, _ = sweep
    t0 = time.perf_counter()
    diffs = {k: abs(sols[k].capacity - oracle_solve(k).capacity) for k in (2, 3)}
    elapsed = time.perf_counter() - t0
    ok = all(d < 2e-3 for d in diffs.values()) and elapsed < 120
    report(request, 6, ok, f"|solver - oracle| = {diffs}, {elapsed:.1f}s")


def test_criterion_7_payoff(request):
    rng = np.random.default_rng(7)
    form_err, grad_err = 0.0, 0.0
    h = 1e-6
    for k in range(1, 11):
        for _ in range(1000):
            w = rng.uniform(0, 1)
            p = np.concatenate([[0.0], rng.uniform(0, 1, k - 1), [1.0]])
            form_err = max(form_err, abs(pf.payoff(w, p) - pf.payoff_kl_form(w, p)))
        for _ in range(200):
            w = rng.uniform(0.01, 0.99)
            p = np.concatenate([[0.0], rng.uniform(0.01, 0.99, k - 1), [1.0]])
            fd = (pf.payoff(w + h, p) - pf.payoff(w - h, p)) / (2 * h)
            grad_err = max(grad_err, abs(pf.payoff_grad_w(w, p) - fd))
            g = pf.payoff_grad_p(w, p)
            for z in range(1, k):
                e = np.zeros(k + 1)
                e[z] = h
                fd = (pf.payoff(w, p + e) - pf.payoff(w, p - e)) / (2 * h)
                grad_err = max(grad_err, abs(g[z] - fd))
    ok = form_err < 1e-12 and grad_err < 1e-5
    report(request, 7, ok, f"entropy vs KL form {form_err:.2e}, gradient vs finite difference "
                           f"{grad_err:.2e}")


def _kolmogorov(dist):
    w, q = dist.points, dist.weights
    right = np.cumsum(q)
    arc = 2.0 / np.pi * np.arcsin(np.sqrt(w))
    return float(max(np.max(np.abs(right - arc)), np.max(np.abs(right - q - arc))))


def test_criterion_8_trends(request, sweep, tmp_path):
    sols, _ = sweep
    scaled = {k: k * k * s.capacity for k, s in sols.items()}
    dist_c = [abs(scaled[k] - CONJ) for k in range(4, 11)]
    a = (all(0.292 <= v <= 1.443 for v in scaled.values())
         and all(abs(scaled[k] - CONJ) <= 0.25 * CONJ for k in range(4, 11))
         and all(x > y for x, y in zip(dist_c, dist_c[1:])))
    dev = [float(np.max(np.abs(sols[k].channel.p - np.arange(k + 1) / k))) for k in range(5, 11)]
    b = all(y <= x for x, y in zip(dev, dev[1:]))
    ks = [_kolmogorov(sols[k].distribution) for k in range(5, 11)]
    c = all(y <= x for x, y in zip(ks, ks[1:]))
    code = cli_main(["figures", "--out", str(tmp_path)])
    files = sorted(p.name for p in tmp_path.iterdir())
    d = code == 0 and files == ["fig1.csv", "fig2_k10.csv", "fig2_k5.csv",
                                "fig3_k10.csv", "fig3_k5.csv"]
    ok = a and b and c and d
    report(request, 8, ok,
           f"(a) {'ok' if a else 'FAIL'} k^2 C = {[round(v, 4) for v in scaled.values()]}; "
           f"(b) {'ok' if b else 'FAIL'} max|p*-z/k| k=5..10 = {[round(v, 4) for v in dev]}; "
           f"(c) {'ok' if c else 'FAIL'} Kolmogorov k=5..10 = {[round(v, 4) for v in ks]}; "
           f"(figures) {'ok' if d else 'FAIL'}")


def test_criterion_9_determinism(request):
    diffs = []
    for k in range(2, 7):
        outs = [subprocess.run([sys.executable, "-m", "fpcap.cli", "solve", str(k), "--seed", "7"],
                               capture_output=True, check=True).stdout for _ in range(2)]
        if outs[0] != outs[1] or not outs[0]:
            diffs.append(k)
    report(request, 9, not diffs, f"byte-identical documents for k=2..6 (mismatches {diffs})")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
