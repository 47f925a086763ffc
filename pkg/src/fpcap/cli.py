"""Command-line interface: ``fpcap solve | bounds | figures | verify``.

Exit codes: 0 success, 1 usage error (bad flags, unreadable input),
2 non-convergence or a failed certificate (output is still written).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import attacks
from .errors import ConvergenceError
from .payoff import CodeDistribution, CollusionChannel
from .solver import SaddleSolution, SolverOptions, solve_game, verify_solution

log = logging.getLogger("fpcap")

SCHEMA_VERSION = "1"
EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2
# solves above this size take minutes and need --allow-slow
SLOW_K = 20
FIG_DEFAULT_K = {1: list(range(2, 11)), 2: [5, 10], 3: [5, 10]}
FIG_SLOW_K = [37]
CDF_POINTS = 1001


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --------------------------------------------------------------------------
# number formatting and documents
# --------------------------------------------------------------------------

def fmt(x) -> str:
    """17 significant digits, enough to round-trip any double."""
    x = float(x)
    if not math.isfinite(x):
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return f"{x:.17g}"


_NUM = "\x00num:"


def _mark_floats(obj):
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, float):
        return _NUM + fmt(obj) if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _mark_floats(v) for k, v in obj.items()}
    return [_mark_floats(v) for v in obj]


def dumps(obj) -> str:
    """JSON with every float written at 17 significant digits."""
    text = json.dumps(_mark_floats(obj), indent=2)
    return re.sub(r'"\\u0000num:([^"]*)"', r"\1", text) + "\n"


def _timestamp(stamp: bool):
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is not None:
        t = int(epoch)
    elif stamp:
        t = int(time.time())
    else:
        return None
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(t))


def solution_document(sol: SaddleSolution, options: SolverOptions, converged: bool,
                      stamp: bool = False) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "tool": {"name": "fpcap", "version": __version__},
        "timestamp": _timestamp(stamp),
        "k": sol.k,
        "capacity_bits": float(sol.capacity),
        "converged": converged,
        "method": sol.method_tag,
        "iterations": sol.iterations,
        "channel": [float(v) for v in sol.channel.p],
        "support": [{"w": float(w), "weight": float(q)} for w, q in sol.distribution.atoms],
        "maxmin": float(sol.maxmin_value),
        "minmax": float(sol.minmax_value),
        "gap": float(sol.gap),
        "kkt_residual": float(sol.kkt_residual),
        "options": {
            "tolerance": options.tolerance,
            "w_grid": options.w_grid,
            "max_outer_iterations": options.max_outer_iterations,
            "atom_merge_distance": options.atom_merge_distance,
            "newton_enabled": options.newton_enabled,
            "seed": options.seed,
        },
    }


def read_document(text: str):
    """Parse a solution document; returns ``(solution, options)``.

    The channel and distribution are loaded without validation so that a
    corrupt document reaches the certificate checks instead of failing here.
    """
    try:
        doc = json.loads(text)
        k = int(doc["k"])
        opts = SolverOptions(**doc["options"])
        channel = CollusionChannel.unchecked([float(v) for v in doc["channel"]])
        dist = CodeDistribution.unchecked([(float(a["w"]), float(a["weight"]))
                                           for a in doc["support"]])
        sol = SaddleSolution(k=k, capacity=float(doc["capacity_bits"]), channel=channel,
                             distribution=dist, maxmin_value=float(doc["maxmin"]),
                             minmax_value=float(doc["minmax"]), gap=float(doc["gap"]),
                             kkt_residual=float(doc["kkt_residual"]),
                             iterations=int(doc.get("iterations", 0)),
                             method_tag=str(doc.get("method", "")))
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"malformed solution document: {exc}") from exc
    return sol, opts


def solution_csv(doc: dict) -> str:
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(["quantity", "index", "value"])
    for key in ("k", "capacity_bits", "maxmin", "minmax", "gap", "kkt_residual",
                "iterations", "method", "converged"):
        v = doc[key]
        out.writerow([key, "", fmt(v) if isinstance(v, float) else v])
    for z, v in enumerate(doc["channel"]):
        out.writerow(["channel", z, fmt(v)])
    for i, atom in enumerate(doc["support"]):
        out.writerow(["support_w", i, fmt(atom["w"])])
        out.writerow(["support_weight", i, fmt(atom["weight"])])
    return buf.getvalue()


def _emit(text: str, path):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _write_rows(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(header)
        for row in rows:
            out.writerow([fmt(v) if isinstance(v, float) else v for v in row])


# --------------------------------------------------------------------------
# workers (module level so they pickle)
# --------------------------------------------------------------------------

def _solve_task(args):
    k, options = args
    try:
        return solve_game(k, options), True, ""
    except ConvergenceError as exc:
        return exc.best, False, str(exc)


def _bounds_task(k):
    return attacks.bounds_report(k)


def _run_all(func, items, jobs):
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [func(i) for i in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, items))


# --------------------------------------------------------------------------
# argument helpers
# --------------------------------------------------------------------------

def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1: {text!r}")
    return v


def _k_range(text):
    m = re.fullmatch(r"\s*(\d+)\s*:\s*(\d+)\s*", text)
    if not m or not 1 <= int(m.group(1)) <= int(m.group(2)):
        raise argparse.ArgumentTypeError(f"expected A:B with 1 <= A <= B, got {text!r}")
    return list(range(int(m.group(1)), int(m.group(2)) + 1))


def _k_list(text):
    try:
        ks = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not ks or min(ks) < 1:
        raise argparse.ArgumentTypeError(f"k values must be >= 1: {text!r}")
    return ks


def _which(text):
    try:
        figs = sorted({int(t) for t in text.split(",") if t.strip()})
    except ValueError:
        figs = []
    if not figs or not set(figs) <= {1, 2, 3}:
        raise argparse.ArgumentTypeError(f"--which takes 1, 2, 3 or a comma list, got {text!r}")
    return figs


def _default_jobs():
    try:
        return max(1, int(os.environ.get("FPCAP_JOBS", "1")))
    except ValueError:
        return 1


def _options(args) -> SolverOptions:
    try:
        return SolverOptions(tolerance=args.tol, w_grid=args.grid, newton_enabled=not args.no_newton,
                             seed=args.seed, max_outer_iterations=args.max_iter)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _add_solver_flags(p):
    p.add_argument("--tol", type=float, default=1e-8, help="duality-gap target (default 1e-8)")
    p.add_argument("--grid", type=int, default=2049, help="dense w grid size (default 2049)")
    p.add_argument("--max-iter", type=int, default=200, help="outer iteration cap (default 200)")
    p.add_argument("--no-newton", action="store_true", help="skip the Newton polish")
    p.add_argument("--seed", type=int, default=0, help="seed for randomized restarts")


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_solve(args) -> int:
    options = _options(args)
    if args.k > SLOW_K and not args.allow_slow:
        raise UsageError(f"k={args.k} exceeds {SLOW_K}; pass --allow-slow")
    sol, ok, msg = _solve_task((args.k, options))
    if not ok:
        print(f"warning: {msg}", file=sys.stderr)
    doc = solution_document(sol, options, ok, args.timestamp)
    _emit(dumps(doc) if args.format == "json" else solution_csv(doc), args.out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_bounds(args) -> int:
    if args.k_range is not None and args.k is not None:
        raise UsageError("give either k or --k-range, not both")
    ks = args.k_range or ([args.k] if args.k is not None else None)
    if ks is None:
        raise UsageError("give k or --k-range A:B")
    reports = _run_all(_bounds_task, ks, args.jobs)
    header = ["k", "lower", "upper", "interleaving_value", "arcsine_value"]
    if args.format == "json":
        text = dumps([dict(zip(header, r.as_row())) for r in reports])
    else:
        buf = io.StringIO()
        out = csv.writer(buf, lineterminator="\n")
        out.writerow(header)
        for r in reports:
            out.writerow([r.k] + [fmt(v) for v in r.as_row()[1:]])
        text = buf.getvalue()
    _emit(text, args.out)
    return EXIT_OK


def _fig_k(args, fig):
    ks = list(args.k_list) if args.k_list else list(FIG_DEFAULT_K[fig])
    if not args.k_list and fig in (2, 3) and args.allow_slow:
        ks += FIG_SLOW_K
    return ks


def cmd_figures(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    options = _options(args)
    wanted = {fig: _fig_k(args, fig) for fig in args.which}
    status = EXIT_OK
    todo = sorted({k for ks in wanted.values() for k in ks})
    slow = [k for k in todo if k > SLOW_K and not args.allow_slow]
    if slow:
        print(f"warning: skipping k={slow} (slow; pass --allow-slow)", file=sys.stderr)
        status = EXIT_FAIL
    todo = [k for k in todo if k not in slow]
    results = dict(zip(todo, _run_all(_solve_task, [(k, options) for k in todo], args.jobs)))
    for k, (_, ok, msg) in results.items():
        if not ok:
            print(f"warning: k={k}: {msg}; figures use its best bracket", file=sys.stderr)
            status = EXIT_FAIL
    solved = {k: sol for k, (sol, _, _) in results.items()}

    if 1 in wanted:
        rows = [(k, float(solved[k].capacity), attacks.lower_bound(k), attacks.upper_bound(k),
                 attacks.conjectured_capacity(k)) for k in wanted[1] if k in solved]
        _write_rows(out / "fig1.csv", ["k", "capacity", "lower", "upper", "conjectured"], rows)
    for k in wanted.get(2, []):
        if k in solved:
            p = solved[k].channel.p
            _write_rows(out / f"fig2_k{k}.csv", ["z", "p_minus_interleaving"],
                        [(z, float(p[z] - z / k)) for z in range(k + 1)])
    grid = np.linspace(0.0, 1.0, CDF_POINTS)
    arcsine = 2.0 / np.pi * np.arcsin(np.sqrt(grid))
    for k in wanted.get(3, []):
        if k in solved:
            emp = solved[k].distribution.cdf(grid)
            _write_rows(out / f"fig3_k{k}.csv", ["w", "cdf_optimal", "cdf_arcsine"],
                        [(float(w), float(a), float(b)) for w, a, b in zip(grid, emp, arcsine)])
    return status


def cmd_verify(args) -> int:
    path = args.input or args.path
    if path is None:
        raise UsageError("give the solution document with --in FILE")
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    sol, options = read_document(text)
    report = verify_solution(sol, options)
    for line in report.lines():
        print(line)
    print("certificate " + ("PASSED" if report.passed else
                            "FAILED: " + ", ".join(report.failed())))
    return EXIT_OK if report.passed else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fpcap", description="Binary fingerprinting capacity C_{k,2}.")
    parser.add_argument("--version", action="version", version=f"fpcap {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log solver progress")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="solve the game for one coalition size")
    p.add_argument("k", type=_positive_int)
    _add_solver_flags(p)
    p.add_argument("--out", help="output file (default stdout)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--allow-slow", action="store_true", help=f"permit k > {SLOW_K}")
    p.add_argument("--timestamp", action="store_true",
                   help="record the current time (breaks byte-identical reruns)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bounds", help="closed-form bounds and attack values")
    p.add_argument("k", type=_positive_int, nargs="?")
    p.add_argument("--k-range", type=_k_range, metavar="A:B")
    p.add_argument("--out", help="output file (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--jobs", type=_positive_int, default=_default_jobs())
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("figures", help="write the figure datasets as CSV")
    p.add_argument("--which", type=_which, default=[1, 2, 3], metavar="1|2|3")
    p.add_argument("--k-list", type=_k_list, metavar="K1,K2,...")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--allow-slow", action="store_true",
                   help=f"include k > {SLOW_K} (k=37 takes a few seconds to a minute)")
    p.add_argument("--jobs", type=_positive_int, default=_default_jobs())
    _add_solver_flags(p)
    p.set_defaults(func=cmd_figures)

    p = sub.add_parser("verify", help="re-check the certificate of a saved solution")
    p.add_argument("path", nargs="?", help="solution document (JSON)")
    p.add_argument("--in", dest="input", help="solution document (JSON)")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"fpcap: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
