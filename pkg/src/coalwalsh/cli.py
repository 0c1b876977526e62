"""Command-line interface.

Exit codes: 0 success, 1 verification failure, 2 usage error.
Every output carries a manifest (command, parameters, seed, arithmetic
mode, version, timestamp). The timestamp is taken from ``SOURCE_DATE_EPOCH``
when set, so reruns can be byte-identical.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from collections import Counter
from fractions import Fraction

from . import __version__, _accel
from .flow_sim import GridSpec, lattice_starts, noise_correlation_mc, simulate_panels
from .oracle import ORACLE_LIMIT, brute_force_transform, memory_estimate
from .rng import SeededSource
from .sampler import sample_S_batch, walk_path
from .spectral import (
    EXACT_LIMIT,
    TimeSet,
    all_time_sets,
    arithmetic_mode,
    coefficient,
    expected_size,
    is_admissible,
    noise_correlation_exact,
    r_cumulative,
    r_distribution,
    size_distribution,
)
from .verify import run_suite

SEED_ENV = "COALWALSH_SEED"
RDIST_LIMIT = 20
ASYMPTOTIC_SIZE_CONSTANT = 4 / (3 * math.sqrt(math.pi))


class UsageError(Exception):
    pass


def _frac(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = int(epoch) if epoch else int(time.time())
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(t))


def manifest(command: str, params: dict, seed, mode) -> dict:
    return {
        "command": command,
        "params": params,
        "seed": seed,
        "mode": mode,
        "version": __version__,
        "timestamp": _timestamp(),
    }


class Output:
    """Collects text and writes it to ``--out`` or stdout in one go."""

    def __init__(self, path):
        self.path = path
        self.buf = io.StringIO()

    def write(self, text):
        self.buf.write(text)

    def json(self, obj):
        self.buf.write(json.dumps(obj, sort_keys=False) + "\n")

    def csv(self, man, header_comments, header, rows):
        self.buf.write(f"# manifest: {json.dumps(man)}\n")
        for c in header_comments:
            self.buf.write(f"# {c}\n")
        w = csv.writer(self.buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)

    def flush(self, path=None):
        target = path or self.path
        text = self.buf.getvalue()
        if target:
            with open(target, "w", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        self.buf = io.StringIO()


def _parse_sites(text: str):
    sites = []
    if not text.strip():
        return sites
    for chunk in text.split(","):
        try:
            x, y = chunk.split(":")
            sites.append((int(x), int(y)))
        except ValueError:
            raise UsageError(f"malformed site {chunk!r}; expected x:y")
    return sites


# --------------------------------------------------------------------------
# commands


def cmd_coeff(args, out):
    sites = _parse_sites(args.sites)
    try:
        w = coefficient(sites, args.n)
    except ValueError as e:
        raise UsageError(str(e))
    man = manifest("coeff", {"n": args.n, "sites": args.sites}, None, "exact")
    admissible = is_admissible(sites, args.n)
    result = {
        "n": args.n,
        "sites": [list(s) for s in sorted(sites)],
        "admissible": admissible,
        "d": str(w.d),
        "xi_hat": w.value,
        "weight": float(w.squared),
    }
    if args.format == "json":
        out.json({"manifest": man, "result": result})
    else:
        out.csv(man, [f"n={args.n}", "mode=exact"], ["sites", "admissible", "d", "xi_hat", "weight"],
                [[args.sites, admissible, result["d"], repr(result["xi_hat"]), repr(result["weight"])]])
    return 0


def cmd_verify(args, out):
    oracle = not args.no_oracle
    if oracle and args.n > ORACLE_LIMIT and not args.allow_large:
        raise UsageError(
            f"oracle checks at n={args.n} need {memory_estimate(args.n) / 2**20:.0f} MiB and "
            f"2^{args.n * (args.n + 1) // 2} evaluations; rerun with --no-oracle or --allow-large"
        )
    if args.n > 11:
        raise UsageError("exact verification is limited to n <= 11")
    if oracle:
        print(f"oracle table: {memory_estimate(args.n) / 2**20:.2f} MiB", file=sys.stderr)
    results = run_suite(args.n, oracle=oracle)
    passed = all(r.passed for r in results)
    man = manifest("verify", {"n": args.n, "oracle": oracle}, None, "exact")
    if args.format == "json":
        out.json({"manifest": man, "result": {"n": args.n, "passed": passed, "checks": [r.to_json() for r in results]}})
    else:
        out.csv(man, [f"n={args.n}", "mode=exact"], ["check", "passed", "skipped", "detail"],
                [[r.name, r.passed, r.skipped, r.detail] for r in results])
    for r in results:
        status = "skip" if r.skipped else ("pass" if r.passed else "FAIL")
        print(f"[{status}] {r.name}: {r.detail} ({r.seconds:.2f}s)", file=sys.stderr)
    if not passed:
        first = next(r for r in results if not r.passed)
        print(f"verification failed: {first.name}", file=sys.stderr)
        return 1
    return 0


def cmd_rdist(args, out):
    if args.n > RDIST_LIMIT:
        raise UsageError(f"rdist lists 2^n - 1 rows; n must be <= {RDIST_LIMIT}")
    rows = [(R.xs, r_distribution(R)) for R in all_time_sets(args.n)]
    params = {"n": args.n, "cumulative": args.cumulative}
    man = manifest("rdist", params, None, "exact")
    cumulative = None
    if args.cumulative is not None:
        try:
            law = r_cumulative(args.cumulative, args.n)
        except ValueError as e:
            raise UsageError(str(e))
        summed = sum((pr for xs, pr in rows if xs[-1] <= args.cumulative), Fraction(0))
        cumulative = {"k": args.cumulative, "summed": _frac(summed), "law": _frac(law), "equal": summed == law}
    if args.format == "json":
        result = {
            "n": args.n,
            "mode": "exact",
            "rows": [{"R": list(xs), "probability": _frac(pr), "float": float(pr)} for xs, pr in rows],
            "total": _frac(sum(pr for _, pr in rows)),
            "cumulative": cumulative,
        }
        out.json({"manifest": man, "result": result})
    else:
        comments = [f"n={args.n}", "mode=exact"]
        if cumulative:
            comments.append(f"cumulative k={cumulative['k']} summed={cumulative['summed']} law={cumulative['law']}")
        out.csv(man, comments, ["R", "probability", "float"],
                [[" ".join(map(str, xs)), _frac(pr), repr(float(pr))] for xs, pr in rows])
    return 0


def _exact_flag(args):
    return True if args.exact else (False if args.float else None)


def cmd_size(args, out):
    exact = _exact_flag(args)
    mode = arithmetic_mode(args.n, exact)
    dist = size_distribution(args.n, exact)
    mean = expected_size(args.n, exact)
    man = manifest("size", {"n": args.n}, None, mode)
    result = {
        "n": args.n,
        "mode": mode,
        "expected_size": float(mean),
        "expected_size_exact": _frac(mean) if mode == "exact" else None,
        "expected_size_over_sqrt_n": float(mean) / math.sqrt(args.n),
        "asymptotic_constant": ASYMPTOTIC_SIZE_CONSTANT,
        "distribution": [float(x) for x in dist],
        "distribution_exact": [_frac(x) for x in dist] if mode == "exact" else None,
    }
    if args.format == "json":
        out.json({"manifest": man, "result": result})
    else:
        comments = [f"n={args.n}", f"mode={mode}", f"expected_size={float(mean)!r}",
                    f"expected_size_over_sqrt_n={result['expected_size_over_sqrt_n']!r}"]
        rows = [[m, _frac(x) if mode == "exact" else "", repr(float(x))] for m, x in enumerate(dist, 1)]
        out.csv(man, comments, ["m", "probability", "float"], rows)
    return 0


def cmd_noise(args, out):
    try:
        eps = Fraction(args.eps)
    except ValueError:
        raise UsageError(f"malformed eps {args.eps!r}")
    if not 0 <= eps <= Fraction(1, 2):
        raise UsageError("eps must lie in [0, 1/2]")
    exact = _exact_flag(args)
    mode = arithmetic_mode(args.n, exact)
    value = noise_correlation_exact(args.n, eps, exact)
    report = None
    if args.mc:
        _accel.set_threads(args.threads)
        report = noise_correlation_mc(args.n, float(eps), args.mc, SeededSource(args.seed, args.stream), backend=args.backend)
    man = manifest("noise", {"n": args.n, "eps": args.eps, "mc": args.mc, "stream": args.stream}, args.seed if args.mc else None, mode)
    result = {
        "n": args.n,
        "eps": float(eps),
        "mode": mode,
        "exact": float(value),
        "exact_rational": _frac(value) if mode == "exact" else None,
        "mc": report.to_json() if report else None,
        "z_score": (report.estimate - float(value)) / report.stderr if report and report.stderr > 0 else None,
    }
    if args.format == "json":
        out.json({"manifest": man, "result": result})
    else:
        rows = [["exact", repr(float(value)), ""]]
        if report:
            rows.append(["mc", repr(report.estimate), repr(report.stderr)])
        out.csv(man, [f"n={args.n}", f"mode={mode}", f"eps={args.eps}"], ["method", "value", "stderr"], rows)
    return 0


def cmd_sample(args, out):
    if args.count < 1:
        raise UsageError("count must be positive")
    src = SeededSource(args.seed, args.stream)
    man = manifest("sample", {"n": args.n, "count": args.count, "stream": args.stream}, args.seed, "exact")
    draws = sample_S_batch(args.n, args.count, src, chunk=args.chunk, backend=args.backend)
    if args.format == "json":
        out.json({"manifest": man})
        for i, (R, S) in enumerate(draws):
            out.json({"index": i, "R": list(R.xs), "S": S.pairs})
    else:
        out.csv(man, [f"n={args.n}", "mode=exact"], ["index", "R", "S"],
                [[i, " ".join(map(str, R.xs)), " ".join(f"{x}:{y}" for x, y in S.pairs)] for i, (R, S) in enumerate(draws)])
    if args.summary:
        freq = Counter(R.xs for R, _ in draws)
        summary = Output(args.summary)
        rows = []
        for xs in sorted(freq, key=lambda t: (len(t), t)):
            expected = r_distribution(TimeSet(xs, args.n))
            rows.append([" ".join(map(str, xs)), freq[xs], repr(freq[xs] / args.count), _frac(expected), repr(float(expected) * args.count)])
        summary.csv(man, [f"n={args.n}", f"count={args.count}"], ["R", "observed", "frequency", "probability", "expected"], rows)
        summary.flush()
    if args.walk_csv:
        xm, v = walk_path(args.n, src, 0)
        ys = dict((x, y) for x, y in draws[0][1].pairs)
        walk = Output(args.walk_csv)
        walk.csv(man, [f"n={args.n}", "sample=0", f"x_m={xm}"], ["x", "V", "in_R", "y"],
                [[x, v[xm - x], int(x in ys), ys.get(x, "")] for x in range(xm + 1)])
        walk.flush()
    return 0


def _parse_grid(text):
    try:
        length, _, width = text.lower().partition("x")
        return int(length), int(width) if width else None
    except ValueError:
        raise UsageError(f"malformed grid {text!r}; expected LENGTHxWIDTH")


def _parse_eps_list(text):
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"malformed eps list {text!r}")
    if any(not 0 <= v <= 1 for v in values):
        raise UsageError("flip probabilities must lie in [0, 1]")
    return values


def cmd_flow(args, out):
    length, width = _parse_grid(args.grid)
    boundary = args.boundary or ("reflect" if width else "unbounded")
    try:
        grid = GridSpec(length, width, boundary)
    except ValueError as e:
        raise UsageError(str(e))
    if "x" in args.starts.lower() and ":" not in args.starts:
        rows, cols = (int(v) for v in args.starts.lower().split("x"))
        starts = lattice_starts(grid, rows, cols)
        layout = f"evenly spaced {rows}x{cols} lattice"
    else:
        starts = _parse_sites(args.starts)
        layout = "explicit"
    eps_list = _parse_eps_list(args.eps)
    try:
        panels = simulate_panels(grid, starts, SeededSource(args.seed, args.stream), eps_list, backend=args.backend)
    except ValueError as e:
        raise UsageError(str(e))
    params = {"grid": grid.to_json(), "starts": [list(s) for s in panels[0].starts], "start_layout": layout,
              "eps": eps_list, "stream": args.stream}
    man = manifest("flow", params, args.seed, "float")
    if args.format == "json":
        result = {
            "grid": grid.to_json(),
            "starts": [list(s) for s in panels[0].starts],
            "panels": [
                {
                    "panel": k,
                    "eps_levels": list(r.eps_levels),
                    "endpoints": r.endpoints().tolist(),
                    "distinct_endpoints": len(set(r.endpoints().tolist())),
                    "merge_times": r.merge_times.tolist(),
                    "trajectories": [r.path(i).tolist() for i in range(len(r.starts))],
                }
                for k, r in enumerate(panels)
            ],
        }
        out.json({"manifest": man, "result": result})
        return 0
    for k, r in enumerate(panels):
        comments = [f"panel={k}", f"eps_levels={','.join(map(str, r.eps_levels))}", f"boundary={grid.boundary}",
                    f"start_layout={layout}"]
        out.csv(man, comments, ["start_id", "x", "position"], list(r.csv_rows()))
        if args.out:
            root, ext = os.path.splitext(args.out)
            out.flush(f"{root}_panel{k}{ext or '.csv'}")
    return 0


def cmd_transform(args, out):
    try:
        T = brute_force_transform(args.n, allow_large=args.allow_large, backend=args.backend)
    except ValueError as e:
        raise UsageError(str(e))
    print(f"oracle table: {memory_estimate(args.n) / 2**20:.2f} MiB", file=sys.stderr)
    if args.dump:
        T.dump(args.dump)
    if args.format == "json":
        try:
            payload = T.to_json()
        except ValueError as e:
            if args.dump:
                payload = {"n": args.n, "dump": args.dump}
            else:
                raise UsageError(str(e))
        out.json({"manifest": manifest("transform", {"n": args.n}, None, "exact"), "result": payload})
    return 0


# --------------------------------------------------------------------------


def _common(p, seeded=False):
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", help="write output here instead of stdout")
    p.add_argument("--seed", type=int, default=int(os.environ.get(SEED_ENV, "0")),
                   help=f"random seed (default: ${SEED_ENV} or 0)")
    p.add_argument("--backend", choices=("numba", "numpy"), default=None)
    p.add_argument("--threads", type=int, default=None, help="numba worker threads; results do not depend on it")
    if seeded:
        p.add_argument("--stream", type=int, default=0)


def build_parser():
    parser = argparse.ArgumentParser(prog="coalwalsh", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("coeff", help="exact coefficient of one site set")
    p.add_argument("n", type=int)
    p.add_argument("sites", help='sites as "x:y,x:y,..."')
    _common(p)
    p.set_defaults(func=cmd_coeff)

    p = sub.add_parser("verify", help="run the exact certification suite")
    p.add_argument("n", type=int)
    p.add_argument("--no-oracle", action="store_true", help="skip brute-force checks")
    p.add_argument("--allow-large", action="store_true", help="run the oracle above n=6 (memory grows as 2^(n(n+1)/2))")
    _common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("rdist", help="exact law of the time projection")
    p.add_argument("n", type=int)
    p.add_argument("--cumulative", type=int, default=None, metavar="K")
    _common(p)
    p.set_defaults(func=cmd_rdist)

    for name, func, helptext in (("size", cmd_size, "law and mean of |R|"), ("noise", cmd_noise, "noise correlation E[xi xi_eps]")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("n", type=int)
        if name == "noise":
            p.add_argument("eps", help="flip probability in [0, 1/2], decimal or fraction")
            p.add_argument("--mc", type=int, default=0, metavar="TRIALS", help="also run a Monte Carlo estimate")
        mode = p.add_mutually_exclusive_group()
        mode.add_argument("--exact", action="store_true", help=f"force exact arithmetic (default for n <= {EXACT_LIMIT})")
        mode.add_argument("--float", action="store_true", help="force double precision")
        _common(p, seeded=True)
        p.set_defaults(func=func)

    p = sub.add_parser("sample", help="draw spectral sets")
    p.add_argument("n", type=int)
    p.add_argument("count", type=int)
    p.add_argument("--summary", help="CSV of empirical vs exact frequencies of R")
    p.add_argument("--walk-csv", help="CSV of the backward walk for sample 0")
    p.add_argument("--chunk", type=int, default=4096)
    _common(p, seeded=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("flow", help="simulate coalescing walks under chained perturbations")
    p.add_argument("--grid", default="1000x30", help="LENGTHxWIDTH, or LENGTH for an unbounded grid")
    p.add_argument("--boundary", choices=("reflect", "unbounded"), default=None)
    p.add_argument("--starts", default="4x3", help='ROWSxCOLS lattice or explicit "x:y,..."')
    p.add_argument("--eps", default="0,0.025,0.025,0.025", help="comma-separated flip layers, applied cumulatively")
    _common(p, seeded=True)
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("transform", help="brute-force Walsh-Hadamard transform (oracle)")
    p.add_argument("n", type=int)
    p.add_argument("--dump", help="binary dump path")
    p.add_argument("--allow-large", action="store_true")
    _common(p)
    p.set_defaults(func=cmd_transform)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "n", 1) is not None and getattr(args, "n", 1) < 1:
        parser.error("n must be at least 1")
    _accel.set_threads(args.threads)
    out = Output(args.out)
    try:
        code = args.func(args, out)
    except UsageError as e:
        print(f"coalwalsh {args.command}: error: {e}", file=sys.stderr)
        return 2
    if out.buf.getvalue():
        out.flush()
    return code


if __name__ == "__main__":
    sys.exit(main())
