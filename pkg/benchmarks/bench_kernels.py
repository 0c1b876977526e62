"""Time every hot kernel under numba and under the numpy fallback.

Outputs of the two backends are compared before timing; any mismatch aborts.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--quick]
"""
import argparse
import time

import numpy as np

from coalwalsh import _accel, _kernels


def _cases(quick):
    scale = 4 if quick else 1
    yield "endpoint_table n=5", lambda b: _kernels.endpoint_table(5, b)
    table = _kernels.endpoint_table(6)

    def fwht(b):
        a = table.copy()
        _kernels.fwht(a, b)
        return a

    yield "fwht 2^21", fwht
    xm = 7 if quick else 9
    yield f"walk_zero_counts x_m={xm}", lambda b: _kernels.walk_zero_counts(xm, b)
    trials = 200_000 // scale
    yield f"noise_pairs n=100 trials={trials}", lambda b: _kernels.noise_pairs(100, 0, trials, 1, 2, 3, 0.025, b)
    sx = np.repeat([0, 250, 500, 750], 3)
    sy = np.tile([8, 16, 22], 4)
    yield "flow 1000x30, 12 starts, 3 layers", lambda b: _kernels.flow(
        1000, 30, True, sx, sy, 1, 2, [5, 6, 7], [0.025] * 3, 3, b
    )
    count = 100_000 // scale
    yield f"sample_r n=200 count={count}", lambda b: _kernels.sample_r(200, 0, count, 1, 2, b)


def _same(a, b):
    if isinstance(a, tuple):
        return all(np.array_equal(x, y) for x, y in zip(a, b))
    return np.array_equal(a, b)


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--quick", action="store_true", help="smaller problem sizes")
    args = ap.parse_args()
    if not _accel.NUMBA_AVAILABLE:
        raise SystemExit("numba is not installed; nothing to compare")
    print(f"{'kernel':40s} {'numba [s]':>10s} {'numpy [s]':>10s} {'speedup':>8s}")
    for name, fn in _cases(args.quick):
        fast = fn("numba")  # also triggers compilation
        slow = fn("numpy")
        if not _same(fast, slow):
            raise SystemExit(f"{name}: backends disagree")
        t_nb = _best(lambda: fn("numba"), args.repeat)
        t_np = _best(lambda: fn("numpy"), args.repeat)
        print(f"{name:40s} {t_nb:10.4f} {t_np:10.4f} {t_np / t_nb:7.1f}x")


if __name__ == "__main__":
    main()
