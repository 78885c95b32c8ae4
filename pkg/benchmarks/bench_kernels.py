"""Compare the compiled and pure-numpy kernels.

    python3 benchmarks/bench_kernels.py [--repeat 3]
"""

import argparse
import time

import numpy as np

from sspriv import _backend


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    names = _backend.available()
    print(f"backends: {names} (default: {_backend.BACKEND})")

    for n in (64, 256, 512):
        x, y = rng.normal(size=(n, 3)), rng.normal(size=(n, 3))
        cost = ((x[:, None] - y[None]) ** 2).sum(-1)
        row = [f"lsap n={n:<4}"]
        totals = set()
        for name in names:
            k = _backend.get(name)
            row.append(f"{name}={_best(lambda: k.lsap(cost), args.repeat) * 1e3:9.2f} ms")
            totals.add(round(k.lsap(cost)[1], 9))
        print("  ".join(row), "" if len(totals) == 1 else "  MISMATCH")

    d = 3
    secrets = rng.uniform(0, 6, size=(20_000, d))
    lo, eps, nseg = np.zeros(d), np.ones(d), np.full(d, 3, dtype=np.int64)
    gid = np.array([0, 0, 1], dtype=np.int64)
    for metric, label in ((0, "union"), (2, "group"), (3, "lp2")):
        row = [f"grid {label:<5} 27 attackers x 20000"]
        outs = []
        for name in names:
            k = _backend.get(name)
            call = lambda: k.grid_success_counts(secrets, lo, eps, nseg, metric, gid, 2, 2.0, np.sqrt(3.0))
            row.append(f"{name}={_best(call, args.repeat) * 1e3:9.2f} ms")
            outs.append(call())
        same = all(np.array_equal(outs[0], o) for o in outs)
        print("  ".join(row), "" if same else "  MISMATCH")


if __name__ == "__main__":
    main()
