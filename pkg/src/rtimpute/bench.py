"""Benchmark the compiled kernel core against the pure-numpy fallback.

Run as `python -m rtimpute.bench`. Times the three hot kernels on synthetic
workloads sized like a faithful leave-one-out run and prints a comparison
table; also verifies both backends agree on every workload.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from ._kernels import pure

try:
    from ._kernels import _core as core
except ImportError:
    core = None


def _workload(n, p, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, p))
    t = np.sort(rng.exponential(5000.0, n))
    status = (rng.random(n) < 0.3).astype(float)
    beta = rng.normal(scale=0.2, size=p)
    lp = x @ beta
    return x, t, status, beta, lp


def _time(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def run(n=5000, p=8, repeat=5):
    x, t, status, beta, lp = _workload(n, p)
    status_i = status.astype(np.int64)

    cases = [
        ("cox_quantities", lambda b: lambda: b.cox_quantities(x, t, status, beta)),
        ("breslow_baseline", lambda b: lambda: b.breslow_baseline(lp, t, status)),
        ("concordance_counts", lambda b: lambda: b.concordance_counts(lp, t, status_i)),
    ]

    print(f"workload: n={n}, p={p}, best of {repeat}")
    header = f"{'kernel':<20}{'numpy':>12}{'cython':>12}{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for name, make in cases:
        t_pure, out_pure = _time(make(pure), repeat)
        if core is None:
            print(f"{name:<20}{t_pure * 1e3:>10.2f}ms{'n/a':>12}{'n/a':>10}")
            continue
        t_core, out_core = _time(make(core), repeat)
        _check_agreement(name, out_pure, out_core)
        print(
            f"{name:<20}{t_pure * 1e3:>10.2f}ms{t_core * 1e3:>10.2f}ms"
            f"{t_pure / t_core:>9.1f}x"
        )
    if core is None:
        print("compiled core unavailable; showing fallback timings only")


def _check_agreement(name, a, b):
    a = a if isinstance(a, tuple) else (a,)
    b = b if isinstance(b, tuple) else (b,)
    for u, v in zip(a, b):
        if not np.allclose(u, v, rtol=1e-9, atol=1e-12):
            raise AssertionError(f"backend mismatch in {name}")


def main(argv=None):
    parser = argparse.ArgumentParser(prog="python -m rtimpute.bench")
    parser.add_argument("--n", type=int, default=5000)
    parser.add_argument("--p", type=int, default=8)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    run(args.n, args.p, args.repeat)


if __name__ == "__main__":
    main()
