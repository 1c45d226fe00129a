"""Compiled vs numpy kernels, timed through the public distance functions.

    python benchmarks/bench_kernels.py [--repeat 5] [--length 400] [--series 200]

Prints one row per workload: best-of-repeat time for each backend and the speedup.
"""
import argparse
import contextlib
import gc
import time

import numpy as np

from uncertts import _kernels
from uncertts.core import ErrorModel, KIND_CODE, MultiObservationSeries
from uncertts.distances import (
    DustTables,
    dust_many,
    lp_many,
    moments_many,
    munich_probability_dp,
    munich_probability_exact,
    window_filter,
)

KERNELS = ("lp_rows", "munich_count", "quantized_convolve", "weighted_window", "dust_rows", "proud_rows")


@contextlib.contextmanager
def backend(module):
    saved = {k: getattr(_kernels, k) for k in KERNELS}
    for k in KERNELS:
        setattr(_kernels, k, getattr(module, k))
    try:
        yield
    finally:
        for k, v in saved.items():
            setattr(_kernels, k, v)


def best_of(fn, repeat):
    fn()  # warm caches and lazily built tables
    times = []
    gc.disable()
    try:
        for _ in range(repeat):
            t = time.perf_counter()
            fn()
            times.append(time.perf_counter() - t)
    finally:
        gc.enable()
    return min(times)


def workloads(m, n, rng):
    C = rng.normal(size=(m, n))
    S = rng.uniform(0.2, 1.0, size=(m, n))
    q, qs = C[0].copy(), S[0].copy()
    sigma = 0.4
    kinds = np.full((m, n), KIND_CODE[ErrorModel("normal", sigma).kind], dtype=np.int8)
    stds = np.full((m, n), sigma)
    tables = DustTables()
    dust_many(q, kinds[0], stds[0], C[:1], kinds[:1], stds[:1], tables)
    X = MultiObservationSeries(tuple(rng.normal(size=5) for _ in range(5)))
    Y = MultiObservationSeries(tuple(rng.normal(size=5) for _ in range(5)))
    Xl = MultiObservationSeries(tuple(rng.normal(size=5) for _ in range(60)))
    Yl = MultiObservationSeries(tuple(rng.normal(size=5) for _ in range(60)))
    return [
        (f"euclidean {m}x{n}", lambda: lp_many(q, C, 2)),
        (f"proud moments {m}x{n}", lambda: moments_many(q, qs, C, S)),
        (f"dust {m}x{n}", lambda: dust_many(q, kinds[0], stds[0], C, kinds, stds, tables)),
        (f"uema filter w=2 {m}x{n}", lambda: window_filter(C, S, 2, 1.0)),
        ("munich exact n=5 s=5", lambda: munich_probability_exact(X, Y, 3.0)),
        ("munich dp n=60 s=5", lambda: munich_probability_dp(Xl, Yl, 11.0)),
    ]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--length", type=int, default=400)
    ap.add_argument("--series", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    found = _kernels.available_backends()
    if "cython" not in found:
        print("compiled kernels not built; only the numpy fallback is available")
    rows = []
    for name, fn in workloads(args.series, args.length, np.random.default_rng(args.seed)):
        t = {}
        for label, module in found.items():
            with backend(module):
                t[label] = best_of(fn, args.repeat)
        rows.append((name, t))

    labels = list(found)
    print(f"{'workload':28s}" + "".join(f"{lab + ' ms':>14s}" for lab in labels) + ("   speedup" if len(labels) > 1 else ""))
    for name, t in rows:
        line = f"{name:28s}" + "".join(f"{1000 * t[lab]:14.3f}" for lab in labels)
        if len(labels) > 1:
            line += f"{t['python'] / t['cython']:9.1f}x"
        print(line)


if __name__ == "__main__":
    main()
