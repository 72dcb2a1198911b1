"""Compiled vs pure-Python kernel timings.

    python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from endurq import _pykernels

try:
    from endurq import _kernels
except ImportError:
    _kernels = None


def cases(mod):
    rng = np.random.default_rng(0)
    times = np.sort(rng.uniform(0, 1000, 200_000))
    idx = rng.integers(0, 8, times.size).astype(np.int64)
    ones = np.ones(times.size, dtype=np.int64)
    demands = list(rng.uniform(0.1, 2.0, 30))

    def trace():
        mod.TraceMachine(3, 8, 2**40).advance(10**7)

    def convolve():
        mod.convolve(demands, 2000)

    def buckets():
        mod.bucket_counts(times, idx, ones, 1.0, 1000, 8)

    return {"trace A(3,8)": trace, "convolve 30x2000": convolve, "bucket 2e5 events": buckets}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = [("python", _pykernels)] + ([("compiled", _kernels)] if _kernels else [])
    results = {}
    for name, mod in backends:
        for case, fn in cases(mod).items():
            results[(case, name)] = min(timeit.repeat(fn, number=1, repeat=args.repeat))
    print(f"{'kernel':<20}{'python s':>12}{'compiled s':>12}{'speedup':>10}")
    for case in cases(_pykernels):
        py = results[(case, "python")]
        comp = results.get((case, "compiled"))
        if comp is None:
            print(f"{case:<20}{py:>12.4f}{'n/a':>12}{'':>10}")
        else:
            print(f"{case:<20}{py:>12.4f}{comp:>12.4f}{py / comp:>9.1f}x")


if __name__ == "__main__":
    main()
