"""Benchmark of the pairwise closest-point kernel: compiled extension vs
NumPy fallback.

Usage: python benchmarks/bench_paircore.py [--repeats 5]
"""

import argparse
import math
import time

import numpy as np

from poissonflats import _paircore_py
from poissonflats.closedform import ModelParams
from poissonflats.process import SampleRegion, sample_process

try:
    from poissonflats import _paircore_cy
except ImportError:
    _paircore_cy = None

WORKLOADS = [
    # (d, k, region radius, label)
    (3, 1, 4.0, "d=3 k=1, ~50 flats"),
    (3, 1, 8.5, "d=3 k=1, ~230 flats"),
    (3, 1, 16.0, "d=3 k=1, ~800 flats"),
    (5, 2, 2.6, "d=5 k=2, ~90 flats"),
    (7, 3, 1.9, "d=7 k=3, ~100 flats"),
]


def _best_time(fn, repeats):
    best = math.inf
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    print(f"{'workload':28s} {'pairs':>8s} {'numpy':>10s} {'compiled':>10s} {'speedup':>8s}")
    for d, k, radius, label in WORKLOADS:
        params = ModelParams(d, k, t=1.0, delta=1.0)
        sample = sample_process(SampleRegion(radius), params,
                                np.random.default_rng(1234))
        call = (sample.bases, sample.anchors, 1e-9, np.inf)
        n_pairs = len(sample) * (len(sample) - 1) // 2
        t_py = _best_time(lambda: _paircore_py.pair_records(*call), args.repeats)
        if _paircore_cy is None:
            print(f"{label:28s} {n_pairs:8d} {t_py*1e3:9.2f}ms {'n/a':>10s}")
            continue
        t_cy = _best_time(lambda: _paircore_cy.pair_records(*call), args.repeats)
        print(f"{label:28s} {n_pairs:8d} {t_py*1e3:9.2f}ms {t_cy*1e3:9.2f}ms "
              f"{t_py/t_cy:7.1f}x")


if __name__ == "__main__":
    main()
