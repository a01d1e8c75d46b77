"""Time the compiled and pure-Python kernels on the same workloads.

    python benchmarks/bench_kernels.py [--repeat 5]
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from stackdec import kernels
from stackdec.payoff import PayoffMatrices, build_payoff_matrices
from stackdec.scenario import paper_fixture
from stackdec.solver import brute_force_sse, solve_stackelberg


def workloads():
    rng = np.random.default_rng(0)
    random_games = [PayoffMatrices.from_arrays(rng.uniform(-10, 10, (6, 6)), rng.uniform(-10, 10, (6, 6)))
                    for _ in range(20)]
    fixture = build_payoff_matrices(paper_fixture())
    small = PayoffMatrices.from_arrays(rng.uniform(-10, 10, (4, 4)), rng.uniform(-10, 10, (4, 4)))
    return {
        "simplex: 8-action fixture SSE": lambda b: solve_stackelberg(fixture, backend=b),
        "simplex: 20 random 6x6 SSEs": lambda b: [solve_stackelberg(m, backend=b) for m in random_games],
        "grid: 4 actions, step 0.01": lambda b: brute_force_sse(small, 0.01, backend=b),
        "grid: 4 actions, step 0.005": lambda b: brute_force_sse(small, 0.005, backend=b),
    }


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    backends = sorted(kernels.available_backends())
    if "cython" not in backends:
        print("compiled extension not built; only the Python backend is timed")
    print(f"{'workload':<34}" + "".join(f"{b:>12}" for b in backends) + ("     speedup" if len(backends) == 2 else ""))
    for name, fn in workloads().items():
        best = {}
        for b in backends:
            fn(b)  # warm caches
            best[b] = min(timeit.repeat(lambda: fn(b), number=1, repeat=args.repeat))
        row = f"{name:<34}" + "".join(f"{best[b] * 1e3:>10.2f}ms" for b in backends)
        if len(backends) == 2:
            row += f"{best['python'] / best['cython']:>11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
