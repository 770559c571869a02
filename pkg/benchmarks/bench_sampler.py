"""Time the compiled and pure-Python Metropolis kernels on the same chain.

Usage: python3 benchmarks/bench_sampler.py [--m 32] [--n 128] [--sweeps 20]

Both kernels consume the same random stream, so the final states must agree;
the script checks that before reporting proposals per second.
"""

import argparse
import time

import numpy as np

from mbshape import _chain_py
from mbshape._rng import splitmix64_state
from mbshape.combinatorics import cell_log_factors

try:
    from mbshape import _chain
except ImportError:  # pragma: no cover
    _chain = None


def time_kernel(run, M, N, sweeps, q, seed=1):
    h = np.zeros((M, N), dtype=np.int32)
    rfac = np.ascontiguousarray(np.exp(cell_log_factors(M, N, q, 1.0, 1.0, 1.0)))
    state = splitmix64_state(seed)
    t0 = time.perf_counter()
    acc = run(h, rfac, 10 * N, sweeps * M * N, state)
    return time.perf_counter() - t0, acc, h


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--m", type=int, default=32)
    ap.add_argument("--n", type=int, default=128)
    ap.add_argument("--sweeps", type=int, default=20)
    a = ap.parse_args()
    q = float(np.exp(-1.0 / a.n))
    n_prop = a.sweeps * a.m * a.n
    tp, accp, hp = time_kernel(_chain_py.run, a.m, a.n, a.sweeps, q)
    print(f"python  {tp:8.3f} s  {n_prop / tp:12.0f} proposals/s")
    if _chain is None:
        print("cython  unavailable")
        return
    tc, accc, hc = time_kernel(_chain.run, a.m, a.n, a.sweeps, q)
    assert accp == accc and np.array_equal(hp, hc), "kernels diverged"
    print(f"cython  {tc:8.3f} s  {n_prop / tc:12.0f} proposals/s")
    print(f"speedup {tp / tc:8.1f}x  (identical final states)")


if __name__ == "__main__":
    main()
