"""Benchmark the association kernel: numba @njit loops vs the numpy fallback.

Runs the same workload through both implementations and prints per-call
timings. The numba path includes a warm-up call so JIT compilation does not
pollute the numbers.

    python benchmarks/bench_association.py [--users 400] [--uavs 12] [--reps 200]
"""
import argparse
import time

import numpy as np

from aircell._accel import HAVE_NUMBA
from aircell.kernels import _associate_loops, _associate_numpy


def make_workload(n_users, n_uavs, seed=0):
    rng = np.random.default_rng(seed)
    ux = rng.uniform(0, 1000, n_users)
    uy = rng.uniform(0, 1000, n_users)
    px = rng.uniform(0, 1000, n_uavs)
    py = rng.uniform(0, 1000, n_uavs)
    ph = rng.uniform(50, 300, n_uavs)
    alive = np.ones(n_uavs, dtype=bool)
    return (ux, uy, px, py, ph, alive, 0.1, 2.0, 1e-16, 10**0.5)


def time_impl(fn, args, reps):
    fn(*args)  # warm-up (JIT compilation / cache touch)
    start = time.perf_counter()
    for _ in range(reps):
        serving, sinr = fn(*args)
    elapsed = time.perf_counter() - start
    return elapsed / reps, serving, sinr


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--users", type=int, default=400)
    parser.add_argument("--uavs", type=int, default=12)
    parser.add_argument("--reps", type=int, default=200)
    args = parser.parse_args()

    workload = make_workload(args.users, args.uavs)
    print(f"workload: {args.users} users x {args.uavs} UAVs, {args.reps} reps")

    numpy_time, s_np, v_np = time_impl(_associate_numpy, workload, args.reps)
    print(f"numpy fallback : {numpy_time * 1e6:10.1f} us/call")

    if not HAVE_NUMBA:
        print("numba not installed; skipping the jit path")
        return

    from numba import njit

    jit_fn = njit(cache=True)(_associate_loops)
    jit_time, s_jit, v_jit = time_impl(jit_fn, workload, args.reps)
    print(f"numba @njit    : {jit_time * 1e6:10.1f} us/call")
    print(f"speedup        : {numpy_time / jit_time:10.2f}x")

    assert np.array_equal(s_np, s_jit), "implementations disagree on association"
    assert np.allclose(v_np, v_jit, rtol=1e-12), "implementations disagree on SINR"
    print("outputs agree (serving identical, SINR within 1e-12 relative)")


if __name__ == "__main__":
    main()
