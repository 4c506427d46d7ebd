"""Time the compiled and numpy plan-search kernels on identical random instances.

    python3 benchmarks/bench_kernels.py [--instances 200] [--horizon 5] [--rungs 5]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from ndtstream import kernels


def make_instances(n, horizon, rungs, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        bits = np.sort(rng.uniform(0.5e6, 16e6, rungs))
        util = np.log(bits / bits[0]) / np.log(bits[-1] / bits[0])
        bw = rng.uniform(0.5e6, 12e6, horizon)
        rtt = rng.uniform(0.02, 0.9, horizon)
        limits = rng.integers(0, rungs, horizon)
        state = (rng.uniform(0, 20), util[rng.integers(rungs)], bool(rng.integers(2)),
                 4.0, rng.uniform(4, 10), 2.0, 30.0, 84.0, 50.4, 16.8, 10.0)
        out.append((limits, bits, util, bw, rtt) + state)
    return out


def time_backend(name, instances, repeat):
    best = float("inf")
    results = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        results = [kernels.search_plans(*inst, backend=name) for inst in instances]
        best = min(best, time.perf_counter() - t0)
    return best / len(instances), results


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--instances", type=int, default=200)
    ap.add_argument("--horizon", type=int, default=5)
    ap.add_argument("--rungs", type=int, default=5)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    instances = make_instances(args.instances, args.horizon, args.rungs)
    print(f"plans per search: up to {args.rungs ** args.horizon}, instances: {args.instances}")
    timings = {}
    outputs = {}
    for name in kernels.BACKENDS:
        timings[name], outputs[name] = time_backend(name, instances, args.repeat)
        print(f"{name:>7}: {timings[name] * 1e6:10.1f} us per search")
    if len(timings) == 2:
        same = outputs["cython"] == outputs["python"]
        print(f"speedup: {timings['python'] / timings['cython']:.1f}x, identical results: {same}")
    else:
        print("compiled core not built; only the numpy fallback was timed")


if __name__ == "__main__":
    main()
