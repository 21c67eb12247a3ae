"""Compiled vs pure-Python kernels on the shipped demos.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--periods 4] [--seeds 16]

Times one long RK4 path and a batch of Poincare orbits with each backend and
prints the best-of-N wall time, per-step cost and speedup.
"""
import argparse
import time

import numpy as np

from lambstring import OscillatorState, build_map, propagate
from lambstring._backend import get_kernels
from lambstring.config import load_scenario


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_path(scn, periods, kern):
    prob = scn.problem
    t1 = periods * prob.omega0
    y, v = scn.initial_state
    return lambda: propagate(prob, OscillatorState(0.0, y, v), t1, scn.h, kernels=kern)


def bench_orbits(scn, seeds, kern):
    pmap = build_map(scn.problem, scn.h)
    ys = np.linspace(-2.0, 2.0, seeds)
    Y0 = np.column_stack([ys, ys[::-1]]) if pmap.dim == 2 else ys
    return lambda: pmap.orbits(Y0, 2, 0, kernels=kern)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--periods", type=int, default=4)
    ap.add_argument("--seeds", type=int, default=16)
    args = ap.parse_args()

    kernels = {"cython": get_kernels("cython"), "python": get_kernels("python")}
    print(f"{'case':<32}{'backend':<9}{'time [s]':>12}{'ns/step':>12}{'speedup':>10}")
    for demo in ("linear-m0", "duffing-m2"):
        scn = load_scenario(f"demo:{demo}")
        steps_per_period = round(scn.problem.omega0 / scn.h)
        cases = [
            (f"{demo} path x{args.periods}", bench_path, args.periods,
             args.periods * steps_per_period),
            (f"{demo} orbits x{args.seeds}", bench_orbits, args.seeds,
             2 * args.seeds * steps_per_period),
        ]
        for label, make, size, steps in cases:
            timings = {name: best_of(make(scn, size, k), args.repeat)
                       for name, k in kernels.items()}
            for name, t in timings.items():
                speed = timings["python"] / t
                print(f"{label:<32}{name:<9}{t:>12.4f}{1e9 * t / steps:>12.1f}{speed:>10.1f}")


if __name__ == "__main__":
    main()
