#!/usr/bin/env python3
"""Throughput comparison of the compiled and pure-Python solver kernels.

The two backends are bit-identical (asserted here on every measured
configuration), so this benchmark is purely about speed: rounds per second
of the batch dual update and agents per second of the online pass.

Run after installing the package:

    python benchmarks/bench_backends.py [--rounds 20000] [--repeats 3]
"""

import argparse
import time

import privpack as pp
from privpack import kernels
from privpack.generators import generate_instance


def time_call(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_dmw(backends, rounds, repeats):
    spec = pp.PrivacySpec(5.0, 1e-4)
    print(f"\nbatch solver, T={rounds} rounds")
    print(f"{'n':>6} {'m':>3} {'ell':>4} | " + " | ".join(f"{b:>14}" for b in backends)
          + " | speedup")
    for n, m, ell, b in [(100, 4, 2, 25.0), (400, 4, 2, 100.0), (1000, 8, 4, 250.0)]:
        inst = generate_instance("uniform", n, m, ell, b, seed=1)
        times, objs = {}, {}
        for name in backends:
            t, res = time_call(
                lambda name=name: pp.run_dmw(inst, spec, 0.3, seed=7,
                                             t_override=rounds, backend=name),
                repeats,
            )
            times[name] = t
            objs[name] = res.report.objective
        assert len(set(objs.values())) == 1, "backends disagree"
        cells = " | ".join(f"{rounds / times[b]:>10.0f} r/s" for b in backends)
        speedup = times["python"] / times[backends[-1]] if len(backends) > 1 else 1.0
        print(f"{n:>6} {m:>3} {ell:>4} | {cells} | {speedup:5.1f}x")


def bench_domw(backends, repeats):
    spec = pp.PrivacySpec(0.1, 0.0)
    print("\nonline solver, one pass over n agents")
    print(f"{'n':>6} {'m':>3} | " + " | ".join(f"{b:>14}" for b in backends) + " | speedup")
    for n, m in [(1000, 4), (10000, 4), (100000, 8)]:
        inst = generate_instance("uniform", n, m, 2, float(n // 4), seed=2)
        times, objs = {}, {}
        for name in backends:
            t, res = time_call(
                lambda name=name: pp.run_domw(inst, spec, 0.2, seed=3, backend=name),
                repeats,
            )
            times[name] = t
            objs[name] = res.report.objective
        assert len(set(objs.values())) == 1, "backends disagree"
        cells = " | ".join(f"{n / times[b]:>10.0f} a/s" for b in backends)
        speedup = times["python"] / times[backends[-1]] if len(backends) > 1 else 1.0
        print(f"{n:>6} {m:>3} | {cells} | {speedup:5.1f}x")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--rounds", type=int, default=20000)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    backends = sorted(kernels.available_backends())  # compiled, python
    backends = [b for b in ("python", "compiled") if b in backends]
    print("available backends:", ", ".join(backends))
    if len(backends) == 1:
        print("compiled kernels not built; benchmarking the fallback only")
    bench_dmw(backends, args.rounds, args.repeats)
    bench_domw(backends, args.repeats)


if __name__ == "__main__":
    main()
