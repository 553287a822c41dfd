"""Compiled vs pure-Python search kernels on the same instances.

    python3 benchmarks/bench_kernels.py --n 9 --m 5 --repeats 3

Both back ends must return the same mapping, score and node count; the script
exits non-zero if they ever disagree.
"""

import argparse
import statistics
import sys
import time

from palign import kernels
from palign.estimators import branch_and_bound_align, brute_force_align
from palign.models import ModelParams, sample_instance


def timed(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        res = fn()
        times.append(time.perf_counter() - t0)
    return res, statistics.median(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=8)
    ap.add_argument("--m", type=int, default=4)
    ap.add_argument("--rho", type=float, default=0.9)
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--repeats", type=int, default=3)
    a = ap.parse_args(argv)

    if "compiled" not in kernels.BACKENDS:
        print("compiled extension not built; run `pip install -e . --no-build-isolation` first")
        return 1

    print(f"{'solver':<6} {'seed':>4} {'python s':>10} {'compiled s':>11} {'speedup':>8} {'nodes':>10}")
    ok = True
    for seed in range(a.seeds):
        inst = sample_instance(ModelParams(n=a.n, m=a.m, rho=a.rho, model="Gaussian"), seed)
        for name, solver in (("brute", brute_force_align), ("bnb", branch_and_bound_align)):
            out = {}
            for backend in ("python", "compiled"):
                out[backend] = timed(
                    lambda: solver(inst.g1, inst.g2, a.m, "NegHalfSquaredDiff", backend=backend), a.repeats)
            (rp, tp), (rc, tc) = out["python"], out["compiled"]
            same = rp.mapping == rc.mapping and rp.score == rc.score and rp.nodes == rc.nodes
            ok &= same
            print(f"{name:<6} {seed:>4} {tp:>10.4f} {tc:>11.4f} {tp / tc:>7.1f}x {rc.nodes:>10}"
                  + ("" if same else "  MISMATCH"))
    return 0 if ok else 2


if __name__ == "__main__":
    sys.exit(main())
