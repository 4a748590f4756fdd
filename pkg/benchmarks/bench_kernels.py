"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 3]

Reports best-of-N wall time per kernel and backend, plus the largest
difference between the two backends' outputs.
"""

import argparse
import time

import numpy as np

from harmstat import _pure
from harmstat.fock import ModelSpec
from harmstat.quantum import build_block

try:
    from harmstat import _kernels
except ImportError:
    _kernels = None


def best_of(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def ql_case(dim):
    E = 2 * (dim - 1)
    h = build_block(E, ModelSpec(2))
    return np.zeros(h.dim), h.offdiag


def dopri_case(count, seed=0):
    rng = np.random.default_rng(seed)
    y0 = rng.normal(scale=0.5, size=(count, 4)) + np.array([6.0, 0.0, 3.0, 0.0])
    return y0, np.linspace(0.0, 2.0, 201)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    backends = [("pure", _pure)] + ([("compiled", _kernels)] if _kernels is not None else [])
    if _kernels is None:
        print("compiled kernels not built; timing the fallback only")

    print(f"{'kernel':<28}{'backend':<10}{'seconds':>10}{'speedup':>10}")
    cases = [(f"ql_eigh dim={d}", lambda k, d=d: k.ql_eigh(*ql_case(d))) for d in (50, 200, 400)]
    cases += [
        (f"dopri5_batch n={n}", lambda k, n=n: k.dopri5_batch(*dopri_case(n)[:1], 2, 1.0, dopri_case(n)[1], 1e-10, 1e-10))
        for n in (64, 512)
    ]
    for label, run in cases:
        times, outs = {}, {}
        for name, mod in backends:
            times[name], outs[name] = best_of(lambda: run(mod), args.repeat)
        for name, _ in backends:
            speed = times["pure"] / times[name]
            print(f"{label:<28}{name:<10}{times[name]:>10.4f}{speed:>9.1f}x")
        if len(outs) == 2:
            a, b = outs["pure"][0], outs["compiled"][0]
            print(f"{'':<28}max |pure - compiled| = {np.max(np.abs(a - b)):.2e}")


if __name__ == "__main__":
    main()
