"""Wall-clock comparison of the compiled and pure-Python thinning kernels.

    python benchmarks/bench_kernels.py --n 1024 --paths 64

Both backends run the same batch, and the script checks that their outputs agree
bit for bit before reporting timings.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from dmfsim import kernels, sample_environment, tanh_model
from dmfsim.environment import DisorderLaw
from dmfsim.pdmp import default_event_budget
from dmfsim.rng import derive_key


def make_batch(n: int, paths: int, seed: int):
    m = tanh_model(DisorderLaw.rademacher(), T=1.0)
    envs = np.stack([sample_environment(m.law, n, derive_key(seed, n, i, "env")).values for i in range(paths)])
    keys = np.array([derive_key(seed, n, i, "pdmp") for i in range(paths)], dtype=np.uint64)
    x0 = np.zeros(paths)
    times = np.array([0.25, 0.5, 1.0])
    return (envs, np.arange(paths, dtype=np.int64), keys, x0, 0.0, 1.0, times,
            m.kernel_params(), 1.0, default_event_budget(m, n))


def best_of(fn, repeat: int) -> float:
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[256, 1024])
    ap.add_argument("--paths", type=int, default=32)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args(argv)
    try:
        cy = kernels.get_backend("cython")
    except ImportError:
        print("compiled kernel not built; run `pip install --no-build-isolation -e .` first")
        return 1
    py = kernels.get_backend("python")
    print(f"{'N':>6} {'paths':>6} {'events':>9} {'python s':>10} {'cython s':>10} {'speedup':>8}")
    for n in args.n:
        batch = make_batch(n, args.paths, args.seed)
        a, b = py.simulate_batch(*batch), cy.simulate_batch(*batch)
        if not all(np.array_equal(u, v, equal_nan=True) for u, v in zip(a, b)):
            print(f"backend outputs differ at N={n}")
            return 1
        t_py = best_of(lambda: py.simulate_batch(*batch), args.repeat)
        t_cy = best_of(lambda: cy.simulate_batch(*batch), args.repeat)
        events = int(np.sum(a[2]))
        print(f"{n:>6} {args.paths:>6} {events:>9} {t_py:>10.4f} {t_cy:>10.4f} {t_py / t_cy:>8.1f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
