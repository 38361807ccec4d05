"""Time the compiled kernels against the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--n 1500] [--repeat 3]
"""

import argparse
import time

import numpy as np

from survbench._kernels import _py

try:
    from survbench._kernels import _fast
except ImportError:  # extension not built
    _fast = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(n, seed=0):
    rng = np.random.default_rng(seed)
    p = 20
    X = np.ascontiguousarray(rng.standard_normal((n, p)))
    t = rng.exponential(1.0, n) / np.exp(X[:, 0] - X[:, 1])
    ev = rng.random(n) < 0.7
    et = np.unique(t[ev])
    kt = np.searchsorted(et, t, side="right").astype(np.int64)
    samples = rng.integers(0, n, n)
    tree_args = (X, kt, ev.astype(np.uint8), samples, 5, 15, -1, 64, 256, 7)
    order = np.ascontiguousarray(np.argsort(X, axis=0, kind="stable"))
    node_of = rng.integers(0, 4, n).astype(np.int64)
    target = rng.standard_normal(n)
    tree = _py.grow_logrank_tree(*tree_args)[:4]
    Z = np.ascontiguousarray(rng.standard_normal((20 * n, p)))
    k = 100
    score = np.cumsum(rng.random((n, k + 1)), axis=1)
    col = rng.integers(0, k + 1, n).astype(np.int64)
    return {
        "grow_logrank_tree": lambda m: m.grow_logrank_tree(*tree_args),
        "apply_tree": lambda m: m.apply_tree(Z, *tree),
        "best_ls_splits": lambda m: m.best_ls_splits(X, order, node_of, target, 4, 1),
        "concordance_counts": lambda m: m.concordance_counts(score, col, t, ev),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=1500)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    print(f"n={args.n}, best of {args.repeat}")
    print(f"{'kernel':<22}{'python [s]':>12}{'cython [s]':>12}{'speed-up':>10}")
    for name, fn in cases(args.n).items():
        tp = best_of(lambda: fn(_py), args.repeat)
        if _fast is None:
            print(f"{name:<22}{tp:>12.4f}{'n/a':>12}{'n/a':>10}")
            continue
        tc = best_of(lambda: fn(_fast), args.repeat)
        print(f"{name:<22}{tp:>12.4f}{tc:>12.4f}{tp / tc:>9.1f}x")


if __name__ == "__main__":
    main()
