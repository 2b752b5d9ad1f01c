"""Times the numba kernels against their pure-numpy fallbacks.

Run with ``python benchmarks/bench_kernels.py``. The same workloads hit both
backends directly (no env flag needed), so the comparison is in-process and
the active-backend column shows what the package actually uses.
"""

import time

import numpy as np

from strokekit import _accel
from strokekit.forest import fit_forest
from strokekit.synth import generate_cohort
from strokekit.tree import TrainConfig


def timeit(fn, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_split_search():
    rng = np.random.default_rng(1)
    n, f, k = 20000, 12, 3
    X = np.ascontiguousarray(rng.normal(size=(n, f)))
    y = rng.integers(0, k, size=n).astype(np.int64)
    idx = np.arange(n, dtype=np.int64)
    feats = np.arange(f, dtype=np.int64)

    def run(kernel):
        return lambda: kernel(X, y, idx, feats, k, 1)

    return "best-split search (20k rows x 12 features)", run


def bench_routing(forest, X):
    t = forest.trees[0]

    def run(kernel):
        return lambda: kernel(t.children_left, t.children_right, t.feature,
                              t.threshold, X)

    return "leaf routing (25k rows, one depth-12 tree)", run


def bench_treeshap(forest, X):
    t = forest.trees[0]
    value = np.ascontiguousarray(t.class_value(2))
    cover = t.n_samples.astype(np.float64)

    def run(kernel):
        def go():
            for i in range(200):
                kernel(t.children_left, t.children_right, t.feature,
                       t.threshold, cover, value, X[i], t.n_features)
        return go

    return "treeshap (200 rows, one depth-12 tree)", run


def main():
    print(f"active backend: {_accel.BACKEND}")
    cohort = generate_cohort(n=25000, seed=3)
    forest = fit_forest(cohort, TrainConfig(n_trees=4, max_depth=12, seed=1))
    X = np.ascontiguousarray(cohort.values)

    pairs = [
        (bench_split_search(), (_accel._best_split_gini_nb if _accel.NUMBA_ENABLED else None,
                                _accel._best_split_gini_py)),
        (bench_routing(forest, X), (_accel._route_leaves_nb if _accel.NUMBA_ENABLED else None,
                                    _accel._route_leaves_py)),
        (bench_treeshap(forest, X), (_accel._treeshap_nb if _accel.NUMBA_ENABLED else None,
                                     _accel._treeshap_py)),
    ]

    header = f"{'workload':<48} {'numba':>10} {'numpy':>10} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for (name, make), (nb, py) in pairs:
        t_py = timeit(make(py))
        if nb is not None:
            make(nb)()  # compile outside the timed region
            t_nb = timeit(make(nb))
            print(f"{name:<48} {t_nb * 1e3:>8.1f}ms {t_py * 1e3:>8.1f}ms {t_py / t_nb:>7.1f}x")
        else:
            print(f"{name:<48} {'n/a':>10} {t_py * 1e3:>8.1f}ms {'':>8}")


if __name__ == "__main__":
    main()
