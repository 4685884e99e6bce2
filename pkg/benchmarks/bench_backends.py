"""Compare the compiled and pure-Python kernels.

Times the exact kNN scan and the first ten SGD epochs on the same inputs
with each backend, checks that both produce identical results, and prints
a table.

    python3 benchmarks/bench_backends.py --n 2000 --repeats 3
"""
import argparse
import sys
import time

import numpy as np

from starmap import _backend, _fallback
from starmap.datasets import synth_hierarchy
from starmap.knn_graph import build_fuzzy_graph
from starmap.optimizer import make_epoch_schedule


def best_of(fn, repeats):
    times = []
    result = None
    for _ in range(repeats):
        start = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - start)
    return min(times), result


def knn_case(mod, X, k):
    return lambda: mod.knn_scan(X, k, 1)


def sgd_case(mod, Y0, S, assignment, schedule, use_stars, epochs=10, n_epochs=500):
    head, tail, per_sample = schedule

    def go():
        Y = Y0.copy()
        nxt = per_sample.copy()
        state = np.array([1234], dtype=np.uint64)
        mod.optimize_epochs(Y, S, assignment, head, tail, per_sample, nxt, 1.577, 0.895, 0.1,
                            0.4, 1e-3, 5, 1.0, n_epochs, 0, epochs, state, use_stars, 1)
        return Y
    return go


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=2000, help="points taken from synth_hierarchy")
    parser.add_argument("--k", type=int, default=20)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args(argv)

    if _backend.compiled is None:
        print("compiled kernels are not built; run `pip install -e . --no-build-isolation`",
              file=sys.stderr)
        return 1

    data = synth_hierarchy(seed=0)
    X = np.ascontiguousarray(data.X[np.linspace(0, data.n - 1, args.n).astype(int)])
    graph, _ = build_fuzzy_graph(X, args.k)
    schedule = make_epoch_schedule(graph)
    g = np.random.default_rng(0)
    Y0 = g.normal(scale=5, size=(args.n, 2))
    S = np.ascontiguousarray(g.normal(scale=5, size=(15, 2)))
    assignment = (np.arange(args.n) % 15).astype(np.int64)

    cases = [
        ("knn_scan", lambda m: knn_case(m, X, args.k)),
        ("sgd 10 epochs (umap)", lambda m: sgd_case(m, Y0, S, assignment, schedule, False)),
        ("sgd 10 epochs (starmap)", lambda m: sgd_case(m, Y0, S, assignment, schedule, True)),
    ]
    print(f"N={args.n}, k={args.k}, directed edges={schedule[0].size}, "
          f"best of {args.repeats}")
    print(f"{'kernel':<26}{'compiled [s]':>14}{'python [s]':>14}{'speedup':>10}  identical")
    for name, make in cases:
        tc, rc = best_of(make(_backend.compiled), args.repeats)
        tp, rp = best_of(make(_fallback), args.repeats)
        if isinstance(rc, tuple):
            same = all(np.array_equal(a, b) for a, b in zip(rc, rp))
        else:
            same = rc.tobytes() == rp.tobytes()
        print(f"{name:<26}{tc:>14.4f}{tp:>14.4f}{tp / tc:>9.1f}x  {same}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
