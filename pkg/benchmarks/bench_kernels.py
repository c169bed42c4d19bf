"""Compare the numba kernels against the pure-numpy fallbacks.

Run with ``python3 benchmarks/bench_kernels.py [--n 50000] [--repeat 3]``.
Each kernel is called once untimed first so JIT compilation is excluded;
the table reports the best of ``--repeat`` runs and checks that both
backends return the same answer.
"""

import argparse
import time

import numpy as np

from relangle._kernels import numba_impl, numpy_impl


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def cases(n, k, m, seed):
    rng = np.random.default_rng(seed)
    pts = rng.random((n, 3))
    queries = pts[rng.choice(n, size=min(n, 5000), replace=False)]
    a = rng.normal(size=(n, 3, 3))
    mats = a @ np.swapaxes(a, 1, 2)
    tree = numpy_impl.kdtree_build(pts, 16)
    nbr = numpy_impl.kdtree_knn(pts, *tree, queries, k)[0]
    centroid = pts.mean(axis=0)
    return [
        ("kdtree_build", lambda impl: impl.kdtree_build(pts, 16)),
        (f"kdtree_knn (q={len(queries)}, k={k})", lambda impl: impl.kdtree_knn(pts, *tree, queries, k)),
        ("sym3_eigh", lambda impl: impl.sym3_eigh(mats)),
        (f"neighborhood_covariances (k={k})", lambda impl: impl.neighborhood_covariances(pts, nbr)),
        (f"farthest_point_sample (m={m})", lambda impl: impl.farthest_point_sample(pts, m, centroid)),
    ]


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    if a.dtype.kind == "f":
        return np.allclose(a, b, atol=1e-9) or np.allclose(np.abs(a), np.abs(b), atol=1e-9)
    return np.array_equal(a, b)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=50_000, help="number of points / matrices")
    parser.add_argument("--k", type=int, default=30)
    parser.add_argument("--m", type=int, default=64, help="FPS sample count")
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    if numba_impl is None:
        parser.error("numba backend is disabled (unset RELANGLE_DISABLE_NUMBA)")

    print(f"n={args.n}  best of {args.repeat}")
    print(f"{'kernel':<38}{'numpy s':>10}{'numba s':>10}{'speedup':>9}  agree")
    for name, call in cases(args.n, args.k, args.m, args.seed):
        t_np, out_np = best_of(lambda: call(numpy_impl), args.repeat)
        t_nb, out_nb = best_of(lambda: call(numba_impl), args.repeat)
        print(f"{name:<38}{t_np:>10.4f}{t_nb:>10.4f}{t_np / t_nb:>8.1f}x  {same(out_np, out_nb)}")


if __name__ == "__main__":
    main()
