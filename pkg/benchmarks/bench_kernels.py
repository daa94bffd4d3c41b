#!/usr/bin/env python3
"""Benchmark the compiled assignment kernels against the numpy fallback.

Times one assignment pass per variant and backend over a synthetic corpus,
checks that both backends agree on the labels, and prints the speedups.

    python benchmarks/bench_kernels.py [--n 20000] [--dim 2000] [--k 256]
"""

import argparse
import time

import numpy as np

from sparse_kmeans import Dataset, SparseVector, init_means
from sparse_kmeans.kernels import available_backends
from sparse_kmeans.variants import MEAN_REPRESENTATION, Workspace, assign_step


def synthetic(n, dim, seed, avg_nnz=12):
    rng = np.random.default_rng(seed)
    pop = np.arange(1, dim + 1, dtype=np.float64) ** -0.8
    pop /= pop.sum()
    vectors = []
    for _ in range(n):
        nnz = int(np.clip(rng.geometric(1 / avg_nnz), 1, dim))
        terms = np.sort(rng.choice(dim, size=nnz, replace=False, p=pop)) + 1
        vals = rng.random(nnz) + 0.1
        vals /= np.sqrt(np.sum(vals * vals))
        vectors.append(SparseVector(terms.astype(np.int32), vals))
    return Dataset.from_vectors(vectors, dim, normalized=True)


def bench(ds, variant, backend, k, seed, repeats):
    means = init_means(ds, k, seed, representation=MEAN_REPRESENTATION[variant])
    workspace = Workspace()
    # warm-up builds cached layouts and the object inverted file
    asg = assign_step(variant, ds, means, backend=backend, workspace=workspace)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        assign_step(variant, ds, means, backend=backend, workspace=workspace)
        best = min(best, time.perf_counter() - t0)
    return best, asg.labels


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=20000)
    parser.add_argument("--dim", type=int, default=2000)
    parser.add_argument("--k", type=int, default=256)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    backends = available_backends()
    print(f"backends: {', '.join(backends)}")
    ds = synthetic(args.n, args.dim, args.seed)
    print(f"corpus: n={ds.n} dim={ds.dim} sum_nnz={ds.sum_nnz} k={args.k}")
    header = f"{'variant':<8}" + "".join(f"{b:>12}" for b in backends)
    if len(backends) > 1:
        header += f"{'speedup':>10}"
    print(header)
    for variant in ("IVF", "MFN", "IFN", "IFB", "TWM", "IVFD"):
        times = {}
        labels = {}
        for backend in backends:
            times[backend], labels[backend] = bench(
                ds, variant, backend, args.k, args.seed, args.repeats
            )
        row = f"{variant:<8}" + "".join(f"{times[b] * 1e3:>10.1f}ms" for b in backends)
        if len(backends) > 1:
            if not np.array_equal(labels["compiled"], labels["python"]):
                raise SystemExit(f"{variant}: backends disagree on labels")
            row += f"{times['python'] / times['compiled']:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
