#!/usr/bin/env python3
"""Compare the compiled and scipy kernels on random bipartite graphs.

    python3 benchmarks/bench_kernels.py --users 20000 --items 20000 --edges 1000000 --dim 64
"""
import argparse
import time

import numpy as np

from specgcf import kernels
from specgcf.dataset import InteractionDataset
from specgcf.graph import build_adjacency, normalize_adjacency
from specgcf.polybasis import FilterParams
from specgcf.propagation import forward


def random_graph(num_users, num_items, edges, seed):
    rng = np.random.default_rng(seed)
    keys = np.unique(rng.integers(0, num_users * num_items, int(edges * 1.05)))
    keys = rng.permutation(keys)[:edges]
    return normalize_adjacency(build_adjacency(InteractionDataset(num_users, num_items, keys // num_items, keys % num_items)))


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--users", type=int, default=20000)
    p.add_argument("--items", type=int, default=20000)
    p.add_argument("--edges", type=int, default=500_000)
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--order", type=int, default=3)
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args()

    adj = random_graph(args.users, args.items, args.edges, seed=0)
    x = np.random.default_rng(1).standard_normal((adj.n, args.dim))
    fp = FilterParams(order=args.order)
    backends = ["python"] + (["cython"] if kernels._compiled is not None else [])
    print(f"n={adj.n} nnz={adj.nnz} d={args.dim} K={args.order} threads={kernels.num_threads()}")
    print(f"{'backend':<8} {'spmm ms':>10} {'step ms':>10} {'forward ms':>11}")
    base = {}
    for name in backends:
        ptr, idx, val = adj._indptr, adj._indices, adj._data
        t_spmm = best_of(lambda: kernels.csr_spmm(ptr, idx, val, x, backend=name), args.repeat)
        t_step = best_of(lambda: kernels.recurrence_step(ptr, idx, val, x, x, 1.875, 0.0, 0.75, backend=name),
                         args.repeat)
        t_fwd = best_of(lambda: forward(adj, x, fp, backend=name), args.repeat)
        base.setdefault("spmm", t_spmm)
        base.setdefault("step", t_step)
        base.setdefault("fwd", t_fwd)
        print(f"{name:<8} {1e3 * t_spmm:>10.1f} {1e3 * t_step:>10.1f} {1e3 * t_fwd:>11.1f}"
              f"   speedup x{base['spmm'] / t_spmm:.2f} / x{base['step'] / t_step:.2f} / x{base['fwd'] / t_fwd:.2f}")


if __name__ == "__main__":
    main()
