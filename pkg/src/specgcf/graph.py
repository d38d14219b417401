"""Bipartite adjacency construction, symmetric normalisation, and SpMM."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from . import kernels
from .dataset import InteractionDataset


@dataclass(frozen=True)
class SparseAdjacency:
    """Symmetric CSR adjacency; users occupy rows ``[0, num_users)``, items the rest."""

    matrix: sp.csr_matrix
    num_users: int

    def __post_init__(self):
        m = self.matrix.tocsr()
        m.sort_indices()
        object.__setattr__(self, "matrix", m)
        # int32 index arrays feed the compiled kernels directly
        object.__setattr__(self, "_indptr", m.indptr.astype(np.intc, copy=False))
        object.__setattr__(self, "_indices", m.indices.astype(np.intc, copy=False))
        object.__setattr__(self, "_data", m.data.astype(np.float64, copy=False))

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    @property
    def degree(self) -> np.ndarray:
        return np.diff(self.matrix.indptr).astype(np.float64)

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


@dataclass(frozen=True)
class NormalizedAdjacency(SparseAdjacency):
    """D^-1/2 A D^-1/2 with the raw degree vector kept alongside."""

    raw_degree: np.ndarray | None = None

    @property
    def degree(self) -> np.ndarray:
        return self.raw_degree


def build_adjacency(train: InteractionDataset) -> SparseAdjacency:
    """A = [[0, R], [R^T, 0]] with unit weights."""
    if len(train) == 0:
        raise ValueError("train split is empty")
    n = train.num_users + train.num_items
    item_nodes = train.items + train.num_users
    rows = np.concatenate([train.users, item_nodes])
    cols = np.concatenate([item_nodes, train.users])
    vals = np.ones(len(rows), dtype=np.float64)
    mat = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    return SparseAdjacency(mat, train.num_users)


def normalize_adjacency(adj: SparseAdjacency) -> NormalizedAdjacency:
    """Scale each stored entry (i, j) by 1 / sqrt(d_i * d_j).

    The product d_i * d_j is commutative in floating point, so the result is
    exactly symmetric. Degree-0 rows have no entries and stay empty.
    """
    m = adj.matrix.tocoo()
    deg = adj.degree
    vals = 1.0 / np.sqrt(deg[m.row] * deg[m.col])
    norm = sp.csr_matrix((vals, (m.row, m.col)), shape=m.shape)
    return NormalizedAdjacency(norm, adj.num_users, raw_degree=deg)


def spmm(adj: SparseAdjacency, x: np.ndarray, backend: str | None = None) -> np.ndarray:
    """Sparse-dense product ``adj @ x``; a 1-D ``x`` is treated as one column."""
    x = np.asarray(x, dtype=np.float64)
    vector = x.ndim == 1
    if vector:
        x = x[:, None]
    if x.shape[0] != adj.n:
        raise ValueError(f"dimension mismatch: adjacency is {adj.n} x {adj.n}, operand has {x.shape[0]} rows")
    out = kernels.csr_spmm(adj._indptr, adj._indices, adj._data, x, backend=backend)
    return out[:, 0] if vector else out


def recurrence_step(adj, prev, prev2, scale, shift, damp, backend=None):
    """Fused ``scale * adj @ prev + shift * prev - damp * prev2``."""
    return kernels.recurrence_step(adj._indptr, adj._indices, adj._data, prev, prev2,
                                   scale, shift, damp, backend=backend)


def induced_subgraph(adj: SparseAdjacency, nodes) -> SparseAdjacency:
    nodes = np.sort(np.asarray(nodes, dtype=np.int64))
    sub = adj.matrix[nodes][:, nodes]
    return SparseAdjacency(sub.tocsr(), int(np.count_nonzero(nodes < adj.num_users)))


def bfs_subgraph(adj: SparseAdjacency, seed_nodes, max_nodes: int, rng: np.random.Generator | None = None):
    """Breadth-first sample of at most ``max_nodes`` nodes.

    ``seed_nodes`` is either an explicit node list or a count of random
    non-isolated seeds drawn from ``rng``. Expansion is multi-source in seed
    order with neighbours visited in ascending index. Returns the selected
    node indices (ascending, so users still come first) and the induced
    adjacency over them.
    """
    if np.isscalar(seed_nodes):
        if rng is None:
            raise ValueError("rng is required when seed_nodes is a count")
        candidates = np.flatnonzero(np.diff(adj.matrix.indptr) > 0)
        seeds = rng.choice(candidates, size=min(int(seed_nodes), len(candidates)), replace=False).tolist()
    else:
        seeds = [int(s) for s in seed_nodes]
    if not seeds or max_nodes < len(seeds):
        raise ValueError("need max_nodes >= len(seed_nodes) > 0")

    indptr, indices = adj.matrix.indptr, adj.matrix.indices
    seen = set()
    order = []
    queue = deque()
    for s in seeds:
        if s not in seen:
            seen.add(s)
            order.append(s)
            queue.append(s)
    while queue and len(order) < max_nodes:
        v = queue.popleft()
        for w in indices[indptr[v]:indptr[v + 1]].tolist():
            if w not in seen:
                seen.add(w)
                order.append(w)
                queue.append(w)
                if len(order) >= max_nodes:
                    break
    nodes = np.sort(np.array(order, dtype=np.int64))
    return nodes, induced_subgraph(adj, nodes)


def dump_coo(adj: SparseAdjacency, path) -> None:
    """Write ``row col value`` lines (debug aid for dense cross-checks)."""
    m = adj.matrix.tocoo()
    with Path(path).open("w") as fh:
        fh.write(f"# n={adj.n} num_users={adj.num_users} nnz={m.nnz}\n")
        for r, c, v in zip(m.row.tolist(), m.col.tolist(), m.data.tolist()):
            fh.write(f"{r} {c} {v!r}\n")


def load_coo(path) -> sp.csr_matrix:
    rows, cols, vals = [], [], []
    n = None
    with Path(path).open() as fh:
        for line in fh:
            if line.startswith("#"):
                n = int(line.split("n=")[1].split()[0])
                continue
            r, c, v = line.split()
            rows.append(int(r))
            cols.append(int(c))
            vals.append(float(v))
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
