"""Eigen-analysis of the normalized training adjacency against held-out interactions.

For a training graph with A_hat = U diag(lam) U^T and a held-out adjacency B,
a polynomial transform f fits B best (in Frobenius norm) when f(lam_i) tracks
t_i = u_i^T B u_i. This module computes (lam, t), correlates t with f(lam)
for several bases, and doubles as the dense reference for propagation tests.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .dataset import InteractionDataset
from .graph import bfs_subgraph, build_adjacency, normalize_adjacency
from .polybasis import FilterParams, transfer

DENSE_CAP = 4000


class DegenerateCorrelation(ValueError):
    """Pearson r is undefined (constant input or too few points)."""


@dataclass(frozen=True)
class SpectralDecomposition:
    U: np.ndarray
    Lambda: np.ndarray
    node_map: np.ndarray | None = None

    def reconstruction_error(self, mat: np.ndarray) -> float:
        ref = np.linalg.norm(mat)
        resid = np.linalg.norm(mat @ self.U - self.U * self.Lambda)
        return resid / ref if ref else resid

    def orthogonality_error(self) -> float:
        return float(np.abs(self.U.T @ self.U - np.eye(len(self.Lambda))).max())


def eigendecompose(mat, node_map=None, cap: int = DENSE_CAP) -> SpectralDecomposition:
    """Full symmetric eigensystem, eigenvalues ascending."""
    if sp.issparse(mat):
        mat = mat.toarray()
    mat = np.asarray(mat, dtype=np.float64)
    n = mat.shape[0]
    if mat.shape != (n, n):
        raise ValueError(f"expected a square matrix, got {mat.shape}")
    if n > cap:
        raise ValueError(f"{n} nodes exceeds the dense cap of {cap}; subsample with bfs_subgraph first")
    if np.abs(mat - mat.T).max(initial=0.0) > 1e-12:
        raise ValueError("matrix is not symmetric")
    lam, U = np.linalg.eigh(mat)
    return SpectralDecomposition(U=U, Lambda=lam, node_map=node_map)


def spectral_target(dec: SpectralDecomposition, B) -> np.ndarray:
    """t_i = U[:, i]^T B U[:, i] for every eigenpair."""
    if sp.issparse(B):
        BU = B @ dec.U
    else:
        B = np.asarray(B, dtype=np.float64)
        if B.shape != (len(dec.Lambda),) * 2:
            raise ValueError(f"B must be {len(dec.Lambda)} x {len(dec.Lambda)}, got {B.shape}")
        BU = B @ dec.U
    if BU.shape[0] != dec.U.shape[0]:
        raise ValueError("dimension mismatch between B and the decomposition")
    return np.einsum("ij,ij->j", dec.U, BU)


def pearson_correlation(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.size < 3:
        raise DegenerateCorrelation("need at least 3 paired points")
    xc = x - x.mean()
    yc = y - y.mean()
    sx, sy = np.sqrt(xc @ xc), np.sqrt(yc @ yc)
    scale = max(np.abs(x).max(), np.abs(y).max(), 1.0)
    if sx <= 1e-12 * scale * np.sqrt(x.size) or sy <= 1e-12 * scale * np.sqrt(y.size):
        raise DegenerateCorrelation("zero variance")
    return float(np.clip((xc @ yc) / (sx * sy), -1.0, 1.0))


def spectral_filter_oracle(dec: SpectralDecomposition, g: Callable, E0: np.ndarray) -> np.ndarray:
    """U diag(g(lam)) U^T E0, the dense reference for polynomial propagation."""
    gl = np.asarray(g(dec.Lambda), dtype=np.float64)
    return dec.U @ (gl[:, None] * (dec.U.T @ E0))


def dense_normalized(adj_matrix) -> np.ndarray:
    """D^-1/2 A D^-1/2 as a dense array, degrees taken from ``adj_matrix`` itself."""
    a = adj_matrix.toarray() if sp.issparse(adj_matrix) else np.asarray(adj_matrix, dtype=np.float64)
    deg = a.sum(axis=1)
    inv = np.zeros_like(deg)
    inv[deg > 0] = 1.0 / np.sqrt(deg[deg > 0])
    return a * inv[:, None] * inv[None, :]


@dataclass
class SpectralAnalysis:
    decomposition: SpectralDecomposition
    target: np.ndarray
    correlations: list  # (label, r or nan)

    @property
    def scatter(self) -> np.ndarray:
        return np.column_stack([self.decomposition.Lambda, self.target])


def _test_adjacency(test: InteractionDataset, n_nodes: int) -> sp.csr_matrix:
    rows = np.concatenate([test.users, test.num_users + test.items])
    cols = np.concatenate([test.num_users + test.items, test.users])
    return sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n_nodes, n_nodes))


def analyze(train: InteractionDataset, test: InteractionDataset, bases, max_nodes: int = 3000,
            seeds: int = 4, rng: np.random.Generator | None = None) -> SpectralAnalysis:
    """BFS-subsample the training graph, decompose it, and correlate every basis.

    The subgraph is renormalised with its own degrees, and B keeps only held-out
    edges with both endpoints inside the sample.
    """
    adj = build_adjacency(train)
    if max_nodes >= adj.n:
        nodes = np.arange(adj.n)
        sub = adj
    else:
        nodes, sub = bfs_subgraph(adj, seeds, max_nodes, rng if rng is not None else np.random.default_rng(0))
    a_sub = normalize_adjacency(sub).toarray()
    dec = eigendecompose(a_sub, node_map=nodes)
    B = _test_adjacency(test, adj.n)[nodes][:, nodes]
    target = spectral_target(dec, B)
    rows = []
    for fp in bases:
        try:
            r = pearson_correlation(transfer(fp, dec.Lambda), target)
        except DegenerateCorrelation:
            r = float("nan")
        rows.append((fp.label(), r))
    return SpectralAnalysis(dec, target, rows)


def correlation_table(train, test, bases, max_nodes: int = 3000, seeds: int = 4, rng=None) -> list:
    """``[(basis label, pearson r)]``; r is NaN where the transform is constant."""
    return analyze(train, test, bases, max_nodes, seeds, rng).correlations


def band_correlations(lam, target) -> dict:
    """Pearson r of (lam, t) restricted to frequency bands.

    ``outer`` is |lam| > 0.5 (low plus high frequency), ``mid`` is |lam| < 0.25.
    """
    lam = np.asarray(lam)
    target = np.asarray(target)
    bands = {
        "low": lam > 0.5,
        "high": lam < -0.5,
        "outer": np.abs(lam) > 0.5,
        "mid": np.abs(lam) < 0.25,
    }
    out = {}
    for name, mask in bands.items():
        try:
            out[name] = pearson_correlation(lam[mask], target[mask])
        except DegenerateCorrelation:
            out[name] = float("nan")
    return out


def write_scatter(path, analysis: SpectralAnalysis) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["lambda", "target"])
        for lam, t in analysis.scatter.tolist():
            w.writerow([repr(lam), repr(t)])


def write_correlations(path, rows) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["basis", "pearson_r"])
        for label, r in rows:
            w.writerow([label, "" if np.isnan(r) else repr(r)])


def parse_bases(spec: str, order: int) -> list:
    """Parse ``jacobi:1.0:1.0,monomial,chebyshev`` into FilterParams."""
    out = []
    for token in spec.split(","):
        token = token.strip()
        if not token:
            continue
        parts = token.split(":")
        name = parts[0]
        if name == "jacobi":
            a = float(parts[1]) if len(parts) > 1 else 1.0
            b = float(parts[2]) if len(parts) > 2 else a
            out.append(FilterParams(basis="jacobi", order=order, a=a, b=b))
        else:
            if len(parts) > 1:
                raise ValueError(f"basis {name!r} takes no parameters")
            out.append(FilterParams(basis=name, order=order))
    return out
