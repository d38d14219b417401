"""Polynomial filtering of the embedding table and its exact backward pass.

Forward:
    orders[k]  = gamma^k P_k(A_hat) E0                (recursive, one SpMM per order)
    band_stop  = sum_k w_k orders[k]
    band_pass  = tanh(alpha E0 - band_stop)
    final      = [band_stop | band_pass]

P_k(A_hat) is never materialised. The band-stop operator M = sum_k w_k
gamma^k P_k(A_hat) is a polynomial in a symmetric matrix, hence symmetric,
so the backward pass reuses the forward recurrence.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import comb

from .graph import SparseAdjacency, recurrence_step
from .polybasis import FilterParams, recurrence_coeffs

logger = logging.getLogger(__name__)


@dataclass
class OrderStack:
    orders: list
    band_stop: np.ndarray | None = None
    band_pass: np.ndarray | None = None
    final: np.ndarray | None = None


def iter_orders(adj: SparseAdjacency, x: np.ndarray, fp: FilterParams, backend=None):
    """Yield the undiscounted P_k(A_hat) x for k = 0..order."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != adj.n:
        raise ValueError(f"expected an ({adj.n}, d) matrix, got {x.shape}")
    K = fp.order
    if fp.basis == "bernstein":
        yield from _bernstein_orders(adj, x, K, backend)
        return
    yield x
    prev2, prev = None, x
    for k in range(1, K + 1):
        scale, shift, damp = recurrence_coeffs(fp.basis, k, fp.a, fp.b)
        cur = recurrence_step(adj, prev, prev2, scale, shift, damp, backend=backend)
        yield cur
        prev2, prev = prev, cur


def _bernstein_orders(adj, x, K, backend):
    # b_k = C(K,k) ((I - A)/2)^(K-k) ((I + A)/2)^k, costs O(K^2) products
    rising = [x]
    for _ in range(K):
        rising.append(recurrence_step(adj, rising[-1], None, 0.5, 0.5, 0.0, backend=backend))
    for k in range(K + 1):
        cur = rising[k]
        for _ in range(K - k):
            cur = recurrence_step(adj, cur, None, -0.5, 0.5, 0.0, backend=backend)
        yield comb(K, k, exact=True) * cur


def propagate_orders(adj: SparseAdjacency, E0: np.ndarray, fp: FilterParams, backend=None) -> OrderStack:
    orders = []
    for k, o in enumerate(iter_orders(adj, E0, fp, backend)):
        if fp.discount != 1.0 and k:
            o = o * fp.discount ** k
        orders.append(o)
    if logger.isEnabledFor(logging.DEBUG):
        logger.debug("order norms: %s", ", ".join(f"{v:.4g}" for v in order_norms(orders)))
    return OrderStack(orders=orders)


def order_norms(orders) -> list:
    """Frobenius norm of each order; shrinking norms flag over-smoothing."""
    if isinstance(orders, OrderStack):
        orders = orders.orders
    return [float(np.linalg.norm(o)) for o in orders]


def band_stop(stack: OrderStack, fp: FilterParams) -> np.ndarray:
    if fp.order_weights is None:
        # plain mean over orders, summed in order then divided once
        out = stack.orders[0].copy()
        for o in stack.orders[1:]:
            out += o
        return out / len(stack.orders)
    w = fp.weights
    out = w[0] * stack.orders[0]
    for k in range(1, len(stack.orders)):
        out += w[k] * stack.orders[k]
    return out


def band_pass(E0: np.ndarray, band_stop_out: np.ndarray, fp: FilterParams) -> np.ndarray:
    if not fp.uniform:
        raise ValueError("band_pass shares the band-stop aggregate and requires uniform order weights")
    return np.tanh(fp.alpha * E0 - band_stop_out)


def forward(adj: SparseAdjacency, E0: np.ndarray, fp: FilterParams, backend=None) -> OrderStack:
    E0 = np.asarray(E0, dtype=np.float64)
    stack = propagate_orders(adj, E0, fp, backend)
    stack.band_stop = band_stop(stack, fp)
    stack.band_pass = band_pass(E0, stack.band_stop, fp)
    stack.final = np.hstack([stack.band_stop, stack.band_pass])
    return stack


def apply_filter(adj: SparseAdjacency, x: np.ndarray, fp: FilterParams, backend=None) -> np.ndarray:
    """M x with M = sum_k w_k gamma^k P_k(A_hat); streams orders without storing them."""
    w = fp.effective_weights()
    out = None
    for k, o in enumerate(iter_orders(adj, x, fp, backend)):
        out = w[k] * o if out is None else out + w[k] * o
    return out


def backward(adj: SparseAdjacency, fp: FilterParams, grad_final: np.ndarray, cache: OrderStack,
             backend=None) -> np.ndarray:
    """Gradient wrt E0 given the gradient wrt ``final``.

    With H = G_pass * (1 - band_pass^2):  dE0 = M(G_stop - H) + alpha H.
    """
    d = cache.band_stop.shape[1]
    if grad_final.shape != (adj.n, 2 * d):
        raise ValueError(f"grad_final must be {(adj.n, 2 * d)}, got {grad_final.shape}")
    g_stop = grad_final[:, :d]
    h = grad_final[:, d:] * (1.0 - cache.band_pass ** 2)
    return apply_filter(adj, g_stop - h, fp, backend) + fp.alpha * h
