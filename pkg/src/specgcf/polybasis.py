"""Polynomial filter bases on [-1, 1]: Jacobi, Chebyshev, Legendre, monomial, Bernstein.

Every basis except Bernstein is generated by a three-term recurrence

    P_0 = 1,  P_1 = s_1 x + c_1,  P_k = (s_k x + c_k) P_{k-1} - r_k P_{k-2}

and :func:`recurrence_coeffs` returns ``(s_k, c_k, r_k)``. The same
coefficients drive both scalar evaluation here and matrix propagation in
:mod:`specgcf.propagation`, with ``x`` replaced by the normalized adjacency.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import comb

BASES = ("jacobi", "chebyshev", "legendre", "monomial", "bernstein")
MAX_ORDER = 16


@dataclass(frozen=True)
class FilterParams:
    basis: str = "jacobi"
    order: int = 3
    a: float = 1.0
    b: float = 1.0
    alpha: float = 0.1
    order_weights: tuple | None = None
    discount: float = 1.0

    def __post_init__(self):
        if self.basis not in BASES:
            raise ValueError(f"unknown basis {self.basis!r}; choose from {BASES}")
        if not 0 <= self.order <= MAX_ORDER:
            raise ValueError(f"order must be in [0, {MAX_ORDER}], got {self.order}")
        if self.a <= -1 or self.b <= -1:
            raise ValueError(f"Jacobi exponents must exceed -1, got a={self.a}, b={self.b}")
        if not 0 < self.discount <= 1:
            raise ValueError(f"discount must be in (0, 1], got {self.discount}")
        if self.order_weights is not None:
            w = tuple(float(v) for v in self.order_weights)
            if len(w) != self.order + 1:
                raise ValueError(f"need {self.order + 1} order weights, got {len(w)}")
            object.__setattr__(self, "order_weights", w)

    @property
    def weights(self) -> np.ndarray:
        if self.order_weights is None:
            return np.full(self.order + 1, 1.0 / (self.order + 1))
        return np.asarray(self.order_weights)

    @property
    def uniform(self) -> bool:
        return self.order_weights is None or np.allclose(self.order_weights, 1.0 / (self.order + 1), rtol=0, atol=1e-15)

    def effective_weights(self) -> np.ndarray:
        """Order weights with the per-order discount ``discount**k`` folded in."""
        w = self.weights
        if self.discount != 1.0:
            w = w * self.discount ** np.arange(self.order + 1)
        return w

    def label(self) -> str:
        if self.basis == "jacobi":
            return f"jacobi({self.a:g},{self.b:g})"
        return self.basis


class JacobiCoeffs(NamedTuple):
    theta: float
    theta_prime: float
    theta_double_prime: float


def jacobi_coeffs(k: int, a: float, b: float) -> JacobiCoeffs:
    """Recurrence coefficients of P_k^{a,b} for k >= 2."""
    if k < 2:
        raise ValueError(f"recurrence coefficients are defined for k >= 2, got {k}")
    s = 2 * k + a + b
    den_theta = 2 * k * (k + a + b)
    den_prime = den_theta * (s - 2)
    den_dprime = k * (k + a + b) * (s - 2)
    if den_theta == 0 or den_prime == 0 or den_dprime == 0:
        raise ZeroDivisionError(f"Jacobi recurrence singular at k={k}, a={a}, b={b}")
    theta = s * (s - 1) / den_theta
    theta_prime = (s - 1) * (a * a - b * b) / den_prime
    theta_dprime = (k + a - 1) * (k + b - 1) * s / den_dprime
    return JacobiCoeffs(theta, theta_prime, theta_dprime)


def recurrence_coeffs(basis: str, k: int, a: float = 0.0, b: float = 0.0):
    """``(scale, shift, damp)`` with P_k = (scale x + shift) P_{k-1} - damp P_{k-2}."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if basis == "monomial":
        return 1.0, 0.0, 0.0
    if basis == "chebyshev":
        return (1.0, 0.0, 0.0) if k == 1 else (2.0, 0.0, 1.0)
    if basis == "legendre":
        return (1.0, 0.0, 0.0) if k == 1 else ((2 * k - 1) / k, 0.0, (k - 1) / k)
    if basis == "jacobi":
        if k == 1:
            return (a + b + 2) / 2, (a - b) / 2, 0.0
        return tuple(jacobi_coeffs(k, a, b))
    raise ValueError(f"basis {basis!r} has no three-term recurrence")


def basis_values(params: FilterParams, x) -> np.ndarray:
    """Array of shape ``(order + 1, len(x))`` with row k holding P_k(x)."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    K = params.order
    out = np.empty((K + 1, x.size))
    if params.basis == "bernstein":
        t = (1.0 + x) / 2.0
        for k in range(K + 1):
            out[k] = comb(K, k, exact=True) * (1.0 - t) ** (K - k) * t ** k
        return out
    out[0] = 1.0
    for k in range(1, K + 1):
        scale, shift, damp = recurrence_coeffs(params.basis, k, params.a, params.b)
        out[k] = (scale * x + shift) * out[k - 1]
        if damp:
            out[k] -= damp * out[k - 2]
    return out


def eval_basis_scalar(params: FilterParams, k: int, x: float) -> float:
    if not 0 <= k <= params.order:
        raise ValueError(f"k={k} outside [0, {params.order}]")
    return float(basis_values(params, x)[k, 0])


def transfer(params: FilterParams, x) -> np.ndarray:
    """Band-stop transfer function g(x) = sum_k w_k gamma^k P_k(x)."""
    return params.effective_weights() @ basis_values(params, x)


def filter_response(params: FilterParams, mode: str, grid) -> np.ndarray:
    """Sampled response curve as an ``(n, 2)`` array of ``(x, response)`` rows.

    ``band_stop`` is g(x); ``band_pass`` is tanh(alpha - g(x)). Monomial
    curves are reported as a ratio to g(1), the low-pass maximum.
    """
    grid = np.asarray(grid, dtype=np.float64)
    if np.any(np.abs(grid) > 1.0):
        raise ValueError("grid values must lie in [-1, 1]")
    g = transfer(params, grid)
    if params.basis == "monomial":
        g = g / params.effective_weights().sum()
    if mode == "band_stop":
        resp = g
    elif mode == "band_pass":
        resp = np.tanh(params.alpha - g)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return np.column_stack([grid, resp])
