import os
import subprocess
import sys

import numpy as np
import pytest

from specgcf import kernels
from specgcf.polybasis import FilterParams
from specgcf.propagation import forward

from conftest import random_norm_adj

needs_compiled = pytest.mark.skipif(kernels._compiled is None, reason="compiled kernels not built")


def csr(adj):
    return adj._indptr, adj._indices, adj._data


@needs_compiled
@pytest.mark.parametrize("d", [1, 7, 64])
def test_spmm_backends_agree(d, rng):
    adj = random_norm_adj(80, 120, 0.05, seed=d)
    x = rng.standard_normal((adj.n, d))
    fast = kernels.csr_spmm(*csr(adj), x, backend="cython")
    slow = kernels.csr_spmm(*csr(adj), x, backend="python")
    np.testing.assert_allclose(fast, slow, rtol=1e-13, atol=1e-15)


@needs_compiled
@pytest.mark.parametrize("coeffs", [(1.0, 0.0, 0.0), (2.0, 0.0, 1.0), (1.875, 0.3, 0.75), (-0.5, 0.5, 0.0)])
def test_recurrence_backends_agree(coeffs, rng):
    adj = random_norm_adj(50, 70, 0.08, seed=3)
    prev, prev2 = rng.standard_normal((2, adj.n, 5))
    got = [kernels.recurrence_step(*csr(adj), prev, prev2, *coeffs, backend=b) for b in ("cython", "python")]
    scale, shift, damp = coeffs
    expected = scale * (adj.toarray() @ prev) + shift * prev - damp * prev2
    for g in got:
        np.testing.assert_allclose(g, expected, rtol=1e-12, atol=1e-13)


@needs_compiled
def test_thread_count_does_not_change_result(monkeypatch, rng):
    adj = random_norm_adj(300, 400, 0.02, seed=1)
    x = rng.standard_normal((adj.n, 16))
    results = []
    for threads in ("1", "2", "4"):
        monkeypatch.setenv("SPECGCF_THREADS", threads)
        results.append(kernels.recurrence_step(*csr(adj), x, x, 1.5, 0.1, 0.5, backend="cython"))
    assert all(np.array_equal(results[0], r) for r in results[1:])


def test_empty_rows_give_zero(rng):
    adj = random_norm_adj(10, 30, 0.05, seed=2, connect=False)
    x = rng.standard_normal((adj.n, 3))
    empty = np.diff(adj._indptr) == 0
    assert empty.any()
    out = kernels.csr_spmm(*csr(adj), x)
    assert not out[empty].any()


def test_damp_requires_prev2(small_adj):
    x = np.ones((small_adj.n, 2))
    with pytest.raises(ValueError):
        kernels.recurrence_step(*csr(small_adj), x, None, 1.0, 0.0, 0.5)


def test_unknown_backend(small_adj):
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


def test_thread_env(monkeypatch):
    monkeypatch.setenv("SPECGCF_THREADS", "3")
    assert kernels.num_threads() == 3
    monkeypatch.delenv("SPECGCF_THREADS")
    assert kernels.num_threads() >= 1


def test_env_forces_fallback():
    code = "import specgcf.kernels as k; print(k.BACKEND)"
    env = dict(os.environ, SPECGCF_BACKEND="python")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@needs_compiled
def test_forward_backends_agree(rng):
    adj = random_norm_adj(40, 60, 0.1, seed=8)
    E0 = rng.standard_normal((adj.n, 6))
    for basis in ("jacobi", "chebyshev", "bernstein"):
        fp = FilterParams(basis=basis, order=4, a=0.5, b=1.5)
        fast = forward(adj, E0, fp, backend="cython").final
        slow = forward(adj, E0, fp, backend="python").final
        np.testing.assert_allclose(fast, slow, rtol=1e-12, atol=1e-13)
