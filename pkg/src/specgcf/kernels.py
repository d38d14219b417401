"""Backend selection for the sparse propagation kernels.

The compiled extension is used when it imports; otherwise the scipy fallback
is used. Set ``SPECGCF_BACKEND=python`` to force the fallback and
``SPECGCF_THREADS`` to cap the compiled kernels' thread count.
"""
import os
import warnings

import numpy as np

from . import _fallback

BACKEND = "python"
_compiled = None

if os.environ.get("SPECGCF_BACKEND", "").lower() != "python":
    try:
        from . import _kernels as _compiled

        BACKEND = "cython"
    except ImportError as exc:  # pragma: no cover - depends on build
        warnings.warn(f"specgcf: compiled kernels unavailable ({exc}); using scipy fallback")
        _compiled = None


def num_threads():
    value = os.environ.get("SPECGCF_THREADS")
    if value:
        return max(1, int(value))
    return max(1, os.cpu_count() or 1)


def get_backend(name=None):
    """Return the kernel module for ``name`` ("cython", "python" or None for the default)."""
    if name is None:
        name = BACKEND
    if name == "python":
        return _fallback
    if name == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not built; run `pip install -e .`")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


def _check(indptr, x):
    if x.ndim != 2:
        raise ValueError(f"expected a 2-D dense matrix, got shape {x.shape}")
    if x.shape[0] != indptr.shape[0] - 1:
        raise ValueError(f"dimension mismatch: matrix has {indptr.shape[0] - 1} rows, dense operand has {x.shape[0]}")


def csr_spmm(indptr, indices, data, x, backend=None):
    x = np.ascontiguousarray(x, dtype=np.float64)
    _check(indptr, x)
    out = np.empty_like(x)
    get_backend(backend).csr_spmm(indptr, indices, data, x, out, num_threads())
    return out


def recurrence_step(indptr, indices, data, prev, prev2, scale, shift, damp, backend=None):
    """Return ``scale * A @ prev + shift * prev - damp * prev2``."""
    prev = np.ascontiguousarray(prev, dtype=np.float64)
    _check(indptr, prev)
    if prev2 is None:
        if damp != 0.0:
            raise ValueError("damp != 0 requires prev2")
        prev2 = prev
    else:
        prev2 = np.ascontiguousarray(prev2, dtype=np.float64)
        if prev2.shape != prev.shape:
            raise ValueError(f"shape mismatch: {prev.shape} vs {prev2.shape}")
    out = np.empty_like(prev)
    get_backend(backend).recurrence_step(
        indptr, indices, data, prev, prev2, float(scale), float(shift), float(damp), out, num_threads()
    )
    return out
