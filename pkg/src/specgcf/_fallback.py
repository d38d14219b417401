"""Pure numpy/scipy versions of the propagation kernels.

Signatures mirror the compiled module so either can back ``specgcf.kernels``.
"""
import numpy as np
import scipy.sparse as sp


def _as_csr(indptr, indices, data, n_cols):
    n = indptr.shape[0] - 1
    return sp.csr_matrix((data, indices, indptr), shape=(n, n_cols))


def csr_spmm(indptr, indices, data, x, out, nthreads=1):
    mat = _as_csr(indptr, indices, data, x.shape[0])
    out[...] = mat @ x


def recurrence_step(indptr, indices, data, prev, prev2, scale, shift, damp, out, nthreads=1):
    mat = _as_csr(indptr, indices, data, prev.shape[0])
    np.multiply(mat @ prev, scale, out=out)
    if shift != 0.0:
        out += shift * prev
    if damp != 0.0:
        out -= damp * prev2
