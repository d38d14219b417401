# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled CSR propagation kernels.

Both kernels are row-parallel: every output row is written by exactly one
thread and accumulates its nonzeros in storage order, so results do not
depend on the thread count.
"""
from cython.parallel cimport prange


def csr_spmm(const int[::1] indptr, const int[::1] indices,
             const double[::1] data, const double[:, ::1] x,
             double[:, ::1] out, int nthreads=1):
    """out = A @ x for a CSR matrix A."""
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t d = x.shape[1]
    cdef Py_ssize_t i, p, k
    cdef int j
    cdef double a
    for i in prange(n, nogil=True, schedule="static", num_threads=nthreads):
        for k in range(d):
            out[i, k] = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            j = indices[p]
            a = data[p]
            for k in range(d):
                out[i, k] += a * x[j, k]


def recurrence_step(const int[::1] indptr, const int[::1] indices,
                    const double[::1] data, const double[:, ::1] prev,
                    const double[:, ::1] prev2, double scale, double shift,
                    double damp, double[:, ::1] out, int nthreads=1):
    """out = scale * (A @ prev) + shift * prev - damp * prev2.

    One pass over A per call; ``prev2`` is ignored when ``damp == 0``.
    """
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t d = prev.shape[1]
    cdef Py_ssize_t i, p, k
    cdef int j
    cdef double a
    cdef bint use_prev2 = damp != 0.0
    for i in prange(n, nogil=True, schedule="static", num_threads=nthreads):
        for k in range(d):
            out[i, k] = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            j = indices[p]
            a = data[p]
            for k in range(d):
                out[i, k] += a * prev[j, k]
        if use_prev2:
            for k in range(d):
                out[i, k] = scale * out[i, k] + shift * prev[i, k] - damp * prev2[i, k]
        else:
            for k in range(d):
                out[i, k] = scale * out[i, k] + shift * prev[i, k]
