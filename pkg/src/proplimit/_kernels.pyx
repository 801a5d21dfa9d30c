#cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels.

Accumulation order matches the numpy fallback in ``_kernels_py`` exactly
(ascending inner index, tail-first suffix sums) so the two backends are
bit-identical.  Keep any call to exp/log out of this module: transcendental
functions live in shared numpy code.
"""

import numpy as np

cimport cython
from libc.string cimport memset

NAME = "cython"

DEF MAX_DIM = 16


def lt_chain_multiply(const double[:, :, ::1] diag, const double[:, :, ::1] low):
    """Batched product of lower-triangular factor chains.

    See ``_kernels_py.lt_chain_multiply`` for the contract; layer axis
    ascending means applied first (rightmost in the product).
    """
    cdef Py_ssize_t n_samples = diag.shape[0]
    cdef Py_ssize_t n_layers = diag.shape[1]
    cdef Py_ssize_t dim = diag.shape[2]
    if dim > MAX_DIM:
        raise ValueError(f"dimension {dim} exceeds compiled maximum {MAX_DIM}")

    out_arr = np.zeros((n_samples, dim, dim))
    cdef double[:, :, ::1] out = out_arr

    # Row-major strict-lower index map, same order as numpy.tril_indices.
    cdef Py_ssize_t[MAX_DIM * MAX_DIM] tmap
    cdef Py_ssize_t i, j, t
    t = 0
    for i in range(dim):
        for j in range(i):
            tmap[i * dim + j] = t
            t += 1

    cdef double[MAX_DIM * MAX_DIM] cur
    cdef double[MAX_DIM * MAX_DIM] lay
    cdef double[MAX_DIM * MAX_DIM] nxt
    cdef Py_ssize_t b, l, k
    cdef double acc, a_ij

    with nogil:
        for b in range(n_samples):
            memset(cur, 0, dim * dim * sizeof(double))
            for i in range(dim):
                cur[i * dim + i] = diag[b, 0, i]
                for j in range(i):
                    cur[i * dim + j] = low[b, 0, tmap[i * dim + j]]
            for l in range(1, n_layers):
                memset(lay, 0, dim * dim * sizeof(double))
                for i in range(dim):
                    lay[i * dim + i] = diag[b, l, i]
                    for j in range(i):
                        lay[i * dim + j] = low[b, l, tmap[i * dim + j]]
                for i in range(dim):
                    for k in range(dim):
                        acc = 0.0
                        for j in range(dim):
                            a_ij = lay[i * dim + j]
                            acc = acc + a_ij * cur[j * dim + k]
                        nxt[i * dim + k] = acc
                for i in range(dim * dim):
                    cur[i] = nxt[i]
            for i in range(dim):
                for k in range(dim):
                    out[b, i, k] = cur[i * dim + k]
    return out_arr


def suffix_mac(const double[::1] w, const double[::1] g, const double[::1] dw):
    """Backward suffix of ``(w[m] * g[m+1]) * dw[m]`` terms; see fallback."""
    cdef Py_ssize_t m_steps = w.shape[0]
    out_arr = np.zeros(m_steps + 1)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t m
    with nogil:
        for m in range(m_steps - 1, -1, -1):
            out[m] = out[m + 1] + (w[m] * g[m + 1]) * dw[m]
    return out_arr
