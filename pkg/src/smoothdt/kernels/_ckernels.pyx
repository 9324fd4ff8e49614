# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the functions in ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free

cnp.import_array()


cdef double _pairwise_inplace(double* buf, Py_ssize_t size) noexcept nogil:
    cdef Py_ssize_t half, k
    if size == 0:
        return 0.0
    while size > 1:
        half = size // 2
        for k in range(half):
            buf[k] = buf[2 * k] + buf[2 * k + 1]
        if size & 1:
            buf[half] = buf[size - 1]
            size = half + 1
        else:
            size = half
    return buf[0]


def pairwise_sum(values):
    cdef double[::1] a = np.array(values, dtype=np.float64, copy=True).ravel()
    cdef Py_ssize_t size = a.shape[0]
    cdef double result
    if size == 0:
        return 0.0
    with nogil:
        result = _pairwise_inplace(&a[0], size)
    return result


def subset_sums(zt, y, members_list):
    cdef const double[:, ::1] Z = np.ascontiguousarray(zt, dtype=np.float64)
    cdef const double[::1] Y = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t m = Y.shape[0]
    cdef Py_ssize_t ncand = len(members_list)
    cdef Py_ssize_t j, k, t, nmem
    out = np.empty(ncand, dtype=np.float64)
    cdef double[::1] O = out
    cdef Py_ssize_t[::1] mem
    cdef double* buf
    cdef double acc
    if m == 0:
        out[:] = 0.0
        return out
    buf = <double*> malloc(m * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    try:
        for k in range(ncand):
            mem = np.asarray(members_list[k], dtype=np.intp)
            nmem = mem.shape[0]
            with nogil:
                for j in range(m):
                    acc = Y[j]
                    for t in range(nmem):
                        acc = acc * Z[mem[t], j]
                    buf[j] = acc
                O[k] = _pairwise_inplace(buf, m)
    finally:
        free(buf)
    return out


def evaluate_tree(var, neg, pos, value, X):
    cdef const long[::1] V = np.ascontiguousarray(var, dtype=np.int_)
    cdef const long[::1] N = np.ascontiguousarray(neg, dtype=np.int_)
    cdef const long[::1] P = np.ascontiguousarray(pos, dtype=np.int_)
    cdef const signed char[::1] L = np.ascontiguousarray(value, dtype=np.int8)
    cdef const signed char[:, ::1] B = np.ascontiguousarray(X, dtype=np.int8)
    cdef Py_ssize_t rows = B.shape[0]
    out = np.empty(rows, dtype=np.int8)
    cdef signed char[::1] O = out
    cdef Py_ssize_t r
    cdef long node
    with nogil:
        for r in range(rows):
            node = 0
            while V[node] >= 0:
                if B[r, V[node]] > 0:
                    node = P[node]
                else:
                    node = N[node]
            O[r] = L[node]
    return out
