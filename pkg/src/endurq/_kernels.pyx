# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Mirrors ``_pykernels`` exactly."""

from libc.stdlib cimport malloc, realloc, free
from libc.math cimport floor

import numpy as np
cimport numpy as cnp

cnp.import_array()

ctypedef long long i64


cdef class TraceMachine:
    cdef i64 *_stack
    cdef Py_ssize_t _size, _alloc
    cdef i64 _n
    cdef readonly object cap
    cdef i64 _cap
    cdef public bint done
    cdef public bint saturated
    cdef public object steps_taken

    def __cinit__(self, m, n, cap):
        if m < 0 or n < 0 or cap < 1:
            raise ValueError("m, n must be >= 0 and cap >= 1")
        # int64 bookkeeping; caps beyond this fall back to the Python machine
        if cap >= (1 << 62) or n >= (1 << 62) or m >= (1 << 62):
            raise OverflowError("cap too large for compiled trace machine")
        self._alloc = 64
        self._stack = <i64 *> malloc(self._alloc * sizeof(i64))
        if self._stack == NULL:
            raise MemoryError()
        self._stack[0] = m
        self._size = 1
        self._n = n
        self.cap = cap
        self._cap = cap
        self.done = False
        self.saturated = False
        self.steps_taken = 0

    def __dealloc__(self):
        if self._stack != NULL:
            free(self._stack)

    cdef int _push(self, i64 v) except -1:
        cdef i64 *grown
        if self._size == self._alloc:
            grown = <i64 *> realloc(self._stack, 2 * self._alloc * sizeof(i64))
            if grown == NULL:
                raise MemoryError()
            self._stack = grown
            self._alloc *= 2
        self._stack[self._size] = v
        self._size += 1
        return 0

    def advance(self, Py_ssize_t k):
        cdef list out = []
        cdef Py_ssize_t got = 0
        cdef i64 m
        cdef i64 n = self._n
        cdef i64 cap = self._cap
        while got < k and not self.done:
            self._size -= 1
            m = self._stack[self._size]
            if m == 0:
                n += 1
                if n > cap:
                    out.append(cap)
                    got += 1
                    self.saturated = True
                    self.done = True
                    self._size = 0
                    break
                out.append(n)
                got += 1
                if self._size == 0:
                    self.done = True
            elif n == 0:
                self._push(m - 1)
                n = 1
            else:
                self._push(m - 1)
                self._push(m)
                n -= 1
        self._n = n
        self.steps_taken += got
        return out


def convolve(demands, Py_ssize_t N):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] g = np.zeros(N + 1, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] d = np.ascontiguousarray(demands, dtype=np.float64)
    cdef double[:] gv = g
    cdef double[:] dv = d
    cdef Py_ssize_t k, n
    cdef double dk
    gv[0] = 1.0
    for k in range(dv.shape[0]):
        dk = dv[k]
        for n in range(1, N + 1):
            gv[n] = gv[n] + dk * gv[n - 1]
    return g


def bucket_counts(times, system_idx, counts, double width, Py_ssize_t n_buckets, Py_ssize_t n_systems):
    cdef double[:] tv = np.ascontiguousarray(times, dtype=np.float64)
    cdef cnp.int64_t[:] sv = np.ascontiguousarray(system_idx, dtype=np.int64)
    cdef cnp.int64_t[:] cv = np.ascontiguousarray(counts, dtype=np.int64)
    out = np.zeros((n_buckets, n_systems), dtype=np.int64)
    cdef cnp.int64_t[:, :] ov = out
    cdef Py_ssize_t i, b
    for i in range(tv.shape[0]):
        b = <Py_ssize_t> floor(tv[i] / width)
        if b >= n_buckets:
            b = n_buckets - 1
        ov[b, sv[i]] += cv[i]
    return out
