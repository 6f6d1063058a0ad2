# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_pykernels``."""
import math

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, floor

cnp.import_array()

cdef extern from *:
    int __builtin_ctzll(unsigned long long)


def mattis_energy(const double[::1] v, double J):
    cdef Py_ssize_t n = v.shape[0], j, h
    cdef double row, total = 0.0, comp = 0.0, y, t
    for j in range(n):
        row = 0.0
        for h in range(n):
            row += v[j] * v[h]
        # Neumaier-compensated accumulation over rows
        t = total + row
        if fabs(total) >= fabs(row):
            comp += (total - t) + row
        else:
            comp += (row - t) + total
        total = t
    return -J * (total + comp)


def min_partition(const double[::1] x):
    cdef Py_ssize_t n = x.shape[0], k
    cdef unsigned long long i, count, gray = 0, best_gray = 0
    cdef int b
    cdef double s = 0.0, best
    if n > 63:
        raise ValueError("too many elements for exhaustive search")
    for k in range(n):
        s += x[k]
    best = fabs(s)
    count = 1ULL << (n - 1)
    for i in range(1, count):
        b = __builtin_ctzll(i)
        gray ^= 1ULL << b
        if (gray >> b) & 1ULL:
            s -= 2.0 * x[b + 1]
        else:
            s += 2.0 * x[b + 1]
        if fabs(s) < best:
            best = fabs(s)
            best_gray = gray
    signs = np.ones(n, dtype=np.int8)
    cdef signed char[::1] sv = signs
    for k in range(1, n):
        if (best_gray >> (k - 1)) & 1ULL:
            sv[k] = -1
    xs = np.asarray(x)
    return abs(math.fsum((signs * xs).tolist())), signs


def weighted_sum(const double[:, :] a, const double[:, :] b):
    cdef Py_ssize_t ny = a.shape[0], nx = a.shape[1], i, j
    cdef double row, total = 0.0, comp = 0.0, t
    if b.shape[0] != ny or b.shape[1] != nx:
        raise ValueError("shape mismatch")
    for i in range(ny):
        row = 0.0
        for j in range(nx):
            row += a[i, j] * b[i, j]
        t = total + row
        if fabs(total) >= fabs(row):
            comp += (total - t) + row
        else:
            comp += (row - t) + total
        total = t
    return total + comp


cdef inline double _at(const double[:, :] w, Py_ssize_t i, Py_ssize_t j, Py_ssize_t ny, Py_ssize_t nx) nogil:
    if i < 0 or i >= ny or j < 0 or j >= nx:
        return 0.0
    return w[i, j]


def bilinear_shift(const double[:, :] w, double dx, double dy):
    cdef Py_ssize_t ny = w.shape[0], nx = w.shape[1], i, j
    cdef Py_ssize_t ix = <Py_ssize_t>floor(-dx), iy = <Py_ssize_t>floor(-dy)
    cdef double fx = -dx - ix, fy = -dy - iy
    out = np.zeros((ny, nx), dtype=np.float64)
    cdef double[:, ::1] o = out
    for i in range(ny):
        for j in range(nx):
            o[i, j] = ((1 - fy) * (1 - fx) * _at(w, i + iy, j + ix, ny, nx)
                       + (1 - fy) * fx * _at(w, i + iy, j + ix + 1, ny, nx)
                       + fy * (1 - fx) * _at(w, i + iy + 1, j + ix, ny, nx)
                       + fy * fx * _at(w, i + iy + 1, j + ix + 1, ny, nx))
    return out
