# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled model kernels; same contract as ``nsfit._kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp

cnp.import_array()


def model_values(const double[::1] p, const double[::1] grid,
                 const double[::1] ref, int n_bands):
    cdef Py_ssize_t n = grid.shape[0]
    cdef Py_ssize_t i
    cdef int k
    cdef int r_col = 3 * n_bands
    cdef double lam, u, acc
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    for i in range(n):
        lam = grid[i]
        acc = p[r_col] / (lam * lam * lam) + p[r_col + 1] * ref[i]
        for k in range(n_bands):
            u = (lam - p[3 * k + 1]) / p[3 * k + 2]
            acc += p[3 * k] * exp(-0.5 * u * u)
        o[i] = acc
    return out


def model_and_jacobian(const double[::1] p, const double[::1] grid,
                       const double[::1] ref, int n_bands):
    cdef Py_ssize_t n = grid.shape[0]
    cdef Py_ssize_t i
    cdef int k
    cdef int r_col = 3 * n_bands
    cdef double lam, inv_cube, a, c, u, e, g, acc
    out = np.empty(n, dtype=np.float64)
    jac = np.empty((n, r_col + 2), dtype=np.float64)
    cdef double[::1] o = out
    cdef double[:, ::1] J = jac
    for i in range(n):
        lam = grid[i]
        inv_cube = 1.0 / (lam * lam * lam)
        acc = p[r_col] * inv_cube + p[r_col + 1] * ref[i]
        for k in range(n_bands):
            a = p[3 * k]
            c = p[3 * k + 2]
            u = (lam - p[3 * k + 1]) / c
            e = exp(-0.5 * u * u)
            g = a * e
            acc += g
            J[i, 3 * k] = e
            J[i, 3 * k + 1] = g * u / c
            J[i, 3 * k + 2] = g * u * u / c
        J[i, r_col] = inv_cube
        J[i, r_col + 1] = ref[i]
        o[i] = acc
    return out, jac
