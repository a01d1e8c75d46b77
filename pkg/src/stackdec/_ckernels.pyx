# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: dense simplex iterations and the simplex-grid oracle scan.

Same signatures and results as ``_pykernels``.
"""
import numpy as np

from libc.math cimport INFINITY

cdef enum:
    STATUS_OPTIMAL = 0
    STATUS_UNBOUNDED = 1
    STATUS_ITERATION_LIMIT = 2
    RULE_BLAND = 0


cdef void _pivot(double[:, ::1] T, Py_ssize_t row, Py_ssize_t col) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef Py_ssize_t nrows = T.shape[0], ncols = T.shape[1]
    cdef double p = T[row, col], f
    for j in range(ncols):
        T[row, j] = T[row, j] / p
    for i in range(nrows):
        if i == row:
            continue
        f = T[i, col]
        if f != 0.0:
            for j in range(ncols):
                T[i, j] = T[i, j] - f * T[row, j]


def pivot(double[:, ::1] T, Py_ssize_t row, Py_ssize_t col):
    _pivot(T, row, col)


def run_simplex(double[:, ::1] T, long[::1] basis, Py_ssize_t n_eligible,
                long max_iter, double tol, int rule=RULE_BLAND):
    cdef Py_ssize_t m = T.shape[0] - 1
    cdef Py_ssize_t rhs = T.shape[1] - 1
    cdef Py_ssize_t i, j, col, row
    cdef long iterations = 0
    cdef double a, ratio, best_ratio, most_negative
    cdef int status
    with nogil:
        while True:
            col = -1
            if rule == RULE_BLAND:
                for j in range(n_eligible):
                    if T[m, j] < -tol:
                        col = j
                        break
            else:
                most_negative = -tol
                for j in range(n_eligible):
                    if T[m, j] < most_negative:
                        most_negative = T[m, j]
                        col = j
            if col < 0:
                status = STATUS_OPTIMAL
                break
            if iterations >= max_iter:
                status = STATUS_ITERATION_LIMIT
                break

            row = -1
            best_ratio = 0.0
            for i in range(m):
                a = T[i, col]
                if a > tol:
                    ratio = T[i, rhs] / a
                    if (row < 0 or ratio < best_ratio - tol
                            or (ratio <= best_ratio + tol and basis[i] < basis[row])):
                        row = i
                        best_ratio = ratio
            if row < 0:
                status = STATUS_UNBOUNDED
                break

            _pivot(T, row, col)
            basis[row] = col
            iterations += 1
    return status, iterations


def grid_search(r_d, r_a, defender_idx, attacker_idx, long steps, double tie_tol):
    cdef double[:, ::1] rd = np.ascontiguousarray(r_d[np.ix_(defender_idx, attacker_idx)], dtype=np.float64)
    cdef double[:, ::1] ra = np.ascontiguousarray(r_a[np.ix_(defender_idx, attacker_idx)], dtype=np.float64)
    cdef Py_ssize_t k = rd.shape[0], na = rd.shape[1]
    cdef long[::1] counts = np.zeros(k, dtype=np.int64)
    cdef long[::1] best_counts = np.zeros(k, dtype=np.int64)
    cdef double[::1] ud = np.zeros(na, dtype=np.float64)
    cdef double[::1] ua = np.zeros(na, dtype=np.float64)
    cdef double inv = 1.0 / steps
    cdef double best_value = -INFINITY, max_ua, value, w
    cdef long used = 0, n_points = 0
    cdef Py_ssize_t i, t, p, action, best_action = -1
    with nogil:
        while True:
            counts[k - 1] = steps - used
            for t in range(na):
                ud[t] = 0.0
                ua[t] = 0.0
            for i in range(k):
                if counts[i] != 0:
                    w = counts[i] * inv
                    for t in range(na):
                        ud[t] += w * rd[i, t]
                        ua[t] += w * ra[i, t]
            max_ua = ua[0]
            for t in range(1, na):
                if ua[t] > max_ua:
                    max_ua = ua[t]
            action = -1
            value = -INFINITY
            for t in range(na):
                if ua[t] >= max_ua - tie_tol and ud[t] > value:
                    value = ud[t]
                    action = t
            n_points += 1
            if value > best_value:
                best_value = value
                best_action = action
                for i in range(k):
                    best_counts[i] = counts[i]

            # odometer over the first k-1 coordinates
            p = k - 2
            while p >= 0:
                if used < steps:
                    counts[p] += 1
                    used += 1
                    break
                used -= counts[p]
                counts[p] = 0
                p -= 1
            if p < 0:
                break
    return (np.asarray(best_counts).copy(), float(best_value),
            int(attacker_idx[best_action]), int(n_points))
