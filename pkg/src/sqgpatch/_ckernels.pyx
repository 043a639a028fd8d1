# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled O(n^2) quadrature kernels; same contracts as ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, sin, M_PI, isfinite

from .errors import SingularityError

cnp.import_array()


cdef double[::1] _chord_weights(Py_ssize_t n):
    cdef double[::1] w = np.zeros(n)
    cdef Py_ssize_t k
    for k in range(1, n):
        w[k] = 0.5 / fabs(sin(M_PI * k / n))
    return w


def transport_remainder(x, speed, f):
    cdef const double[:, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[::1] sv = np.ascontiguousarray(speed, dtype=np.float64)
    f2 = np.ascontiguousarray(np.atleast_2d(f), dtype=np.float64)
    cdef const double[:, ::1] fv = f2
    cdef Py_ssize_t n = xv.shape[1], m = fv.shape[0]
    out = np.zeros((m, n))
    cdef double[:, ::1] ov = out
    cdef double[::1] w = _chord_weights(n)
    cdef double h = 2.0 * M_PI / n
    cdef Py_ssize_t j, i, c
    cdef double dx, dy, d, kern, inv_s
    cdef int bad = 0
    with nogil:
        for j in range(n):
            inv_s = 1.0 / sv[j]
            for i in range(n):
                if i == j:
                    continue
                dx = xv[0, j] - xv[0, i]
                dy = xv[1, j] - xv[1, i]
                d = sqrt(dx * dx + dy * dy)
                if d <= 0.0:
                    bad = 1
                    break
                kern = 1.0 / d - w[(j - i + n) % n] * inv_s
                for c in range(m):
                    ov[c, j] += (fv[c, j] - fv[c, i]) * kern
            if bad:
                break
            for c in range(m):
                ov[c, j] *= h
                if not isfinite(ov[c, j]):
                    bad = 1
    if bad:
        raise SingularityError("coincident curve nodes: arc-chord quantity overflows")
    return out


def normal_remainder(x, speed, tangent, perp):
    cdef const double[:, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[::1] sv = np.ascontiguousarray(speed, dtype=np.float64)
    cdef const double[:, ::1] tv = np.ascontiguousarray(tangent, dtype=np.float64)
    cdef const double[:, ::1] pv = np.ascontiguousarray(perp, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[1]
    out = np.zeros(n)
    cdef double[::1] ov = out
    cdef double[::1] w = _chord_weights(n)
    cdef double h = 2.0 * M_PI / n
    cdef Py_ssize_t j, i
    cdef double dx, dy, d, acc, inv_s
    cdef int bad = 0
    with nogil:
        for j in range(n):
            inv_s = 1.0 / sv[j]
            acc = 0.0
            for i in range(n):
                if i == j:
                    continue
                dx = xv[0, j] - xv[0, i]
                dy = xv[1, j] - xv[1, i]
                d = sqrt(dx * dx + dy * dy)
                if d <= 0.0:
                    bad = 1
                    break
                acc += (pv[0, j] * tv[0, i] + pv[1, j] * tv[1, i]) * (1.0 / d - w[(j - i + n) % n] * inv_s)
            if bad:
                break
            ov[j] = -h * acc
    if bad:
        raise SingularityError("coincident curve nodes: arc-chord quantity overflows")
    return out


def arc_chord_table(x, speed):
    cdef const double[:, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[::1] sv = np.ascontiguousarray(speed, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[1]
    table = np.empty((n, n))
    cdef double[:, ::1] tv = table
    cdef Py_ssize_t j, m, src, half = n // 2
    cdef double dx, dy, eta
    with nogil:
        for j in range(n):
            for m in range(n):
                if m == half:
                    tv[j, m] = 1.0 / sv[j]
                    continue
                src = (j - (m - half) + 2 * n) % n
                dx = xv[0, j] - xv[0, src]
                dy = xv[1, j] - xv[1, src]
                eta = fabs(2.0 * M_PI * (m - half) / n)
                tv[j, m] = eta / sqrt(dx * dx + dy * dy)
    return table


def arc_chord_sup(x, speed):
    cdef const double[:, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[::1] sv = np.ascontiguousarray(speed, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[1]
    cdef Py_ssize_t j, i, sep
    cdef double dx, dy, d, eta, val, best = 0.0
    with nogil:
        for j in range(n):
            val = 1.0 / sv[j]
            if val > best:
                best = val
            for i in range(n):
                if i == j:
                    continue
                dx = xv[0, j] - xv[0, i]
                dy = xv[1, j] - xv[1, i]
                d = sqrt(dx * dx + dy * dy)
                sep = (j - i + n) % n
                if sep > n // 2:
                    sep = n - sep
                eta = 2.0 * M_PI * sep / n
                if d <= 0.0:
                    best = 1.0 / 0.0
                    continue
                val = eta / d
                if val > best:
                    best = val
    return best


def offcurve_sum(points, x, tangent):
    cdef const double[:, ::1] pv = np.ascontiguousarray(np.atleast_2d(points), dtype=np.float64)
    cdef const double[:, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[:, ::1] tv = np.ascontiguousarray(tangent, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[1], p = pv.shape[0]
    out = np.zeros((p, 2))
    cdef double[:, ::1] ov = out
    cdef double h = 2.0 * M_PI / n
    cdef Py_ssize_t a, i
    cdef double dx, dy, wgt, s0, s1
    with nogil:
        for a in range(p):
            s0 = 0.0
            s1 = 0.0
            for i in range(n):
                dx = pv[a, 0] - xv[0, i]
                dy = pv[a, 1] - xv[1, i]
                wgt = 1.0 / sqrt(dx * dx + dy * dy)
                s0 += tv[0, i] * wgt
                s1 += tv[1, i] * wgt
            ov[a, 0] = h * s0
            ov[a, 1] = h * s1
    return out
