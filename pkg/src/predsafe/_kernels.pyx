# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels in ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


cdef inline int _clip_edge(double* px, double* py, int n,
                           double ax, double ay, double ex, double ey,
                           double* ox, double* oy) noexcept nogil:
    cdef int i, j, m = 0
    cdef double sc, sn, u
    for i in range(n):
        j = i + 1
        if j == n:
            j = 0
        sc = ex * (py[i] - ay) - ey * (px[i] - ax)
        sn = ex * (py[j] - ay) - ey * (px[j] - ax)
        if sc >= 0.0:
            ox[m] = px[i]
            oy[m] = py[i]
            m += 1
        if (sc >= 0.0) != (sn >= 0.0):
            u = sc / (sc - sn)
            ox[m] = px[i] + (px[j] - px[i]) * u
            oy[m] = py[i] + (py[j] - py[i]) * u
            m += 1
    return m


def clip_area(subjects, clips, clip_index):
    cdef double[:, :, ::1] s = np.ascontiguousarray(subjects, dtype=np.float64)
    cdef double[:, :, ::1] c = np.ascontiguousarray(clips, dtype=np.float64)
    cdef cnp.intp_t[::1] idx = np.ascontiguousarray(clip_index, dtype=np.intp)
    cdef Py_ssize_t n = s.shape[0]
    out_arr = np.zeros(n)
    cdef double[::1] out = out_arr
    cdef double ax[16]
    cdef double ay[16]
    cdef double bx[16]
    cdef double by[16]
    cdef Py_ssize_t k, b
    cdef int e, i, m, f
    cdef double area
    with nogil:
        for k in range(n):
            b = idx[k]
            for i in range(4):
                ax[i] = s[k, i, 0]
                ay[i] = s[k, i, 1]
            m = 4
            for e in range(4):
                f = e + 1
                if f == 4:
                    f = 0
                if e % 2 == 0:
                    m = _clip_edge(ax, ay, m, c[b, e, 0], c[b, e, 1],
                                   c[b, f, 0] - c[b, e, 0], c[b, f, 1] - c[b, e, 1], bx, by)
                else:
                    m = _clip_edge(bx, by, m, c[b, e, 0], c[b, e, 1],
                                   c[b, f, 0] - c[b, e, 0], c[b, f, 1] - c[b, e, 1], ax, ay)
                if m == 0:
                    break
            if m < 3:
                continue
            area = 0.0
            for i in range(m):
                f = i + 1
                if f == m:
                    f = 0
                area += ax[i] * ay[f] - ax[f] * ay[i]
            out[k] = 0.5 * fabs(area)
    return out_arr


def segment_products(ptr, cells, frac, values):
    cdef cnp.intp_t[::1] p = np.ascontiguousarray(ptr, dtype=np.intp)
    cdef cnp.intp_t[::1] cl = np.ascontiguousarray(cells, dtype=np.intp)
    cdef double[::1] fr = np.ascontiguousarray(frac, dtype=np.float64)
    cdef double[::1] v = np.ascontiguousarray(values, dtype=np.float64).ravel()
    cdef Py_ssize_t nseg = p.shape[0] - 1
    if nseg <= 0:
        return np.ones(0)
    out_arr = np.ones(nseg)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double acc
    with nogil:
        for i in range(nseg):
            if p[i + 1] == p[i]:
                continue
            acc = 1.0 - fr[p[i]] * v[cl[p[i]]]
            for j in range(p[i] + 1, p[i + 1]):
                acc = acc * (1.0 - fr[j] * v[cl[j]])
            out[i] = acc
    return out_arr
