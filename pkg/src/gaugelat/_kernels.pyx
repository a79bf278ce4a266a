# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops; mirrors ``_kernels_py`` function by function."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, INFINITY

cnp.import_array()


cdef inline Py_ssize_t _locate(const double[::1] breaks, double t) noexcept nogil:
    # rightmost i with breaks[i] <= t, clipped to [0, npieces - 1]
    cdef Py_ssize_t lo = 0, hi = breaks.shape[0] - 1, mid
    if t < breaks[1]:
        return 0
    if t >= breaks[hi - 1]:
        return hi - 1
    while hi - lo > 1:
        mid = (lo + hi) >> 1
        if breaks[mid] <= t:
            lo = mid
        else:
            hi = mid
    return lo


def piece_index(breaks, t):
    cdef const double[::1] br = np.ascontiguousarray(breaks, dtype=np.float64)
    cdef const double[::1] tv = np.ascontiguousarray(t, dtype=np.float64)
    out = np.empty(tv.shape[0], dtype=np.int64)
    cdef long long[::1] o = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(tv.shape[0]):
            o[i] = _locate(br, tv[i])
    return out


def piece_masses(breaks, tags, masses):
    cdef const double[::1] br = np.ascontiguousarray(breaks, dtype=np.float64)
    cdef const double[::1] tv = np.ascontiguousarray(tags, dtype=np.float64)
    cdef const double[::1] mv = np.ascontiguousarray(masses, dtype=np.float64)
    out = np.zeros(br.shape[0] - 1, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(tv.shape[0]):
            o[_locate(br, tv[i])] += mv[i]
    return out


def piece_masses_int(breaks, tags, masses):
    cdef const double[::1] br = np.ascontiguousarray(breaks, dtype=np.float64)
    cdef const double[::1] tv = np.ascontiguousarray(tags, dtype=np.float64)
    cdef const long long[::1] mv = np.ascontiguousarray(masses, dtype=np.int64)
    out = np.zeros(br.shape[0] - 1, dtype=np.int64)
    cdef long long[::1] o = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(tv.shape[0]):
            o[_locate(br, tv[i])] += mv[i]
    return out


def step_oscillation(breaks, values, lo, hi, comp_lo, comp_hi):
    cdef const double[::1] br = np.ascontiguousarray(breaks, dtype=np.float64)
    cdef const double[:, ::1] val = np.ascontiguousarray(values, dtype=np.float64)
    cdef const double[::1] lov = np.ascontiguousarray(lo, dtype=np.float64)
    cdef const double[::1] hiv = np.ascontiguousarray(hi, dtype=np.float64)
    cdef const double[::1] cl = np.ascontiguousarray(comp_lo, dtype=np.float64)
    cdef const double[::1] ch = np.ascontiguousarray(comp_hi, dtype=np.float64)
    cdef Py_ssize_t npieces = val.shape[0], dim = val.shape[1]
    out = np.zeros((lov.shape[0], dim), dtype=np.float64)
    cdef double[:, ::1] o = out
    mx_arr = np.empty(dim, dtype=np.float64)
    mn_arr = np.empty(dim, dtype=np.float64)
    cdef double[::1] mx = mx_arr, mn = mn_arr
    cdef Py_ssize_t i, q, p, c, p0, p1
    cdef double u, v, right
    cdef bint seen
    with nogil:
        for i in range(lov.shape[0]):
            seen = False
            for q in range(cl.shape[0]):
                u = lov[i] if lov[i] > cl[q] else cl[q]
                v = hiv[i] if hiv[i] < ch[q] else ch[q]
                if u > v:
                    continue
                p0 = _locate(br, u)
                p1 = _locate(br, v)
                for p in range(p0, p1 + 1):
                    right = br[p + 1] if p < npieces - 1 else INFINITY
                    if not (br[p] <= v and right > u):
                        continue
                    if not seen:
                        for c in range(dim):
                            mx[c] = val[p, c]
                            mn[c] = val[p, c]
                        seen = True
                    else:
                        for c in range(dim):
                            if val[p, c] > mx[c]:
                                mx[c] = val[p, c]
                            if val[p, c] < mn[c]:
                                mn[c] = val[p, c]
            if seen:
                for c in range(dim):
                    o[i, c] = mx[c] - mn[c]
    return out


cdef long long _coset_tag(long long i, long long s, long long R, long long n) noexcept nogil:
    cdef long long start = i * s, b0 = (i * s) % R, fallback = -1, p, step
    if s < R:
        p = (start + s) % n
        for step in range(n):
            if ((p - b0) % R + R) % R >= s:
                if p % 2 == 1:
                    return p
                if fallback < 0:
                    fallback = p
            p = (p + 1) % n
    if fallback >= 0:
        return fallback
    for p in range(start, start + s):
        if p % 2 == 1:
            return p
    return start


def coset_tag(i, s, R, n):
    return _coset_tag(i, s, R, n)


def coset_contrast(int k, int m, int j, res_weights):
    cdef long long n = 1LL << k, R = 1LL << (k - m), s = 1LL << (k - j), cells = 1LL << j
    cdef const double[::1] w = np.ascontiguousarray(res_weights, dtype=np.float64)
    counts_arr = np.zeros(R, dtype=np.float64)
    cdef double[::1] counts = counts_arr
    tags_arr = np.empty(cells, dtype=np.int64)
    cdef long long[::1] tags = tags_arr
    cdef double sp = 2.0 ** (-k), sc = 2.0 ** (-j), vm = 0.0, vl = 0.0, a, amax, al
    cdef long long i, p, r, t
    with nogil:
        for i in range(cells):
            for r in range(R):
                counts[r] = 0.0
            for p in range(i * s, (i + 1) * s):
                counts[p % R] += 1.0
            t = _coset_tag(i, s, R, n)
            tags[i] = t
            amax = 0.0
            al = 0.0
            for r in range(R):
                a = -counts[r] * sp
                if r == t % R:
                    a += sc
                a = fabs(a)
                if a > amax:
                    amax = a
                al += a * w[r]
            vm += amax
            vl += al
    return vm, vl, tags_arr
