# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. Signatures mirror ``_pykernels`` exactly."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, pow, exp, floor, fabs

cnp.import_array()

ctypedef unsigned long long u64


cdef inline double _root(double s, int p) noexcept nogil:
    if p == 1:
        return s
    if p == 2:
        return sqrt(s)
    return pow(s, 1.0 / p)


cdef inline double _ipow(double d, int p) noexcept nogil:
    cdef double r = d
    cdef int k
    for k in range(p - 1):
        r *= d
    return r


def lp_rows(const double[::1] q, const double[:, ::1] C, int p):
    cdef Py_ssize_t m = C.shape[0], n = C.shape[1], i, j
    cdef double s
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(m):
            s = 0.0
            for j in range(n):
                s += _ipow(fabs(q[j] - C[i, j]), p)
            o[i] = _root(s, p)
    return out


cdef u64 _count(const double* vals, const Py_ssize_t* off, Py_ssize_t n,
                Py_ssize_t depth, double partial, double eps, int p,
                const u64* tail_size) noexcept nogil:
    cdef double lo = partial, hi = partial
    cdef Py_ssize_t k, j
    cdef u64 total = 0, sub
    if depth == n:
        return 1 if _root(partial, p) <= eps else 0
    # sequential accumulation keeps the bounds bit-consistent with the leaves
    for k in range(depth, n):
        lo += vals[off[k]]
        hi += vals[off[k + 1] - 1]
    if _root(lo, p) > eps:
        return 0
    if _root(hi, p) <= eps:
        return tail_size[depth]
    for j in range(off[depth], off[depth + 1]):
        sub = _count(vals, off, n, depth + 1, partial + vals[j], eps, p, tail_size)
        if sub == 0:
            # zero means even the minimal completion failed; terms are sorted
            break
        total += sub
    return total


def munich_count(const double[::1] vals, const Py_ssize_t[::1] offsets, double eps, int p):
    cdef Py_ssize_t n = offsets.shape[0] - 1, k
    tails = np.ones(n + 1, dtype=np.uint64)
    cdef u64[::1] t = tails
    for k in range(n - 1, -1, -1):
        t[k] = t[k + 1] * <u64>(offsets[k + 1] - offsets[k])
    cdef u64 result
    with nogil:
        result = _count(&vals[0], &offsets[0], n, 0, 0.0, eps, p, &t[0])
    return int(result)


def quantized_convolve(const Py_ssize_t[::1] idx, const double[::1] weights,
                       const Py_ssize_t[::1] offsets, Py_ssize_t cap):
    cdef Py_ssize_t n = offsets.shape[0] - 1, i, j, a, q
    cur_arr = np.zeros(cap + 1, dtype=np.float64)
    nxt_arr = np.zeros(cap + 1, dtype=np.float64)
    cdef double[::1] cur = cur_arr, nxt = nxt_arr, tmp
    cdef double w
    cur[0] = 1.0
    with nogil:
        for i in range(n):
            nxt[:] = 0.0
            for j in range(offsets[i], offsets[i + 1]):
                q = idx[j]
                w = weights[j]
                for a in range(cap + 1):
                    if cur[a] != 0.0:
                        if a + q < cap:
                            nxt[a + q] += w * cur[a]
                        else:
                            nxt[cap] += w * cur[a]
            tmp = cur
            cur = nxt
            nxt = tmp
    return np.asarray(cur).copy()


def weighted_window(const double[:, ::1] V, const double[:, ::1] A,
                    const double[:, ::1] B, Py_ssize_t w, double lam):
    cdef Py_ssize_t m = V.shape[0], n = V.shape[1], r, i, j, lo, hi
    cdef double num, den, k
    out = np.empty((m, n), dtype=np.float64)
    cdef double[:, ::1] o = out
    kern_arr = np.exp(-lam * np.abs(np.arange(-w, w + 1, dtype=np.float64)))
    cdef double[::1] kern = kern_arr
    with nogil:
        for r in range(m):
            for i in range(n):
                lo = i - w if i >= w else 0
                hi = i + w if i + w < n else n - 1
                num = 0.0
                den = 0.0
                for j in range(lo, hi + 1):
                    k = kern[j - i + w]
                    num += k * V[r, j] * A[r, j]
                    den += k * B[r, j]
                o[r, i] = num / den
    return out


def dust_rows(const double[::1] q, const double[:, ::1] C, const int[:, ::1] tid,
              const double[::1] g_flat, const Py_ssize_t[::1] g_off,
              const double[::1] step, const Py_ssize_t[::1] half,
              const double[::1] g_sat):
    cdef Py_ssize_t m = C.shape[0], n = C.shape[1], r, i, k, h
    cdef int t
    cdef double s, d, u, dk, dk1, g, g0, g1
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for r in range(m):
            s = 0.0
            for i in range(n):
                t = tid[r, i]
                d = q[i] - C[r, i]
                h = half[t]
                u = d / step[t] + h
                if u < 0.0 or u > 2 * h:
                    g = g_sat[t]
                else:
                    k = <Py_ssize_t>floor(u)
                    if k >= 2 * h:
                        k = 2 * h - 1
                    dk = (k - h) * step[t]
                    dk1 = dk + step[t]
                    g0 = g_flat[g_off[t] + k]
                    g1 = g_flat[g_off[t] + k + 1]
                    g = g0 + (g1 - g0) * (d * d - dk * dk) / (dk1 * dk1 - dk * dk)
                if g > 0.0:
                    s += g
            o[r] = s
    return out


def proud_rows(const double[::1] q, const double[::1] qs, const double[:, ::1] C,
               const double[:, ::1] S):
    cdef Py_ssize_t m = C.shape[0], n = C.shape[1], r, i
    cdef double mu, mu2, s2, a, b
    mean = np.empty(m, dtype=np.float64)
    var = np.empty(m, dtype=np.float64)
    cdef double[::1] om = mean, ov = var
    with nogil:
        for r in range(m):
            a = 0.0
            b = 0.0
            for i in range(n):
                mu = C[r, i] - q[i]
                mu2 = mu * mu
                s2 = S[r, i] * S[r, i] + qs[i] * qs[i]
                a += mu2 + s2
                b += 2.0 * s2 * s2 + 4.0 * mu2 * s2
            om[r] = a
            ov[r] = b
    return mean, var
