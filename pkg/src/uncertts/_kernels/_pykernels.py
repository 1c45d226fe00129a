"""Numpy implementations of the hot loops.

Used when the compiled extension is unavailable or when ``UNCERTTS_PURE_PYTHON``
is set. Every function here has the same signature and semantics as its
counterpart in ``_ckernels.pyx``.
"""
import itertools

import numpy as np

# broadcasted block size for the enumeration fallback
_BLOCK = 1 << 20


def _root(s, p):
    if p == 1:
        return s
    if p == 2:
        return np.sqrt(s)
    return np.power(s, 1.0 / p)


def _ipow(d, p):
    r = d
    for _ in range(p - 1):
        r = r * d
    return r


def lp_rows(q, C, p):
    acc = np.zeros(C.shape[0])
    for j in range(C.shape[1]):
        acc += _ipow(np.abs(q[j] - C[:, j]), p)
    return _root(acc, p)


def munich_count(vals, offsets, eps, p):
    n = len(offsets) - 1
    segs = [vals[offsets[i]:offsets[i + 1]] for i in range(n)]
    # enumerate a tail block with numpy, walk the head in Python
    split = n
    block = 1
    while split > 0 and block * len(segs[split - 1]) <= _BLOCK:
        split -= 1
        block *= len(segs[split])
    head, tail = segs[:split], segs[split:]
    tail_total = int(np.prod([len(s) for s in tail])) if tail else 1

    total = 0
    for combo in itertools.product(*head):
        partial = 0.0
        for v in combo:
            partial += v
        lo = hi = partial
        for s in tail:
            lo += s[0]
            hi += s[-1]
        if _root(lo, p) > eps:
            continue
        if _root(hi, p) <= eps:
            total += tail_total
            continue
        sums = np.array([partial])
        for s in tail:
            sums = (sums[:, None] + s[None, :]).ravel()
        total += int(np.count_nonzero(_root(sums, p) <= eps))
    return total


def quantized_convolve(idx, weights, offsets, cap):
    cur = np.zeros(cap + 1)
    cur[0] = 1.0
    for i in range(len(offsets) - 1):
        nxt = np.zeros(cap + 1)
        for j in range(offsets[i], offsets[i + 1]):
            q, w = int(idx[j]), weights[j]
            if q < cap:
                nxt[q:cap] += w * cur[:cap - q]
                nxt[cap] += w * cur[cap - q:].sum()
            else:
                nxt[cap] += w * cur.sum()
        cur = nxt
    return cur


def weighted_window(V, A, B, w, lam):
    m, n = V.shape
    num = np.zeros((m, n))
    den = np.zeros((m, n))
    VA = V * A
    for d in range(-w, w + 1):
        k = np.exp(-lam * abs(d))
        if d >= 0:
            if d >= n:
                continue
            num[:, :n - d] += k * VA[:, d:]
            den[:, :n - d] += k * B[:, d:]
        else:
            if -d >= n:
                continue
            num[:, -d:] += k * VA[:, :n + d]
            den[:, -d:] += k * B[:, :n + d]
    return num / den


def dust_rows(q, C, tid, g_flat, g_off, step, half, g_sat):
    d = q[None, :] - C
    st = step[tid]
    h = half[tid]
    u = d / st + h
    outside = (u < 0) | (u > 2 * h)
    k = np.minimum(np.floor(np.where(outside, 0, u)).astype(np.intp), 2 * h - 1)
    dk = (k - h) * st
    dk1 = dk + st
    base = g_off[tid] + k
    g0 = g_flat[base]
    g1 = g_flat[base + 1]
    g = g0 + (g1 - g0) * (d * d - dk * dk) / (dk1 * dk1 - dk * dk)
    g = np.where(outside, g_sat[tid], g)
    return np.maximum(g, 0.0).sum(axis=1)


def proud_rows(q, qs, C, S):
    mu = C - q
    s2 = S * S + qs * qs
    mu2 = mu * mu
    return (mu2 + s2).sum(axis=1), (2.0 * s2 * s2 + 4.0 * mu2 * s2).sum(axis=1)
