"""Independent reference implementations used as test oracles.

These are deliberately naive: plain Python loops, no shared code with the
package beyond the input containers.
"""
import itertools
import math

import numpy as np


def lp_naive(a, b, p):
    s = 0.0
    for x, y in zip(a, b):
        d = abs(float(x) - float(y))
        t = d
        for _ in range(p - 1):
            t = t * d
        s += t
    if p == 1:
        return s
    if p == 2:
        return math.sqrt(s)
    return s ** (1.0 / p)


def munich_brute_force(X_samples, Y_samples, eps, p):
    """Fraction of (materialisation of X, materialisation of Y) pairs within eps."""
    hits = total = 0
    for xs in itertools.product(*X_samples):
        for ys in itertools.product(*Y_samples):
            total += 1
            if lp_naive(xs, ys, p) <= eps:
                hits += 1
    return hits / total


def random_munich_instance(rng, max_n=3, max_s=3):
    n = int(rng.integers(1, max_n + 1))
    X = [rng.normal(0, 1, int(rng.integers(1, max_s + 1))).round(int(rng.integers(1, 4))) for _ in range(n)]
    Y = [rng.normal(0, 1, int(rng.integers(1, max_s + 1))).round(int(rng.integers(1, 4))) for _ in range(n)]
    return X, Y


def window_naive(v, a, b, w, lam):
    """sum k*v*a / sum k*b over the truncated window, k = exp(-lam |j - i|)."""
    n = len(v)
    out = []
    for i in range(n):
        num = den = 0.0
        for j in range(max(0, i - w), min(n, i + w + 1)):
            k = math.exp(-lam * abs(j - i))
            num += k * v[j] * a[j]
            den += k * b[j]
        out.append(num / den)
    return np.array(out)


def gaussian_dust(delta, sigma):
    return abs(delta) / (2.0 * sigma)


def normal_inverse_by_bisection(p):
    """Phi^-1 by bisection on the erfc-based CDF."""
    lo, hi = -40.0, 40.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if 0.5 * math.erfc(-mid / math.sqrt(2.0)) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
