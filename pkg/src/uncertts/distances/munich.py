"""MUNICH: probability that the Lp distance between two multi-sample series is within eps.

A materialization picks one sample per timestamp. The probability is the
fraction of (materialization of X, materialization of Y) pairs whose Lp
distance is at most eps. Timestamps are independent, so the exact count can
be organised per timestamp over the multiset of ``|v - w|^p`` terms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import _kernels
from ..core import MultiObservationSeries, ValidationError
from .lp import check_p

DEFAULT_EXACT_CAP = 10**8
# relative nudge applied before floor/ceil so the enclosure survives rounding
_NUDGE = 1e-9
# absolute slack for float summation when weights are not exact counts
_SLACK = 1e-12
_EXACT_FLOAT_INT = 2**53


class InstanceTooLarge(ValidationError):
    pass


@dataclass(frozen=True)
class MunichBounds:
    lower: float
    upper: float


@dataclass(frozen=True)
class MunichEstimate:
    """Quantised estimate with a guaranteed enclosure ``lower <= exact <= upper``."""

    probability: float
    lower: float
    upper: float

    @property
    def width(self) -> float:
        return self.upper - self.lower


def _check_pair(X: MultiObservationSeries, Y: MultiObservationSeries):
    if len(X) != len(Y):
        raise ValidationError(f"length mismatch: {len(X)} vs {len(Y)}")


def _ipow(d, p):
    r = d
    for _ in range(p - 1):
        r = r * d
    return r


def _terms(X, Y, p):
    """Sorted ``|v - w|^p`` multiset for every timestamp."""
    return [np.sort(_ipow(np.abs(x[:, None] - y[None, :]).ravel(), p)) for x, y in zip(X.samples, Y.samples)]


def combination_count(X: MultiObservationSeries, Y: MultiObservationSeries) -> int:
    _check_pair(X, Y)
    return math.prod(int(a) * int(b) for a, b in zip(X.counts, Y.counts))


def munich_probability_exact(X, Y, eps: float, p: int = 2, cap: int = DEFAULT_EXACT_CAP) -> float:
    """Exact probability by exhaustive enumeration (with sound pruning)."""
    p = check_p(p)
    total = combination_count(X, Y)
    if total > cap:
        raise InstanceTooLarge(
            f"instance too large for exact enumeration ({total} combinations > cap {cap})"
        )
    terms = _terms(X, Y, p)
    vals = np.ascontiguousarray(np.concatenate(terms))
    offsets = np.zeros(len(terms) + 1, dtype=np.intp)
    offsets[1:] = np.cumsum([t.size for t in terms])
    count = _kernels.munich_count(vals, offsets, float(eps), p)
    return count / total


def munich_probability_dp(X, Y, eps: float, p: int = 2, bins: int = 256) -> MunichEstimate:
    """Quantised convolution of the per-timestamp term distributions.

    The threshold ``eps^p`` is split into ``bins`` cells. Rounding every term
    down to its cell gives an upper estimate of the probability, rounding up
    gives a lower one; the exact value always lies in between. Doubling
    ``bins`` never widens the enclosure.
    """
    p = check_p(p)
    _check_pair(X, Y)
    if int(bins) < 16:
        raise ValidationError("bins must be at least 16")
    if not eps > 0:
        raise ValidationError("eps must be positive")
    bins = int(bins)
    cap = bins + 1
    h = float(eps) ** p / bins

    total = combination_count(X, Y)
    # integer counts stay exact in float64 up to 2**53; past that use normalised weights
    exact_counts = total <= _EXACT_FLOAT_INT
    floor_idx, ceil_idx, weights, offsets = [], [], [], [0]
    for t in _terms(X, Y, p):
        scaled = t / h
        lo = np.minimum(np.floor(scaled * (1.0 - _NUDGE)), cap).astype(np.intp)
        hi = np.minimum(np.ceil(scaled * (1.0 + _NUDGE)), cap).astype(np.intp)
        floor_idx.append(lo)
        ceil_idx.append(hi)
        weights.append(np.full(t.size, 1.0 if exact_counts else 1.0 / t.size))
        offsets.append(offsets[-1] + t.size)
    offsets = np.asarray(offsets, dtype=np.intp)
    w = np.concatenate(weights)

    def _accepted(idx):
        dist = _kernels.quantized_convolve(np.concatenate(idx), w, offsets, cap)
        mass = float(dist[: bins + 1].sum())
        return min(1.0, mass / total) if exact_counts else min(1.0, mass)

    upper, lower = _accepted(floor_idx), _accepted(ceil_idx)
    if not exact_counts:
        # exact 0 and 1 carry no rounding error; widen only in between
        if 0.0 < upper < 1.0:
            upper = min(1.0, upper + _SLACK)
        if 0.0 < lower < 1.0:
            lower = max(0.0, lower - _SLACK)
    return MunichEstimate(0.5 * (lower + upper), lower, upper)


def munich_bounds(X, Y, p: int = 2) -> MunichBounds:
    """Lp bounds over all materializations from per-timestamp bounding intervals."""
    p = check_p(p)
    _check_pair(X, Y)
    xmin = np.array([s.min() for s in X.samples])
    xmax = np.array([s.max() for s in X.samples])
    ymin = np.array([s.min() for s in Y.samples])
    ymax = np.array([s.max() for s in Y.samples])
    gap_lo = np.maximum(0.0, np.maximum(ymin - xmax, xmin - ymax))
    gap_hi = np.maximum(ymax - xmin, xmax - ymin)
    zeros = np.zeros((1, gap_lo.size))
    # same left-to-right accumulation as the enumeration, so bounds stay sound
    lower = float(_kernels.lp_rows(np.ascontiguousarray(gap_lo), zeros, p)[0])
    upper = float(_kernels.lp_rows(np.ascontiguousarray(gap_hi), zeros, p)[0])
    return MunichBounds(lower, upper)


def munich_probability(X, Y, eps, p=2, bins=256, exact_cap=10**6) -> float:
    """Bounds prefilter, then exact enumeration when affordable, else the quantised midpoint."""
    b = munich_bounds(X, Y, p)
    if b.upper <= eps:
        return 1.0
    if b.lower > eps:
        return 0.0
    if combination_count(X, Y) <= exact_cap:
        return munich_probability_exact(X, Y, eps, p, cap=exact_cap)
    return munich_probability_dp(X, Y, eps, p, bins).probability
