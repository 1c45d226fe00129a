"""Range queries, probabilistic range queries, k-NN and threshold calibration.

All searches are linear scans. Ties are always broken by collection index.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .core import MultiObservationSeries, ProbabilisticSeries, ValidationError
from .distances import (
    DustTables,
    dust_many,
    inverse_normal_cdf,
    lp_many,
    moments_many,
    munich_probability,
    normalized_eps,
    window_filter,
)
from .distances.lp import as_vector

DEFAULT_NEIGHBORS = 10


class Technique(str, enum.Enum):
    EUCLID = "euclid"
    MUNICH = "munich"
    PROUD = "proud"
    DUST = "dust"
    UMA = "uma"
    UEMA = "uema"

    @classmethod
    def parse(cls, value) -> "Technique":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValidationError(f"unknown technique {value!r}") from None

    @property
    def probabilistic(self) -> bool:
        return self in (Technique.MUNICH, Technique.PROUD)


@dataclass(frozen=True)
class QuerySpec:
    technique: Technique
    eps: float
    tau: Optional[float] = None
    p: int = 2
    w: int = 2
    lam: float = 1.0
    bins: int = 256
    exact_cap: int = 10**6
    normalized_filters: bool = False

    def __post_init__(self):
        object.__setattr__(self, "technique", Technique.parse(self.technique))
        if not self.eps >= 0:
            raise ValidationError("eps must be non-negative")
        if self.technique.probabilistic:
            if self.tau is None or not 0.0 < self.tau < 1.0:
                raise ValidationError(f"{self.technique.value} needs tau in (0, 1)")
        elif self.tau is not None:
            raise ValidationError(f"{self.technique.value} does not take tau")


def _ordered(distances) -> np.ndarray:
    # stable sort: equal distances keep index order
    return np.argsort(np.asarray(distances), kind="stable")


def range_query(q, C, eps, dist=None) -> frozenset:
    """Indices of ``C`` whose distance to ``q`` is at most ``eps``.

    ``dist`` is a pairwise callable; the default is the Euclidean distance.
    """
    d = _scan(q, C, dist)
    return frozenset(np.flatnonzero(d <= eps).tolist())


def knn(q, C, k, dist=None) -> list:
    """The ``k`` nearest members of ``C`` in ascending distance, ties by index."""
    if k > len(C):
        raise ValidationError(f"k={k} exceeds collection size {len(C)}")
    return _ordered(_scan(q, C, dist))[:k].tolist()


def _scan(q, C, dist):
    if dist is None:
        return lp_many(q, np.stack([as_vector(s) for s in C]), 2)
    return np.array([dist(q, s) for s in C], dtype=np.float64)


def ground_truth(q_exact, C_exact, k=DEFAULT_NEIGHBORS) -> frozenset:
    """The ``k`` Euclidean nearest neighbours of the exact query among exact series."""
    if len(C_exact) < k:
        raise ValidationError(f"collection has {len(C_exact)} series, need at least {k}")
    return frozenset(knn(q_exact, C_exact, k))


class Thresholds(NamedTuple):
    eps_eucl: float
    eps_dust: float


def tenth_neighbor(q, C, k=DEFAULT_NEIGHBORS) -> int:
    """Index of the ``k``-th Euclidean nearest neighbour on observations."""
    if len(C) < k:
        raise ValidationError(f"collection has {len(C)} series, need at least {k}")
    return knn(q, C, k)[-1]


def calibrate_thresholds(q: ProbabilisticSeries, C, dust_tables, k=DEFAULT_NEIGHBORS) -> Thresholds:
    """Equivalent Euclidean and DUST thresholds from the query's 10th nearest neighbour."""
    from .distances import dust, lp_distance

    c = tenth_neighbor(q, C, k)
    return Thresholds(lp_distance(q, C[c], 2), dust(q, C[c], dust_tables))


def probabilistic_range_query(q, C, spec: QuerySpec) -> frozenset:
    """Members whose probability of lying within ``spec.eps`` is at least ``spec.tau``."""
    if not spec.technique.probabilistic:
        raise ValidationError(f"{spec.technique.value} is not a probabilistic technique")
    if spec.technique is Technique.MUNICH:
        if not isinstance(q, MultiObservationSeries):
            raise ValidationError("MUNICH needs multi-observation series")
        probs = [munich_probability(q, s, spec.eps, spec.p, spec.bins, spec.exact_cap) for s in C]
        return frozenset(i for i, pr in enumerate(probs) if pr >= spec.tau)
    scores = proud_scores(q, C, spec.eps)
    return frozenset(np.flatnonzero(scores >= inverse_normal_cdf(spec.tau)).tolist())


def proud_scores(q: ProbabilisticSeries, C, eps) -> np.ndarray:
    q_obs, q_std = _obs_std(q)
    obs = np.stack([_obs_std(s)[0] for s in C])
    std = np.stack([_obs_std(s)[1] for s in C])
    mean, var = moments_many(q_obs, q_std, obs, std)
    return normalized_eps(eps, mean, var)


def _obs_std(x):
    if isinstance(x, ProbabilisticSeries):
        return x.observations, x.stds
    v = as_vector(x)
    return v, np.zeros(v.size)


def run_query(q, C, spec: QuerySpec, dust_tables=None) -> frozenset:
    """Evaluate any technique's query of ``q`` against ``C``."""
    t = spec.technique
    if t.probabilistic:
        return probabilistic_range_query(q, C, spec)
    if t is Technique.EUCLID:
        return range_query(q, C, spec.eps)
    if t is Technique.DUST:
        tables = dust_tables if dust_tables is not None else DustTables()
        d = dust_many(q.observations, q.kinds, q.stds,
                      np.stack([s.observations for s in C]),
                      np.stack([s.kinds for s in C]),
                      np.stack([s.stds for s in C]), tables)
        return frozenset(np.flatnonzero(d <= spec.eps).tolist())
    lam = 0.0 if t is Technique.UMA else spec.lam
    fq = window_filter(q.observations, q.stds, spec.w, lam, spec.normalized_filters)
    fC = window_filter(np.stack([s.observations for s in C]), np.stack([s.stds for s in C]),
                       spec.w, lam, spec.normalized_filters)
    return frozenset(np.flatnonzero(lp_many(fq, fC, 2) <= spec.eps).tolist())
