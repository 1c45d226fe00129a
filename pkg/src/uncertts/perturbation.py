"""Turn exact series into uncertain ones by adding zero-mean errors."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import (
    KIND_CODE,
    KIND_ORDER,
    ErrorKind,
    ErrorModel,
    MultiObservationSeries,
    ProbabilisticSeries,
    TimeSeries,
    ValidationError,
)

SQRT3 = math.sqrt(3.0)


def _sample(kind: ErrorKind, std, rng: np.random.Generator, size=None):
    # every kind is parameterised by its std and shifted to mean zero
    if kind is ErrorKind.UNIFORM:
        half = std * SQRT3
        return rng.uniform(-half, half, size)
    if kind is ErrorKind.NORMAL:
        return rng.normal(0.0, std, size)
    return rng.exponential(std, size) - std


def draw_error(model: ErrorModel, rng: np.random.Generator) -> float:
    """One zero-mean sample from ``model``."""
    return float(_sample(model.kind, model.std, rng))


@dataclass(frozen=True)
class MixedSchedule:
    """``fraction_high`` of the timestamps get ``std_high``, the rest ``std_low``."""

    fraction_high: float
    std_high: float
    std_low: float

    def __post_init__(self):
        if not 0.0 <= self.fraction_high <= 1.0:
            raise ValidationError("fraction_high must lie in [0, 1]")
        if not (self.std_high > 0 and self.std_low > 0):
            raise ValidationError("mixed schedule stds must be positive")

    @property
    def mean_std(self) -> float:
        return 0.5 * (self.std_high + self.std_low)

    def high_count(self, n: int) -> int:
        return int(math.floor(self.fraction_high * n + 0.5))


@dataclass(frozen=True)
class PerturbationSpec:
    """How to perturb one series.

    ``std`` is used when ``schedule`` is None. ``mix_kinds`` spreads several
    error kinds over the timestamps in equal shares. ``schedule_seed`` fixes
    which timestamps get which std/kind independently of the noise draw; it
    defaults to ``seed``.
    """

    kind: ErrorKind = ErrorKind.NORMAL
    std: Optional[float] = 1.0
    schedule: Optional[MixedSchedule] = None
    mix_kinds: Optional[Sequence[ErrorKind]] = None
    seed: int = 0
    schedule_seed: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", ErrorKind.parse(self.kind))
        if self.mix_kinds is not None:
            kinds = tuple(ErrorKind.parse(k) for k in self.mix_kinds)
            if not kinds:
                raise ValidationError("mix_kinds must not be empty")
            object.__setattr__(self, "mix_kinds", kinds)
        if self.schedule is None:
            if self.std is None or not self.std > 0:
                raise ValidationError("std must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise ValidationError("seed must be a 64-bit unsigned integer")

    def assignment(self, n: int):
        """Per-timestamp ``(stds, kind codes)`` for a length-``n`` series."""
        sched_seed = self.seed if self.schedule_seed is None else self.schedule_seed
        rng = np.random.default_rng(np.random.SeedSequence(int(sched_seed), spawn_key=(1,)))
        if self.schedule is None:
            stds = np.full(n, float(self.std))
        else:
            stds = np.full(n, float(self.schedule.std_low))
            high = rng.permutation(n)[: self.schedule.high_count(n)]
            stds[high] = self.schedule.std_high
        if self.mix_kinds is None:
            kinds = np.full(n, KIND_CODE[self.kind], dtype=np.int8)
        else:
            order = rng.permutation(n)
            kinds = np.empty(n, dtype=np.int8)
            for i, pos in enumerate(order):
                kinds[pos] = KIND_CODE[self.mix_kinds[i % len(self.mix_kinds)]]
        return stds, kinds

    def noise_rng(self) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(int(self.seed), spawn_key=(0,)))


def _noise_row(stds, kinds, rng):
    out = np.empty(stds.size)
    for code, kind in enumerate(KIND_ORDER):
        mask = kinds == code
        if mask.any():
            out[mask] = _sample(kind, stds[mask], rng)
    return out


def _values(ts):
    return ts.values if isinstance(ts, TimeSeries) else np.asarray(ts, dtype=np.float64)


def perturb(ts, spec: PerturbationSpec) -> ProbabilisticSeries:
    """Observed series ``ts + error`` together with the error model used per timestamp."""
    v = _values(ts)
    stds, kinds = spec.assignment(v.size)
    noise = _noise_row(stds, kinds, spec.noise_rng())
    return ProbabilisticSeries(v + noise, stds, kinds)


def perturb_multi(ts, spec: PerturbationSpec, s: int) -> MultiObservationSeries:
    """``s`` independent noisy observations per timestamp.

    The first observation of every timestamp equals what :func:`perturb`
    returns for the same spec.
    """
    if int(s) < 1:
        raise ValidationError("sample count must be at least 1")
    v = _values(ts)
    stds, kinds = spec.assignment(v.size)
    rng = spec.noise_rng()
    rows = np.stack([v + _noise_row(stds, kinds, rng) for _ in range(int(s))])
    return MultiObservationSeries.from_matrix(rows)


def perturb_both(ts, spec: PerturbationSpec, s: int):
    """``(ProbabilisticSeries, MultiObservationSeries)`` sharing the first draw."""
    multi = perturb_multi(ts, spec, s)
    stds, kinds = spec.assignment(len(multi))
    first = np.array([smp[0] for smp in multi.samples])
    return ProbabilisticSeries(first, stds, kinds), multi
