"""Domain types for exact and uncertain time series.

All types are immutable after construction: their numpy buffers are marked
read-only so they can be shared between query workers.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


class ValidationError(ValueError):
    """Raised when a value violates a type invariant or an operation precondition."""


def _frozen(values, name="values") -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True)
    if arr.ndim != 1:
        raise ValidationError(f"{name} must be one-dimensional")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite entries")
    arr.flags.writeable = False
    return arr


class ErrorKind(str, enum.Enum):
    UNIFORM = "uniform"
    NORMAL = "normal"
    EXPONENTIAL = "exponential"

    @classmethod
    def parse(cls, value) -> "ErrorKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValidationError(f"unknown error kind {value!r}") from None


# index order used wherever kinds are stored as small integers
KIND_ORDER = (ErrorKind.UNIFORM, ErrorKind.NORMAL, ErrorKind.EXPONENTIAL)
KIND_CODE = {k: i for i, k in enumerate(KIND_ORDER)}


@dataclass(frozen=True)
class ErrorModel:
    """Zero-mean error distribution parameterised by its standard deviation."""

    kind: ErrorKind
    std: float

    def __post_init__(self):
        object.__setattr__(self, "kind", ErrorKind.parse(self.kind))
        std = float(self.std)
        if not (np.isfinite(std) and std > 0):
            raise ValidationError(f"error std must be positive, got {self.std!r}")
        object.__setattr__(self, "std", std)


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """An exact, equally spaced sequence of finite reals."""

    values: np.ndarray

    def __post_init__(self):
        arr = _frozen(self.values)
        if arr.size < 1:
            raise ValidationError("time series must have at least one value")
        object.__setattr__(self, "values", arr)

    def __len__(self):
        return self.values.size

    def __eq__(self, other):
        return isinstance(other, TimeSeries) and np.array_equal(self.values, other.values)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class ProbabilisticSeries:
    """One observed value and one error model per timestamp.

    Stored column-wise (``observations``, ``stds``, ``kinds``) because every
    distance kernel consumes arrays; ``errors`` rebuilds the per-timestamp
    :class:`ErrorModel` objects on demand.
    """

    observations: np.ndarray
    stds: np.ndarray
    kinds: np.ndarray

    def __post_init__(self):
        obs = _frozen(self.observations, "observations")
        stds = _frozen(self.stds, "stds")
        kinds = np.array(self.kinds, dtype=np.int8, copy=True)
        if kinds.ndim == 0:
            kinds = np.full(obs.size, kinds, dtype=np.int8)
        if not (obs.size == stds.size == kinds.size):
            raise ValidationError("observations and errors must have identical length")
        if obs.size < 1:
            raise ValidationError("series must have at least one timestamp")
        if np.any(stds <= 0):
            raise ValidationError("every per-timestamp std must be positive")
        if np.any((kinds < 0) | (kinds >= len(KIND_ORDER))):
            raise ValidationError("unknown error kind code")
        kinds.flags.writeable = False
        object.__setattr__(self, "observations", obs)
        object.__setattr__(self, "stds", stds)
        object.__setattr__(self, "kinds", kinds)

    @classmethod
    def from_errors(cls, observations, errors: Sequence[ErrorModel]) -> "ProbabilisticSeries":
        errors = list(errors)
        return cls(
            np.asarray(observations, dtype=np.float64),
            np.array([e.std for e in errors], dtype=np.float64),
            np.array([KIND_CODE[e.kind] for e in errors], dtype=np.int8),
        )

    @classmethod
    def uniform_error(cls, observations, model: ErrorModel) -> "ProbabilisticSeries":
        obs = np.asarray(observations, dtype=np.float64)
        return cls(obs, np.full(obs.size, model.std), np.full(obs.size, KIND_CODE[model.kind]))

    @property
    def errors(self) -> tuple:
        return tuple(ErrorModel(KIND_ORDER[k], s) for k, s in zip(self.kinds, self.stds))

    def __len__(self):
        return self.observations.size


@dataclass(frozen=True, eq=False)
class MultiObservationSeries:
    """Repeated observations per timestamp; counts may differ between timestamps."""

    samples: tuple

    def __post_init__(self):
        frozen = tuple(_frozen(s, "samples") for s in self.samples)
        if not frozen:
            raise ValidationError("series must have at least one timestamp")
        if any(s.size < 1 for s in frozen):
            raise ValidationError("every timestamp needs at least one sample")
        object.__setattr__(self, "samples", frozen)

    @classmethod
    def from_matrix(cls, matrix) -> "MultiObservationSeries":
        """Build from an ``(s, n)`` array: row ``j`` holds the ``j``-th sample of every timestamp."""
        m = np.asarray(matrix, dtype=np.float64)
        if m.ndim == 1:
            m = m[None, :]
        return cls(tuple(m[:, i] for i in range(m.shape[1])))

    @property
    def counts(self) -> np.ndarray:
        return np.array([s.size for s in self.samples], dtype=np.intp)

    def __len__(self):
        return len(self.samples)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Aligned collection of exact series, stored as an ``(N, n)`` matrix."""

    name: str
    values: np.ndarray
    labels: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float64, copy=True)
        if vals.ndim != 2:
            raise ValidationError("all member series must have equal length")
        if vals.shape[0] < 1 or vals.shape[1] < 1:
            raise ValidationError("dataset is empty")
        if not np.all(np.isfinite(vals)):
            bad = np.argwhere(~np.isfinite(vals))[0]
            raise ValidationError(f"series {bad[0]} has a non-finite value at position {bad[1]}")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        if self.labels is not None:
            labels = np.array(self.labels, copy=True)
            if labels.shape != (vals.shape[0],):
                raise ValidationError("one label per series required")
            labels.flags.writeable = False
            object.__setattr__(self, "labels", labels)

    @classmethod
    def from_series(cls, name, series: Sequence[TimeSeries], labels=None) -> "Dataset":
        lengths = {len(s) for s in series}
        if len(lengths) > 1:
            raise ValidationError(f"unequal series lengths {sorted(lengths)}")
        return cls(name, np.stack([s.values for s in series]), labels)

    @property
    def series(self) -> list:
        return [TimeSeries(row) for row in self.values]

    @property
    def length(self) -> int:
        return self.values.shape[1]

    def __len__(self):
        return self.values.shape[0]


def _values(ts) -> np.ndarray:
    return ts.values if isinstance(ts, TimeSeries) else np.asarray(ts, dtype=np.float64)


def z_normalize(ts):
    """Zero mean, unit population variance. Constant series map to zeros.

    Accepts a :class:`TimeSeries` (returns one) or an array whose last axis is
    time (returns an array, each row normalised independently).
    """
    v = _values(ts)
    if v.shape[-1] < 2:
        raise ValidationError("series too short to normalize")
    mean = v.mean(axis=-1, keepdims=True)
    centered = v - mean
    std = np.sqrt((centered * centered).mean(axis=-1, keepdims=True))
    std = np.where(std > 0, std, 1.0)
    # exactly-flat series can leave rounding residue in `centered`
    out = np.where(np.ptp(v, axis=-1, keepdims=True) == 0, 0.0, centered / std)
    return TimeSeries(out) if isinstance(ts, TimeSeries) else out


def resample(ts, target_len: int):
    """Linear interpolation onto ``target_len`` equally spaced positions.

    Endpoints are preserved exactly. Works row-wise on 2-D arrays.
    """
    v = _values(ts)
    target_len = int(target_len)
    if target_len < 2:
        raise ValidationError("target length must be at least 2")
    n = v.shape[-1]
    if n < 2:
        raise ValidationError("series too short to resample")
    if target_len == n:
        out = v.copy()
    else:
        pos = np.arange(target_len) * ((n - 1) / (target_len - 1))
        left = np.minimum(np.floor(pos).astype(np.intp), n - 2)
        frac = pos - left
        # fancy indexing on the last axis yields Fortran order; the kernels want rows
        out = np.ascontiguousarray(v[..., left] * (1.0 - frac) + v[..., left + 1] * frac)
        out[..., 0] = v[..., 0]
        out[..., -1] = v[..., -1]
    return TimeSeries(out) if isinstance(ts, TimeSeries) else out
