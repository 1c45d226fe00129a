"""DUST distance with precomputed phi lookup tables.

For two uncertain values ``x = r_x + e_x`` and ``y = r_y + e_y`` with a
uniform prior on the true values, the likelihood that ``r_x == r_y`` given the
observed difference ``delta = x - y`` is the density of ``e_x - e_y`` at
``delta``. That density is ``phi``; ``dust = sqrt(-log phi(delta) - k)`` with
``k = -log phi(0)``.

Tables store ``g = -log phi - k`` on a signed lag grid. Lookups interpolate
``g`` linearly in ``delta**2`` between grid nodes, which is exact for normal
errors and keeps the fine structure near zero lag.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np

from .. import _kernels
from ..core import KIND_CODE, KIND_ORDER, ErrorKind, ErrorModel, ProbabilisticSeries, ValidationError

PHI_MIN = 1e-12
GRID_FRACTION = 100  # grid_step = sigma_max / GRID_FRACTION
RANGE_SIGMAS = 12.0  # max_delta = RANGE_SIGMAS * sigma_max
_PAD_SIGMAS = 10.0


class MissingTableError(KeyError):
    pass


def _cell_masses(model: ErrorModel, grid: np.ndarray, h: float) -> np.ndarray:
    """Probability mass of ``model`` attached to each grid node."""
    s = model.std
    if model.kind is ErrorKind.NORMAL:
        # point sampling integrates smooth densities to machine precision here
        return h * np.exp(-0.5 * (grid / s) ** 2) / (s * math.sqrt(2.0 * math.pi))
    lo, hi = grid - 0.5 * h, grid + 0.5 * h
    if model.kind is ErrorKind.UNIFORM:
        half = s * math.sqrt(3.0)
        return np.clip(np.minimum(hi, half) - np.maximum(lo, -half), 0.0, None) / (2.0 * half)
    # exponential with scale s shifted to mean zero: support starts at -s
    a = np.maximum(lo, -s) + s
    b = np.maximum(hi, -s) + s
    return np.exp(-a / s) * -np.expm1(-(b - a) / s)


@dataclass(frozen=True, eq=False)
class DustTable:
    err_x: ErrorModel
    err_y: ErrorModel
    grid_step: float
    half: int
    phi: np.ndarray
    g: np.ndarray
    k: float
    phi_min: float

    @property
    def max_delta(self) -> float:
        return self.half * self.grid_step

    @property
    def lags(self) -> np.ndarray:
        return (np.arange(self.g.size) - self.half) * self.grid_step

    @property
    def g_sat(self) -> float:
        return -math.log(self.phi_min) - self.k

    def packed(self):
        """Arrays in the layout ``_kernels.dust_rows`` expects, for this table alone."""
        return (
            np.ascontiguousarray(self.g),
            np.zeros(1, dtype=np.intp),
            np.array([self.grid_step]),
            np.array([self.half], dtype=np.intp),
            np.array([self.g_sat]),
        )

    def g_at(self, delta) -> np.ndarray:
        """``max(0, -log phi(delta) - k)`` for signed lags ``delta = x - y``."""
        d = np.atleast_1d(np.asarray(delta, dtype=np.float64))
        tid = np.zeros((d.size, 1), dtype=np.int32)
        return _kernels.dust_rows(np.zeros(1), np.ascontiguousarray(-d[:, None]), tid, *self.packed())


def build_dust_table(err_x: ErrorModel, err_y: ErrorModel, grid_step=None, max_delta=None,
                     phi_min=PHI_MIN) -> DustTable:
    """phi over signed lags ``[-max_delta, max_delta]`` by discrete convolution of the error densities."""
    sigma_max = max(err_x.std, err_y.std)
    h = float(grid_step) if grid_step is not None else sigma_max / GRID_FRACTION
    reach = float(max_delta) if max_delta is not None else RANGE_SIGMAS * sigma_max
    if not (h > 0 and reach > 0):
        raise ValidationError("grid_step and max_delta must be positive")
    if not 0 < phi_min < 1:
        raise ValidationError("phi_min must lie in (0, 1)")
    half = max(1, int(math.ceil(reach / h - 1e-9)))
    support = half + int(math.ceil(_PAD_SIGMAS * sigma_max / h))
    grid = np.arange(-support, support + 1) * h

    px = _cell_masses(err_x, grid, h)
    py = _cell_masses(err_y, grid, h)
    # density of e_x - e_y: convolve with the mirrored y masses (direct, keeps tiny tails exact)
    pz = np.convolve(px, py[::-1])
    centre = 2 * support
    pz = pz[centre - half: centre + half + 1]
    total = pz.sum()
    phi = pz / (h * total) if total > 0 else pz
    clamped = np.maximum(phi, phi_min)
    k = -math.log(clamped[half])
    g = -np.log(clamped) - k
    g[half] = 0.0
    phi.flags.writeable = False
    g.flags.writeable = False
    return DustTable(err_x, err_y, h, half, phi, g, k, float(phi_min))


def dust_point(x: float, y: float, table: DustTable) -> float:
    """``sqrt(max(0, -log phi(x - y) - k))``; lags past the table use ``phi_min``."""
    return float(math.sqrt(table.g_at(float(x) - float(y))[0]))


class DustTables:
    """Thread-safe memo of tables keyed by ``(ErrorModel, ErrorModel)``.

    With ``auto_build=False`` a missing pair raises :class:`MissingTableError`
    instead of being built on demand.
    """

    def __init__(self, grid_step=None, max_delta=None, phi_min=PHI_MIN, auto_build=True):
        self.grid_step = grid_step
        self.max_delta = max_delta
        self.phi_min = phi_min
        self.auto_build = auto_build
        self._lock = threading.Lock()
        self._tables = {}
        self._ids = {}
        self._packed = None

    def __len__(self):
        return len(self._tables)

    def __contains__(self, pair):
        return pair in self._tables

    def add(self, table: DustTable):
        with self._lock:
            self._insert((table.err_x, table.err_y), table)

    def _insert(self, key, table):
        if key not in self._tables:
            self._tables[key] = table
            self._ids[key] = len(self._ids)
            self._packed = None

    def get(self, err_x: ErrorModel, err_y: ErrorModel) -> DustTable:
        key = (err_x, err_y)
        with self._lock:
            table = self._tables.get(key)
            if table is None:
                if not self.auto_build:
                    raise MissingTableError(f"no DUST table for {err_x} vs {err_y}")
                table = build_dust_table(err_x, err_y, self.grid_step, self.max_delta, self.phi_min)
                self._insert(key, table)
            return table

    def table_id(self, err_x, err_y) -> int:
        self.get(err_x, err_y)
        return self._ids[(err_x, err_y)]

    def packed(self):
        with self._lock:
            if self._packed is None:
                tables = sorted(self._tables.items(), key=lambda kv: self._ids[kv[0]])
                gs = [t.g for _, t in tables]
                offsets = np.zeros(len(gs), dtype=np.intp)
                if gs:
                    offsets[1:] = np.cumsum([g.size for g in gs])[:-1]
                self._packed = (
                    np.ascontiguousarray(np.concatenate(gs) if gs else np.zeros(0)),
                    offsets,
                    np.array([t.grid_step for _, t in tables]),
                    np.array([t.half for _, t in tables], dtype=np.intp),
                    np.array([t.g_sat for _, t in tables]),
                )
            return self._packed

    def pair_ids(self, q_kinds, q_stds, C_kinds, C_stds) -> np.ndarray:
        """Table id for every (query timestamp, candidate timestamp) pair, shaped like ``C``."""
        C_kinds = np.atleast_2d(C_kinds)
        C_stds = np.atleast_2d(C_stds)
        q_models, q_inv = _unique_models(q_kinds, q_stds)
        c_models, c_inv = _unique_models(C_kinds.ravel(), C_stds.ravel())
        lookup = np.empty((len(q_models), len(c_models)), dtype=np.int32)
        for a, mq in enumerate(q_models):
            for b, mc in enumerate(c_models):
                lookup[a, b] = self.table_id(mq, mc)
        q_inv_b = np.broadcast_to(q_inv, C_kinds.shape)
        return np.ascontiguousarray(lookup[q_inv_b, c_inv.reshape(C_kinds.shape)])


def _unique_models(kinds, stds):
    kinds = np.asarray(kinds).ravel().astype(np.int64)
    stds = np.asarray(stds, dtype=np.float64).ravel()
    std_vals, std_inv = np.unique(stds, return_inverse=True)
    codes, inv = np.unique(kinds * std_vals.size + std_inv.ravel(), return_inverse=True)
    models = [ErrorModel(KIND_ORDER[int(c // std_vals.size)], float(std_vals[c % std_vals.size])) for c in codes]
    return models, inv.ravel()


def _series_arrays(X):
    if not isinstance(X, ProbabilisticSeries):
        raise ValidationError("DUST needs probabilistic series (observations plus error models)")
    return X.observations, X.kinds, X.stds


def dust_many(q_obs, q_kinds, q_stds, C_obs, C_kinds, C_stds, tables) -> np.ndarray:
    """DUST from one query to every row of a collection."""
    C_obs = np.ascontiguousarray(np.atleast_2d(C_obs), dtype=np.float64)
    if isinstance(tables, DustTables):
        tid = tables.pair_ids(q_kinds, q_stds, C_kinds, C_stds)
        packed = tables.packed()
    else:
        tid, packed = _pack_mapping(tables, q_kinds, q_stds, C_kinds, C_stds)
    sums = _kernels.dust_rows(np.ascontiguousarray(q_obs, dtype=np.float64), C_obs, tid, *packed)
    return np.sqrt(sums)


def _pack_mapping(tables, q_kinds, q_stds, C_kinds, C_stds):
    # plain mapping {(ErrorModel, ErrorModel): DustTable}: never builds, only looks up
    registry = DustTables(auto_build=False)
    for key, table in tables.items():
        registry._insert(key, table)
    return registry.pair_ids(q_kinds, q_stds, C_kinds, C_stds), registry.packed()


def dust(X: ProbabilisticSeries, Y: ProbabilisticSeries, tables) -> float:
    """``sqrt(sum_i dust(x_i, y_i)^2)``.

    ``tables`` is a :class:`DustTables` cache or a plain mapping from
    ``(ErrorModel, ErrorModel)`` to :class:`DustTable`.
    """
    xo, xk, xs = _series_arrays(X)
    yo, yk, ys = _series_arrays(Y)
    if xo.shape != yo.shape:
        raise ValidationError(f"length mismatch: {xo.size} vs {yo.size}")
    return float(dust_many(xo, xk, xs, yo[None, :], yk[None, :], ys[None, :], tables)[0])
