"""Similarity measures for certain and uncertain time series."""
from .dust import (
    PHI_MIN,
    DustTable,
    DustTables,
    MissingTableError,
    build_dust_table,
    dust,
    dust_many,
    dust_point,
)
from .filters import ema_filter, ma_filter, uema_filter, uma_filter, window_filter
from .lp import euclidean, lp_distance, lp_many
from .munich import (
    InstanceTooLarge,
    MunichBounds,
    MunichEstimate,
    combination_count,
    munich_bounds,
    munich_probability,
    munich_probability_dp,
    munich_probability_exact,
)
from .proud import (
    inverse_normal_cdf,
    moments_many,
    normalized_eps,
    proud_accepts,
    proud_distance_moments,
)

__all__ = [
    "PHI_MIN", "DustTable", "DustTables", "MissingTableError", "build_dust_table", "dust",
    "dust_many", "dust_point", "ema_filter", "ma_filter", "uema_filter", "uma_filter",
    "window_filter", "euclidean", "lp_distance", "lp_many", "InstanceTooLarge", "MunichBounds",
    "MunichEstimate", "combination_count", "munich_bounds", "munich_probability",
    "munich_probability_dp", "munich_probability_exact", "inverse_normal_cdf", "moments_many",
    "normalized_eps", "proud_accepts", "proud_distance_moments",
]
