"""PROUD: normal approximation of the squared-distance distribution."""
from __future__ import annotations

import math

import numpy as np

from .. import _kernels
from ..core import ProbabilisticSeries, TimeSeries, ValidationError

# Acklam's rational approximation, refined by one Halley step
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def _lower_tail(t: float) -> float:
    if t < _P_LOW:
        q = math.sqrt(-2.0 * math.log(t))
        x = (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
            ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    else:
        q = t - 0.5
        r = q * q
        x = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / \
            (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)
    e = 0.5 * math.erfc(-x / math.sqrt(2.0)) - t
    u = e * math.sqrt(2.0 * math.pi) * math.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


def inverse_normal_cdf(tau: float) -> float:
    """Standard normal quantile, accurate to about 1e-15 absolute."""
    tau = float(tau)
    if not 0.0 < tau < 1.0:
        raise ValidationError(f"tau must lie in (0, 1), got {tau!r}")
    if tau == 0.5:
        return 0.0
    if tau > 0.5:
        return -_lower_tail(1.0 - tau)
    return _lower_tail(tau)


def _obs_std(x):
    if isinstance(x, ProbabilisticSeries):
        return x.observations, x.stds
    if isinstance(x, TimeSeries):
        return x.values, np.zeros(len(x))
    obs = np.asarray(x, dtype=np.float64)
    return obs, np.zeros(obs.size)


def moments_many(q_obs, q_std, C_obs, C_std):
    """Mean and variance of ``sum D_i^2`` for a query against every row of a collection."""
    C_obs = np.ascontiguousarray(np.atleast_2d(C_obs), dtype=np.float64)
    C_std = np.ascontiguousarray(np.broadcast_to(C_std, C_obs.shape), dtype=np.float64)
    q_obs = np.ascontiguousarray(q_obs, dtype=np.float64)
    q_std = np.ascontiguousarray(np.broadcast_to(q_std, q_obs.shape), dtype=np.float64)
    return _kernels.proud_rows(q_obs, q_std, C_obs, C_std)


def proud_distance_moments(q, y):
    """``(mean, variance)`` of the squared distance, assuming per-point normal errors.

    ``q`` may be certain (a :class:`TimeSeries` or plain array), in which case
    its std is zero.
    """
    q_obs, q_std = _obs_std(q)
    y_obs, y_std = _obs_std(y)
    if q_obs.shape != y_obs.shape:
        raise ValidationError(f"length mismatch: {q_obs.size} vs {y_obs.size}")
    mean, var = moments_many(q_obs, q_std, y_obs[None, :], y_std[None, :])
    return float(mean[0]), float(var[0])


def normalized_eps(eps, mean, var):
    """``(eps^2 - mean) / sqrt(var)``; +-inf stands in for the deterministic case ``var == 0``."""
    mean = np.asarray(mean, dtype=np.float64)
    var = np.asarray(var, dtype=np.float64)
    diff = eps * eps - mean
    with np.errstate(divide="ignore", invalid="ignore"):
        out = diff / np.sqrt(var)
    certain = var <= 0
    if np.any(certain):
        out = np.where(certain, np.where(diff >= 0, np.inf, -np.inf), out)
    return out


def proud_accepts(q, y, eps: float, tau: float):
    """Return ``(accepted, normalized eps)`` for one candidate."""
    limit = inverse_normal_cdf(tau)
    mean, var = proud_distance_moments(q, y)
    score = float(normalized_eps(eps, mean, var))
    return bool(score >= limit), score
