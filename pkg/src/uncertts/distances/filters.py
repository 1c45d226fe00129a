"""Moving-average filters, plain and uncertainty-weighted.

Windows are truncated at the sequence edges. UMA and UEMA follow their
defining formulas literally: ``1/s_j`` weights the numerator only. Pass
``normalized=True`` to divide by the matching sum of ``1/s_j`` weights
instead, which keeps the output on the scale of the input.
"""
import numpy as np

from .. import _kernels
from ..core import ProbabilisticSeries, ValidationError


def _matrix(v):
    arr = np.ascontiguousarray(v, dtype=np.float64)
    return arr[None, :] if arr.ndim == 1 else arr


def _shape_back(out, like):
    return out[0] if np.ndim(like) == 1 else out


def _check(w, lam):
    if int(w) != w or w < 0:
        raise ValidationError("w must be a non-negative integer")
    if lam < 0:
        raise ValidationError("lambda must be non-negative")
    return int(w), float(lam)


def window_filter(values, stds=None, w=2, lam=0.0, normalized=False):
    """Shared engine for all four filters; rows of a 2-D input are filtered independently.

    ``stds=None`` gives MA (``lam == 0``) or EMA; otherwise UMA/UEMA.
    """
    w, lam = _check(w, lam)
    V = _matrix(values)
    ones = np.ones_like(V)
    if stds is None:
        A = B = ones
    else:
        S = np.broadcast_to(_matrix(stds), V.shape)
        if np.any(S <= 0):
            raise ValidationError("all per-timestamp stds must be positive")
        inv = np.ascontiguousarray(1.0 / S)
        A = inv
        B = inv if normalized else ones
    return _shape_back(_kernels.weighted_window(V, A, B, w, lam), values)


def ma_filter(values, w):
    return window_filter(values, None, w, 0.0)


def ema_filter(values, w, lam):
    return window_filter(values, None, w, lam)


def _obs_std(X):
    if isinstance(X, ProbabilisticSeries):
        return X.observations, X.stds
    raise ValidationError("uncertain filters need a ProbabilisticSeries")


def uma_filter(X, w, normalized=False):
    obs, std = _obs_std(X)
    return window_filter(obs, std, w, 0.0, normalized)


def uema_filter(X, w, lam, normalized=False):
    obs, std = _obs_std(X)
    return window_filter(obs, std, w, lam, normalized)
