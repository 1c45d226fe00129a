"""Lp distance on certain sequences."""
import numpy as np

from .. import _kernels
from ..core import ValidationError


def check_p(p) -> int:
    if int(p) != p or int(p) < 1:
        raise ValidationError(f"p must be a positive integer, got {p!r}")
    return int(p)


def as_vector(x) -> np.ndarray:
    v = getattr(x, "values", None)
    if v is None:
        v = getattr(x, "observations", x)
    return np.ascontiguousarray(v, dtype=np.float64)


def lp_distance(a, b, p=2) -> float:
    """``(sum |a_i - b_i|^p)^(1/p)``, accumulated left to right."""
    p = check_p(p)
    a, b = as_vector(a), as_vector(b)
    if a.shape != b.shape or a.ndim != 1:
        raise ValidationError(f"length mismatch: {a.shape} vs {b.shape}")
    return float(_kernels.lp_rows(a, b[None, :], p)[0])


def lp_many(q, C, p=2) -> np.ndarray:
    """Lp distance from ``q`` to every row of ``C``."""
    p = check_p(p)
    q = as_vector(q)
    C = np.ascontiguousarray(C, dtype=np.float64)
    if C.ndim != 2 or C.shape[1] != q.size:
        raise ValidationError(f"length mismatch: {q.size} vs {C.shape}")
    return _kernels.lp_rows(q, C, p)


def euclidean(a, b) -> float:
    return lp_distance(a, b, 2)
