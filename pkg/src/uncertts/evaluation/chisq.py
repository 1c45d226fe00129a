"""Chi-square goodness-of-fit test of pooled dataset values against a uniform law."""
import math

import numpy as np
from scipy import special

from ..core import Dataset, ValidationError


def chi2_critical(alpha: float, dof: int) -> float:
    """Upper ``alpha`` quantile of the chi-square law, via the regularized upper incomplete gamma."""
    if not 0 < alpha < 1:
        raise ValidationError("alpha must lie in (0, 1)")
    if dof < 1:
        raise ValidationError("need at least one degree of freedom")
    return 2.0 * float(special.gammainccinv(0.5 * dof, alpha))


def chi_square_uniformity(ds, alpha: float = 0.01):
    """``(statistic, reject)`` for H0: the pooled values are uniform on ``[min, max]``.

    Values are binned into ``ceil(sqrt(N))`` equal-width cells.
    """
    values = ds.values.ravel() if isinstance(ds, Dataset) else np.asarray(ds, dtype=np.float64).ravel()
    n = values.size
    if n < 50:
        raise ValidationError(f"need at least 50 values, got {n}")
    bins = int(math.ceil(math.sqrt(n)))
    lo, hi = float(values.min()), float(values.max())
    if hi == lo:
        # a point mass is as far from uniform as it gets
        return math.inf, True
    observed, _ = np.histogram(values, bins=bins, range=(lo, hi))
    expected = n / bins
    stat = float(((observed - expected) ** 2).sum() / expected)
    return stat, stat > chi2_critical(alpha, bins - 1)
