"""Retrieval quality metrics."""
import math

import numpy as np

from ..core import ValidationError

Z_95 = 1.96


def precision_recall(retrieved, truth):
    """``(precision, recall)``; precision of an empty answer is 0."""
    truth = set(truth)
    if not truth:
        raise ValidationError("ground truth must not be empty")
    retrieved = set(retrieved)
    hits = len(retrieved & truth)
    precision = hits / len(retrieved) if retrieved else 0.0
    return precision, hits / len(truth)


def f1(precision, recall):
    total = precision + recall
    if total == 0:
        return 0.0
    return 2.0 * precision * recall / total


def confidence_interval_95(samples):
    """``(mean, half_width)`` with the normal 1.96 multiplier and the n-1 sample std."""
    x = np.asarray(samples, dtype=np.float64)
    if x.size < 2:
        raise ValidationError("need at least 2 samples for a confidence interval")
    mean = float(x.mean())
    sd = float(np.std(x, ddof=1))
    return mean, Z_95 * sd / math.sqrt(x.size)
