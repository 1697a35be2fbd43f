"""Small statistical helpers used by experiments and acceptance checks."""

from __future__ import annotations

import math
from collections.abc import Sequence

import numpy as np
from scipy import stats


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    if trials <= 0:
        return (0.0, 1.0)
    ci = stats.binomtest(int(successes), int(trials)).proportion_ci(confidence_level=confidence, method="wilson")
    return (float(ci.low), float(ci.high))


def two_proportion_z(hits_a: int, n_a: int, hits_b: int, n_b: int) -> tuple[float, float]:
    """Pooled two-proportion z statistic and its two-sided p-value.

    With zero pooled variance (both rates 0 or both 1) the samples cannot be
    told apart, so the result is ``(0.0, 1.0)``.
    """
    pooled = (hits_a + hits_b) / (n_a + n_b)
    var = pooled * (1 - pooled) * (1 / n_a + 1 / n_b)
    if var == 0:
        return 0.0, 1.0
    z = (hits_a / n_a - hits_b / n_b) / math.sqrt(var)
    return z, float(2 * stats.norm.sf(abs(z)))


def uniformity_pvalue(values: np.ndarray, categories: int) -> float:
    """Chi-square goodness of fit of integer samples against the uniform law on ``[categories]``."""
    counts = np.bincount(np.asarray(values, dtype=np.int64).reshape(-1), minlength=categories)
    return float(stats.chisquare(counts).pvalue)


def loglog_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    lx, ly = np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float))
    return float(np.polyfit(lx, ly, 1)[0])
