from __future__ import annotations

import numpy as np
import pytest

from qpmatch.stats import loglog_slope, two_proportion_z, uniformity_pvalue, wilson_interval


def test_wilson_contains_estimate():
    lo, hi = wilson_interval(150, 200)
    assert lo < 0.75 < hi
    assert wilson_interval(0, 10)[0] == 0.0
    assert wilson_interval(10, 10)[1] == pytest.approx(1.0)


def test_wilson_narrows_with_trials():
    a = wilson_interval(50, 100)
    b = wilson_interval(500, 1000)
    assert b[1] - b[0] < a[1] - a[0]


def test_two_proportion():
    z, p = two_proportion_z(100, 200, 100, 200)
    assert z == 0 and p == pytest.approx(1.0)
    z, p = two_proportion_z(190, 200, 100, 200)
    assert p < 1e-6
    assert two_proportion_z(200, 200, 200, 200) == (0.0, 1.0)


def test_uniformity():
    rng = np.random.default_rng(0)
    assert uniformity_pvalue(rng.integers(0, 4, 4000), 4) > 0.01
    assert uniformity_pvalue(np.zeros(400, int), 4) < 1e-6


def test_loglog_slope():
    x = np.array([2.0, 4, 8, 16])
    assert loglog_slope(x, 3 * x**0.5) == pytest.approx(0.5)
    assert loglog_slope(x, x**2) == pytest.approx(2.0)
