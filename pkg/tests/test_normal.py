import math

import numpy as np
import pytest

from levybridge.normal import norm_cdf, norm_quantile

from helpers import bisect_normal_quantile


def test_quantile_at_one_fifth_matches_bisection_oracle():
    # frozen from a 30-digit bisection on the error function
    assert norm_quantile(0.2) == pytest.approx(-0.8416212335729142, abs=1e-12)
    assert norm_quantile(0.2) == pytest.approx(bisect_normal_quantile(0.2), abs=1e-11)


def test_quantile_accuracy_against_bisection():
    ps = np.concatenate([10.0 ** np.arange(-12, -1, 0.5),
                         np.linspace(0.01, 0.99, 197),
                         1.0 - 10.0 ** np.arange(-12, -1, 0.5)])
    for p in ps:
        assert abs(norm_quantile(float(p)) - bisect_normal_quantile(float(p))) < 1e-9


def test_quantile_median_and_symmetry():
    assert norm_quantile(0.5) == pytest.approx(0.0, abs=1e-12)
    for p in (0.01, 0.2, 0.37, 0.45):
        assert norm_quantile(p) == pytest.approx(-norm_quantile(1.0 - p), abs=1e-11)


def test_quantile_roundtrips_cdf():
    # |x| <= 5 keeps the double rounding of the CDF value below 1e-10 in x
    for x in np.linspace(-5.0, 5.0, 101):
        assert norm_quantile(norm_cdf(float(x))) == pytest.approx(x, abs=1e-9)


def test_quantile_clamps_extreme_probabilities():
    # values below the clamp collapse onto the clamp quantile, staying finite
    assert norm_quantile(1e-15) == norm_quantile(1e-12)
    assert math.isfinite(norm_quantile(1e-15))


def test_quantile_rejects_out_of_range():
    for bad in (0.0, 1.0, -0.2, 1.2):
        with pytest.raises(ValueError):
            norm_quantile(bad)
