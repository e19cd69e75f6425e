import math

import numpy as np
import pytest

from levybridge.coupling import EmpiricalCdf
from levybridge.metrics import (CouplingConfig, EstimateWithError,
                                endpoint_rmse, msmd_estimate,
                                run_replications, summarize_msmd,
                                sup_distance, wasserstein2_empirical)
from levybridge.models import BrownianMotion, FinePath, stable_preset

from helpers import brute_force_wasserstein2

PRESET = stable_preset(0.1, 0.03)


class _PathPair:
    def __init__(self, x, w):
        self.x = x
        self.w = w


def _pair_from_values(xv, wv, q):
    return _PathPair(FinePath(q=q, values=xv), FinePath(q=q, values=wv))


class TestSupDistance:
    def test_identical_paths_zero(self):
        vals = np.zeros(2 ** 3 + 1)
        assert sup_distance(_pair_from_values(vals, vals, 3)) == 0.0

    def test_line_to_one(self):
        q = 3
        zero = np.zeros(2 ** q + 1)
        line = np.arange(2 ** q + 1) / 2 ** q
        assert sup_distance(_pair_from_values(zero, line, q)) == 1.0

    def test_matches_reversed_scan_oracle(self):
        rng = np.random.default_rng(0)
        x = BrownianMotion().sample_fine_path(6, rng)
        w = BrownianMotion().sample_fine_path(6, rng)
        fast = sup_distance(_PathPair(x, w))
        slow = 0.0
        for j in range(2 ** 6, -1, -1):  # reversed scan order
            slow = max(slow, abs(x.values[j] - w.values[j]))
        assert fast == slow

    def test_dominates_endpoint_gap(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            x = BrownianMotion().sample_fine_path(5, rng)
            w = BrownianMotion().sample_fine_path(5, rng)
            pair = _PathPair(x, w)
            assert sup_distance(pair) >= abs(x.endpoint - w.endpoint)

    def test_resolution_mismatch(self):
        rng = np.random.default_rng(2)
        x = BrownianMotion().sample_fine_path(5, rng)
        w = BrownianMotion().sample_fine_path(6, rng)
        with pytest.raises(ValueError):
            sup_distance(_PathPair(x, w))


class TestEstimates:
    def test_estimate_with_error_validation(self):
        with pytest.raises(ValueError):
            EstimateWithError(mean=1.0, std_error=-0.1, n=10)

    def test_mean_invariant_under_reordering(self):
        rng = np.random.default_rng(3)
        sups = rng.uniform(0.1, 2.0, size=501)
        a = summarize_msmd(sups)
        b = summarize_msmd(rng.permutation(sups))
        assert a.mean_sq.mean == b.mean_sq.mean
        assert a.rms == b.rms

    def test_seed_consistency_between_runs(self):
        cfg = CouplingConfig(ks=(32,), q=9, endpoint_samples=4000)
        est1 = msmd_estimate(PRESET, cfg, 300, np.random.default_rng(100))
        est2 = msmd_estimate(PRESET, cfg, 300, np.random.default_rng(200))
        gap = abs(est1.mean_sq.mean - est2.mean_sq.mean)
        combined = math.hypot(est1.mean_sq.std_error, est2.mean_sq.std_error)
        assert gap < 3.0 * combined

    def test_requires_two_replications(self):
        cfg = CouplingConfig(ks=(4,), q=4, endpoint_samples=100)
        with pytest.raises(ValueError):
            msmd_estimate(PRESET, cfg, 1, np.random.default_rng(0))


class TestEndpointRmse:
    def test_exact_normal_cdf_couples_identically(self):
        cfg = CouplingConfig(ks=(8,), q=6, exact_endpoint=True)
        est = endpoint_rmse(BrownianMotion(), cfg, 200, np.random.default_rng(4))
        assert est.mean < 1e-8

    def test_rmse_shrinks_with_endpoint_sample_size(self):
        rng = np.random.default_rng(60)
        values = {}
        for m in (300, 3000, 30000):
            cfg = CouplingConfig(ks=(8,), q=6, endpoint_samples=m)
            est = endpoint_rmse(PRESET, cfg, 400, rng)
            values[m] = est
        # monotone trend within error bars
        assert values[300].mean > values[3000].mean - 2 * (
            values[300].std_error + values[3000].std_error)
        assert values[3000].mean > values[30000].mean - 2 * (
            values[3000].std_error + values[30000].std_error)
        assert values[300].mean > values[30000].mean


class TestWasserstein:
    def test_trivial_cases(self):
        assert wasserstein2_empirical([1.0, 2.0], [2.0, 1.0]) == 0.0
        assert wasserstein2_empirical([0.0], [1.0]) == 1.0

    def test_matches_exhaustive_assignment(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            n = int(rng.integers(1, 7))
            a = rng.normal(size=n)
            b = rng.normal(size=n)
            assert wasserstein2_empirical(a, b) == pytest.approx(
                brute_force_wasserstein2(a, b), abs=1e-12)

    def test_symmetry_and_triangle(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            a, b, c = (rng.normal(size=10) for _ in range(3))
            assert wasserstein2_empirical(a, b) == wasserstein2_empirical(b, a)
            assert wasserstein2_empirical(a, c) <= (
                wasserstein2_empirical(a, b) + wasserstein2_empirical(b, c) + 1e-12)

    def test_errors(self):
        with pytest.raises(ValueError):
            wasserstein2_empirical([1.0], [1.0, 2.0])
        with pytest.raises(ValueError):
            wasserstein2_empirical([], [])


class TestReplicationBatch:
    def test_prebuilt_cdf_reused(self):
        rng = np.random.default_rng(8)
        fx = EmpiricalCdf.from_model(PRESET, 2000, rng)
        cfg = CouplingConfig(ks=(8,), q=6)
        batch = run_replications(PRESET, cfg, 50, rng, fx=fx)
        assert batch.sup_distances.shape == (50,)
        assert np.all(batch.sup_distances >= np.abs(batch.endpoint_diffs) - 1e-12)
