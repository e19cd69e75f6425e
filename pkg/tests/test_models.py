import math

import numpy as np
import pytest
from scipy import integrate, stats

from levybridge.models import (BrownianMotion, CompoundPoissonDrift,
                               ConstantJumps, ExponentialJumps, FinePath,
                               GammaMartingale, NormalJumps,
                               NumericalGuardError, PerturbedBM,
                               SmallJumpAnnulus, TruncatedStable,
                               TruncatedJumps, UniformJumps,
                               WithBrownianJitter, increments_on_grid,
                               parse_model_spec, stable_preset)

PRESET = stable_preset(0.1, 0.03)


class TestFinePath:
    def test_validates_length_and_origin(self):
        with pytest.raises(ValueError):
            FinePath(q=2, values=np.zeros(4))
        with pytest.raises(ValueError):
            FinePath(q=2, values=np.ones(5))
        with pytest.raises(ValueError):
            FinePath(q=0, values=np.zeros(2))
        FinePath(q=2, values=np.zeros(5))

    def test_rejects_non_finite(self):
        vals = np.zeros(5)
        vals[3] = np.inf
        with pytest.raises(ValueError):
            FinePath(q=2, values=vals)


class TestIncrementsOnGrid:
    def test_single_cell_is_endpoint(self):
        rng = np.random.default_rng(0)
        path = BrownianMotion().sample_fine_path(5, rng)
        incr = increments_on_grid(path, 1)
        assert incr.shape == (1,)
        assert incr[0] == path.endpoint

    def test_linear_path_equal_increments(self):
        q = 6
        path = FinePath(q=q, values=np.arange(2 ** q + 1) / 2 ** q)
        assert np.allclose(increments_on_grid(path, 4), 0.25, atol=1e-15)

    def test_telescopes_bit_exactly(self):
        rng = np.random.default_rng(12)
        path = BrownianMotion().sample_fine_path(6, rng)
        incr = increments_on_grid(path, 8)
        total = 0.0
        for v in incr:  # left-to-right summation order
            total += v
        assert total == path.endpoint

    def test_rejects_non_divisor(self):
        rng = np.random.default_rng(0)
        path = BrownianMotion().sample_fine_path(4, rng)
        with pytest.raises(ValueError):
            increments_on_grid(path, 3)


class TestBrownianMotion:
    def test_q1_increments_are_scaled_normals(self):
        rng = np.random.default_rng(99)
        z = np.random.default_rng(99).standard_normal(2)
        path = BrownianMotion().sample_fine_path(1, rng)
        root_half = math.sqrt(0.5)
        assert path.values[1] == pytest.approx(z[0] * root_half, abs=0)
        assert path.values[2] == pytest.approx((z[0] + z[1]) * root_half, rel=1e-15)

    def test_moments_are_zero(self):
        m = BrownianMotion().moments()
        assert m.mu4 == 0.0 and m.jump_rate == 0.0 and m.tail(0.5) == 0.0


class TestTruncatedStable:
    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            TruncatedStable(2.5, 0.4, 0.6, 0.03, 0.1)
        with pytest.raises(ValueError):
            TruncatedStable(1.5, 0.4, 0.6, 0.1, 0.03)
        with pytest.raises(ValueError):
            TruncatedStable(1.5, 0.0, 0.0, 0.03, 0.1)

    def test_standardization_moments_monte_carlo(self):
        # 1e4 paths at the experiment resolution: mean within 4 / sqrt(n) of
        # 0 and variance within 5% of 1
        rng = np.random.default_rng(2024)
        n = 10 ** 4
        ends = np.empty(n)
        for i in range(n):
            ends[i] = PRESET.sample_fine_path(12, rng).endpoint
        assert abs(ends.mean()) < 4.0 / math.sqrt(n)
        assert abs(ends.var() - 1.0) < 0.05

    def test_endpoint_draw_variance(self):
        rng = np.random.default_rng(7)
        draws = PRESET.sample_marginal(1.0, rng, size=30000)
        assert 0.9 < draws.var() < 1.1

    def test_endpoint_matches_path_endpoint_in_law(self):
        rng = np.random.default_rng(5)
        ends_path = np.array([PRESET.sample_fine_path(4, rng).endpoint
                              for _ in range(10 ** 4)])
        ends_direct = PRESET.sample_marginal(1.0, rng, size=10 ** 4)
        assert stats.ks_2samp(ends_path, ends_direct).pvalue > 0.01

    def test_mu4_closed_form_matches_quadrature_oracle(self):
        a, cn, cp, lo, hi = 1.5, 0.4, 0.6, 0.03, 0.1
        model = TruncatedStable(a, cn, cp, lo, hi)
        density = lambda x: (cn + cp) * x ** (-a - 1.0)
        m4, _ = integrate.quad(lambda x: x ** 4 * density(x), lo, hi,
                               epsabs=0, epsrel=1e-13)
        m2, _ = integrate.quad(lambda x: x ** 2 * density(x), lo, hi,
                               epsabs=0, epsrel=1e-13)
        oracle = m4 / m2 ** 2
        assert model.moments().mu4 == pytest.approx(oracle, rel=1e-10)
        # frozen oracle value for this preset
        assert model.moments().mu4 == pytest.approx(0.01469724415351428, rel=1e-12)

    def test_coarse_grid_values_bit_identical_across_resolutions(self):
        coarse = PRESET.sample_fine_path(6, np.random.default_rng(77))
        fine = PRESET.sample_fine_path(10, np.random.default_rng(77))
        assert np.array_equal(coarse.values, fine.values[::16])

    def test_tail_is_nonincreasing_and_truncates(self):
        m = PRESET.moments()
        xs = np.linspace(0.0, 1.0, 200)
        vals = [m.tail(x) for x in xs]
        assert all(a >= b for a, b in zip(vals, vals[1:]))
        assert m.tail(0.2 / PRESET.sigma * PRESET.sigma) >= 0.0
        assert m.tail(1.0) == 0.0

    def test_jump_rate_guard(self):
        crazy = TruncatedStable(1.9, 0.5, 0.5, 1e-7, 0.1)
        assert crazy.jump_rate > 1e8
        with pytest.raises(NumericalGuardError):
            crazy.sample_fine_path(4, np.random.default_rng(0))


class TestCompoundPoisson:
    def test_rate_zero_is_identically_zero(self):
        model = CompoundPoissonDrift(0.0, NormalJumps())
        path = model.sample_fine_path(5, np.random.default_rng(1))
        assert np.all(path.values == 0.0)
        assert model.sample_endpoint(np.random.default_rng(2)) == 0.0

    def test_standardized_moments(self):
        rng = np.random.default_rng(42)
        model = CompoundPoissonDrift(4.0, ExponentialJumps(0.7))
        draws = model.sample_marginal(1.0, rng, size=40000)
        assert abs(draws.mean()) < 4.0 / math.sqrt(draws.size)
        assert abs(draws.var() - 1.0) < 0.05

    def test_piecewise_constant_between_jumps(self):
        model = CompoundPoissonDrift(3.0, ConstantJumps(1.0), standardize=False)
        path = model.sample_fine_path(8, np.random.default_rng(3))
        steps = np.diff(path.values)
        assert set(np.round(steps[steps != 0.0], 12)) <= {1.0}

    def test_mu4_from_jump_moments(self):
        model = CompoundPoissonDrift(2.0, NormalJumps(0.0, 0.5))
        sig2 = 2.0 * 0.25
        expected = 2.0 * (3 * 0.5 ** 4) / sig2 ** 2
        assert model.moments().mu4 == pytest.approx(expected, rel=1e-12)


class TestGammaMartingale:
    def test_mu4_matches_quadrature_oracle(self):
        a, b = 1.3, 0.7
        model = GammaMartingale(a, b)
        m4, _ = integrate.quad(lambda x: x ** 3 * a * math.exp(-b * x), 0, 300,
                               epsabs=0, epsrel=1e-12)
        m2, _ = integrate.quad(lambda x: x * a * math.exp(-b * x), 0, 300,
                               epsabs=0, epsrel=1e-12)
        assert model.moments().mu4 == pytest.approx(m4 / m2 ** 2, rel=1e-10)
        assert model.moments().mu4 == pytest.approx(6.0 / a, rel=1e-12)

    def test_standardized_endpoint(self):
        rng = np.random.default_rng(11)
        model = GammaMartingale(2.0, 3.0)
        draws = model.sample_marginal(1.0, rng, size=40000)
        assert abs(draws.mean()) < 4.0 / math.sqrt(draws.size)
        assert abs(draws.var() - 1.0) < 0.05


class TestPerturbedBM:
    def test_mu4_scaling(self):
        inner = stable_preset(0.1, 0.03)
        for eps in (0.1, 0.5, 1.0):
            model = PerturbedBM(eps, inner)
            assert model.moments().mu4 == pytest.approx(
                eps ** 4 * inner.moments().mu4, rel=1e-12)

    def test_unit_variance(self):
        rng = np.random.default_rng(8)
        model = PerturbedBM(0.5, stable_preset(0.1, 0.03))
        draws = model.sample_marginal(1.0, rng, size=40000)
        assert abs(draws.var() - 1.0) < 0.05


class TestSmallJumpAnnulus:
    def test_stable_restriction_matches_narrower_model(self):
        base = TruncatedStable(1.5, 0.4, 0.6, 2 ** -16, 1.0)
        ann = SmallJumpAnnulus(base, 2 ** -4, 2 ** -3)
        direct = TruncatedStable(1.5, 0.4, 0.6, 2 ** -4, 2 ** -3)
        assert not ann.degenerate
        assert ann.raw_sigma == pytest.approx(direct.sigma, rel=1e-14)
        assert ann.moments().mu4 == pytest.approx(direct.moments().mu4, rel=1e-12)

    def test_empty_band_is_degenerate(self):
        base = TruncatedStable(1.5, 0.4, 0.6, 0.03, 0.1)
        ann = SmallJumpAnnulus(base, 0.2, 0.4)
        assert ann.degenerate
        assert np.all(ann.sample_skeleton(8, np.random.default_rng(0)) == 0.0)

    def test_cpp_band_mass_and_sampling(self):
        base = CompoundPoissonDrift(5.0, UniformJumps(-1.0, 1.0))
        ann = SmallJumpAnnulus(base, 0.25, 0.5)
        band = TruncatedJumps(base.jumps, 0.25, 0.5)
        assert band.band_mass == pytest.approx(0.25, rel=1e-12)
        rng = np.random.default_rng(4)
        draws = band.quantile(rng.uniform(size=2000))
        assert np.all((np.abs(draws) > 0.25) & (np.abs(draws) <= 0.5))
        moments = ann.moments()
        assert moments.mu4 > 0


class TestJitter:
    def test_jitter_perturbation_is_negligible(self):
        base = CompoundPoissonDrift(3.0, ConstantJumps(1.0))
        noisy = WithBrownianJitter(base, variance=1e-12)
        a = base.sample_fine_path(6, np.random.default_rng(5))
        b = noisy.sample_fine_path(6, np.random.default_rng(5))
        assert np.max(np.abs(a.values - b.values)) < 1e-5
        assert not np.array_equal(a.values, b.values)


class TestPresets:
    def test_parse_round_trip(self):
        m = parse_model_spec("exp-stable(0.1,0.03)")
        assert isinstance(m, TruncatedStable)
        assert (m.eps_hi, m.eps_lo) == (0.1, 0.03)
        assert isinstance(parse_model_spec("fig1-gamma"), GammaMartingale)
        assert isinstance(parse_model_spec("annulus(3)"), TruncatedStable)
        assert isinstance(parse_model_spec("perturbed(0.5)"), PerturbedBM)
        assert isinstance(parse_model_spec("bm"), BrownianMotion)

    def test_parse_rejects_unknown(self):
        with pytest.raises(ValueError):
            parse_model_spec("mystery-model")
        with pytest.raises(ValueError):
            parse_model_spec("exp-stable(0.1")
