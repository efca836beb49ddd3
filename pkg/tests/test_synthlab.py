import hashlib
import math

import numpy as np
import pytest

from estimkit import (
    DensityCurve,
    GbmParams,
    HestonParams,
    SamplePairs,
    build_empirical_cdf,
    error_report,
    gen_bivariate_gaussian,
    gen_gbm,
    gen_heston,
    joint_density_np,
    kde_density,
    make_grid,
)
from estimkit.errors import BadBandwidth, BadCovariance, BadParams, GridMismatch
from estimkit.synthlab import normal_pdf, silverman_bandwidth, std_normal_2d


def digest(a):
    return hashlib.sha256(np.ascontiguousarray(a).tobytes()).hexdigest()


GOLDEN = {
    "gbm": "79f5c0a8014b0f67d5b7403045e423c8b5b4db39f071f23b0143c97c89c67a8e",
    "heston_prices": "89fc6d3b448cb13d00ea4ef80441de0c8ab2c6f29aece9865907398406f9df06",
    "heston_var": "0f27699736fdb7d7d26a581652a9ec1131fadf0c63b5a0145bccf0038c52c30d",
    "gauss_x": "b986a3d20a163aa6f9cefd49eb02ac205174b401c1938278ee50a07105cd5085",
    "gauss_y": "cd3f673bc291f7fee073591dded1eb1f40cc4854b93a1630fe6835213e010d4e",
}


class TestDeterminism:
    def test_golden_paths(self):
        assert digest(gen_gbm(GbmParams(n_steps=1000, seed=42)).prices) == GOLDEN["gbm"]
        prices, var = gen_heston(HestonParams(n_steps=1000, seed=42))
        assert digest(prices.prices) == GOLDEN["heston_prices"]
        assert digest(var) == GOLDEN["heston_var"]
        s = gen_bivariate_gaussian([0, 0], [[1, 0.5], [0.5, 2]], 1000, 42)
        assert digest(s.xs) == GOLDEN["gauss_x"]
        assert digest(s.ys) == GOLDEN["gauss_y"]

    def test_seed_changes_path(self):
        a = gen_gbm(GbmParams(n_steps=50, seed=1)).prices
        b = gen_gbm(GbmParams(n_steps=50, seed=2)).prices
        assert not np.array_equal(a, b)


class TestGbm:
    def test_zero_vol_zero_drift(self):
        s = gen_gbm(GbmParams(s0=42.0, mu=0.0, sigma=0.0, n_steps=100))
        assert np.all(s.prices == 42.0) and len(s) == 101

    def test_zero_vol_pure_drift(self):
        r, dt = 0.05, 1 / 252
        s = gen_gbm(GbmParams(s0=10.0, mu=r, sigma=0.0, dt=dt, n_steps=500))
        np.testing.assert_allclose(s.prices, 10.0 * np.exp(r * np.arange(501) * dt), rtol=1e-13)

    @pytest.mark.parametrize("kw", [{"s0": 0}, {"sigma": -0.1}, {"dt": 0}, {"n_steps": 0}])
    def test_validation(self, kw):
        with pytest.raises(BadParams):
            GbmParams(**kw)


class TestHeston:
    def test_no_vol_of_vol_relaxes_monotonically(self):
        _, var = gen_heston(HestonParams(v0=0.09, theta=0.04, kappa=2.0, xi=0.0, n_steps=500))
        assert np.all(np.diff(var) <= 0) and np.all(var >= 0.04)
        _, var = gen_heston(HestonParams(v0=0.01, theta=0.04, kappa=2.0, xi=0.0, n_steps=500))
        assert np.all(np.diff(var) >= 0) and np.all(var <= 0.04)

    @pytest.mark.slow
    def test_ergodic_mean(self):
        _, var = gen_heston(HestonParams(v0=0.05, kappa=3.0, theta=0.05, xi=0.5, n_steps=252_000, seed=9))
        assert var.mean() == pytest.approx(0.05, rel=0.05)

    def test_matches_gbm_without_vol_of_vol(self):
        theta = 0.04
        heston, var = gen_heston(HestonParams(v0=theta, theta=theta, xi=0.0, rho=0.0, n_steps=2000, seed=3))
        gbm = gen_gbm(GbmParams(sigma=math.sqrt(theta), mu=0.0, n_steps=2000, seed=3))
        assert np.all(var == theta)
        np.testing.assert_allclose(heston.prices, gbm.prices, rtol=1e-12)

    def test_truncation_keeps_sqrt_argument_valid(self):
        # Feller ratio far below 1: the Euler variance goes negative, the price path stays finite
        p = HestonParams(v0=0.01, theta=0.01, kappa=0.5, xi=1.5, n_steps=5000, seed=4)
        assert p.feller_ratio < 1
        prices, var = gen_heston(p)
        assert var.min() < 0
        assert np.all(np.isfinite(prices.prices))

    def test_rho_bounds(self):
        with pytest.raises(BadParams):
            HestonParams(rho=1.5)


class TestGaussian:
    def test_identity_sanity(self):
        s = gen_bivariate_gaussian([0, 0], np.eye(2), 4, seed=0)
        assert abs(np.corrcoef(s.xs, s.ys)[0, 1]) < 1

    def test_degenerate_covariance(self):
        with pytest.raises(BadCovariance):
            gen_bivariate_gaussian([0, 0], [[1, 1 - 1e-12], [1 - 1e-12, 1]], 10, seed=0)

    def test_asymmetric_covariance(self):
        with pytest.raises(BadCovariance):
            gen_bivariate_gaussian([0, 0], [[1, 0.2], [0.1, 1]], 10, seed=0)

    @pytest.mark.slow
    def test_large_sample_mean(self):
        s = gen_bivariate_gaussian([0, 0], np.eye(2), 10**6, seed=1)
        assert abs(s.xs.mean()) < 0.005 and abs(s.ys.mean()) < 0.005

    def test_covariance_reproduced(self):
        cov = np.array([[1.0, 0.6], [0.6, 2.0]])
        s = gen_bivariate_gaussian([1, -1], cov, 200_000, seed=2)
        np.testing.assert_allclose(np.cov(s.xs, s.ys), cov, atol=0.02)


class TestKde:
    def test_silverman_rule(self):
        data = np.random.default_rng(0).standard_normal(100_000)
        data = (data - data.mean()) / data.std(ddof=1)
        assert silverman_bandwidth(data) == pytest.approx(0.106, rel=1e-12)

    def test_single_point_bump(self):
        g = make_grid((-3, 5), 0.5)
        curve = kde_density(np.full(10, 1.0), g, bandwidth=1.0)
        np.testing.assert_allclose(curve.values, normal_pdf(g.x_knots - 1.0), rtol=1e-12)

    def test_bad_bandwidth(self):
        g = make_grid((0, 1), 0.1)
        with pytest.raises(BadBandwidth):
            kde_density(np.array([0.0, 1.0]), g, bandwidth=0)
        with pytest.raises(BadBandwidth):
            kde_density(np.full(5, 2.0), g)

    def test_unit_mass_on_wide_grid(self):
        s = gen_bivariate_gaussian([0, 0], np.eye(2), 5000, seed=3)
        surface = kde_density(s, make_grid((-6, 6), 0.1, (-6, 6), 0.1))
        assert surface.integral() == pytest.approx(1.0, abs=1e-3)

    def test_matches_direct_sum(self):
        s = SamplePairs([0.0, 1.0, 0.5], [0.0, -1.0, 0.2])
        g = make_grid((-1, 1), 0.5, (-1, 1), 0.5)
        surface = kde_density(s, g, bandwidth=0.7, chunk=2)
        gx, gy = np.meshgrid(g.x_knots, g.y_knots, indexing="ij")
        direct = sum(normal_pdf((gx - x) / 0.7) * normal_pdf((gy - y) / 0.7) / 0.49 for x, y in zip(s.xs, s.ys)) / 3
        np.testing.assert_allclose(surface.values, direct, rtol=1e-12)

    @pytest.mark.slow
    def test_million_samples_peak(self):
        s = gen_bivariate_gaussian([0, 0], np.eye(2), 10**6, seed=4)
        surface = kde_density(s, make_grid((-2, 2), 0.1, (-2, 2), 0.1))
        assert surface.values[20, 20] * 2 * math.pi == pytest.approx(1.0, rel=0.05)


class TestErrorReport:
    def test_exact(self):
        g = make_grid((-1, 1), 0.1, (-1, 1), 0.1)
        gx, gy = np.meshgrid(g.x_knots, g.y_knots, indexing="ij")
        from estimkit import DensitySurface

        r = error_report(DensitySurface(g, std_normal_2d(gx, gy), "truth"), std_normal_2d, g)
        assert r.mae == r.rmse == r.mise == r.sup_error == 0.0

    def test_constant_offset(self):
        g = make_grid((0, 1), 0.1, (0, 1), 0.1)
        from estimkit import DensitySurface

        r = error_report(DensitySurface(g, np.full(g.shape, 1.1), "offset"), lambda x, y: np.ones_like(x), g)
        assert r.mae == pytest.approx(0.1)
        assert r.mise == pytest.approx(0.01)
        assert r.sup_error == pytest.approx(0.1)

    def test_curve(self):
        g = make_grid((0, 1), 0.25)
        r = error_report(DensityCurve(g, np.full(g.nx, 0.5), "half"), lambda x: np.ones_like(x))
        assert r.rmse == pytest.approx(0.5) and r.mise == pytest.approx(0.25)

    def test_grid_mismatch(self):
        g = make_grid((0, 1), 0.25)
        with pytest.raises(GridMismatch):
            error_report(DensityCurve(g, np.ones(g.nx), "x"), lambda x: x, make_grid((0, 1), 0.5))

    def test_np_vs_kde_both_finite(self):
        s = gen_bivariate_gaussian([0, 0], np.eye(2), 10**5, seed=5)
        g = make_grid((-2, 2), 0.1, (-2, 2), 0.1)
        reports = [error_report(joint_density_np(build_empirical_cdf(s), g), std_normal_2d),
                   error_report(kde_density(s, g), std_normal_2d)]
        for r in reports:
            assert all(math.isfinite(v) and v >= 0 for v in (r.mae, r.rmse, r.mise, r.sup_error))
