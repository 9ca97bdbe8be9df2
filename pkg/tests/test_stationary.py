"""Birth-death stationary law, its oracles, and the Gaussian limit check."""

import math

import numpy as np
import pytest
from scipy.special import ndtr

from moranlimits import (
    DomainError,
    ModelParams,
    UnsupportedModelError,
    brute_force_stationary,
    detailed_balance_residual,
    equilibria,
    gaussian_limit_check,
    generator_residual,
    ks_distance_to_gaussian,
    limit_variance,
    stationary_distribution,
    stationary_sampler,
)
from moranlimits.selfcheck import reference_params

REF = reference_params()


class TestStationaryDistribution:
    def test_requires_mutation(self):
        params = ModelParams(N=10, s=1.0, u=0.0, nu0=0.5)
        with pytest.raises(UnsupportedModelError):
            stationary_distribution(params)
        with pytest.raises(UnsupportedModelError):
            brute_force_stationary(params)

    def test_normalisation(self):
        for n in (1, 2, 10, 500):
            params = ModelParams(N=n, s=1.0, u=0.5, nu0=0.5)
            dist = stationary_distribution(params)
            assert dist.probabilities.shape == (n + 1,)
            assert np.all(dist.probabilities > 0.0)
            assert dist.probabilities.sum() == pytest.approx(1.0, abs=1e-14)

    def test_two_state_symmetric_is_uniform(self):
        # N = 2, s = 0, u = 1, nu0 = 1/2: up and down rates match at
        # every k, so all three states carry weight 1/3.
        params = ModelParams(N=2, s=0.0, u=1.0, nu0=0.5)
        dist = stationary_distribution(params)
        assert np.max(np.abs(dist.probabilities - 1.0 / 3.0)) < 1e-15

    def test_matches_null_space_oracle(self):
        for n in (2, 5, 17):
            params = ModelParams(N=n, s=0.9, u=0.35, nu0=0.3)
            product = stationary_distribution(params).probabilities
            oracle = brute_force_stationary(params)
            assert np.max(np.abs(product - oracle)) < 1e-12

    def test_detailed_balance(self):
        params = ModelParams(N=500, s=1.0, u=0.5, nu0=0.5)
        dist = stationary_distribution(params)
        assert detailed_balance_residual(dist) < 1e-9

    def test_generator_residual(self):
        params = ModelParams(N=200, s=1.0, u=0.5, nu0=0.5)
        dist = stationary_distribution(params)
        assert generator_residual(dist) < 1e-9

    def test_mean_concentrates_at_stable_point(self):
        params = ModelParams(N=5000, s=1.0, u=0.5, nu0=0.5)
        dist = stationary_distribution(params)
        assert abs(dist.mean_z() - equilibria(params).x_stable) < 0.02
        assert dist.var_z() > 0.0

    def test_cdf_monotone(self):
        dist = stationary_distribution(REF)
        cdf = dist.cdf()
        assert np.all(np.diff(cdf) >= 0.0)
        assert cdf[-1] == pytest.approx(1.0, abs=1e-14)


class TestKsDistance:
    def test_against_dense_grid_scan(self):
        # Exact sup over jump points versus a dense numeric scan of
        # |F_n - Phi| on the sqrt(N)-scaled axis; the scan can only
        # ever find a smaller value.
        params = ModelParams(N=100, s=1.0, u=0.5, nu0=0.5)
        dist = stationary_distribution(params)
        eq = equilibria(params)
        sigma = math.sqrt(limit_variance(params))
        exact = ks_distance_to_gaussian(dist, eq.x_stable, sigma)
        support = math.sqrt(params.N) * (
            np.arange(params.N + 1) / params.N - eq.x_stable
        )
        ys = np.linspace(support[0] - 1.0, support[-1] + 1.0, 200_001)
        idx = np.searchsorted(support, ys, side="right")
        cum = np.concatenate(([0.0], np.cumsum(dist.probabilities)))
        scanned = np.max(np.abs(cum[idx] - ndtr(ys / sigma)))
        assert scanned <= exact + 1e-12
        assert exact - scanned < 1e-4

    def test_sigma_validation(self):
        dist = stationary_distribution(REF)
        with pytest.raises(DomainError):
            ks_distance_to_gaussian(dist, 0.5, 0.0)
        with pytest.raises(DomainError):
            ks_distance_to_gaussian(dist, 0.5, -1.0)


class TestGaussianLimitCheck:
    def test_report_fields(self):
        params = ModelParams(N=500, s=1.0, u=0.5, nu0=0.5)
        report = gaussian_limit_check(params)
        assert report.N == 500
        assert report.target == pytest.approx(limit_variance(params), rel=1e-13)
        assert report.empirical_var_scaled > 0.0
        assert 0.0 <= report.ks_statistic <= 1.0
        assert report.eps == 0.05
        assert 0.0 <= report.mass_outside <= 1.0
        record = report.to_record()
        assert set(record) == {
            "N",
            "empirical_var_scaled",
            "target",
            "ks_statistic",
            "mean_z",
            "x_stable",
            "eps",
            "mass_outside",
        }

    def test_variance_and_mass_converge(self):
        params = ModelParams(N=5000, s=1.0, u=0.5, nu0=0.5)
        report = gaussian_limit_check(params)
        assert abs(report.empirical_var_scaled / report.target - 1.0) < 0.05
        assert report.mass_outside < 0.01

    def test_eps_validation(self):
        with pytest.raises(DomainError):
            gaussian_limit_check(REF, eps=0.0)
        with pytest.raises(DomainError):
            gaussian_limit_check(REF, eps=1.0)

    def test_requires_mutation(self):
        params = ModelParams(N=100, s=1.0, u=0.0, nu0=0.5)
        with pytest.raises(UnsupportedModelError):
            gaussian_limit_check(params)


class TestSampler:
    def test_determinism_and_range(self):
        dist = stationary_distribution(REF)
        a = stationary_sampler(dist, 1000, 5)
        b = stationary_sampler(dist, 1000, 5)
        assert np.array_equal(a, b)
        assert a.dtype.kind == "i"
        assert a.min() >= 0
        assert a.max() <= REF.N

    def test_validation(self):
        dist = stationary_distribution(REF)
        with pytest.raises(DomainError):
            stationary_sampler(dist, 0, 5)
        with pytest.raises(DomainError):
            stationary_sampler(dist, -3, 5)

    def test_sample_mean_matches_distribution(self):
        dist = stationary_distribution(REF)
        draws = stationary_sampler(dist, 200_000, 555006)
        target = dist.mean_z() * REF.N
        sd = math.sqrt(dist.var_z()) * REF.N
        se = sd / math.sqrt(draws.size)
        assert abs(float(draws.mean()) - target) < 4.0 * se
