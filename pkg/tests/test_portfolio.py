import numpy as np
import pytest

from ganfolio.errors import ValidationError
from ganfolio.portfolio import (MomentEstimate, estimate_moments, markowitz_weights,
                                max_sharpe_weights, min_variance_weights,
                                portfolio_return_risk, project_to_simplex, sharpe_ratio)

from oracles import grid_max_sharpe, oracle_sharpe, random_psd_instance


def moments(mu, cov, t=10):
    return MomentEstimate(np.asarray(mu, float), np.asarray(cov, float), t)


class TestReturnRisk:
    def test_selector_weight(self):
        ret, var = portfolio_return_risk(np.array([1.0, 0.0]),
                                         moments([0.1, 0.2], np.diag([0.04, 0.09])))
        assert ret == 0.1 and var == 0.04

    def test_linearity_zero_cov(self):
        ret, var = portfolio_return_risk(np.array([0.5, 0.5]),
                                         moments([0.1, 0.2], np.zeros((2, 2))))
        assert ret == pytest.approx(0.15) and var == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValidationError):
            portfolio_return_risk(np.ones(3) / 3, moments([0.1, 0.2], np.eye(2)))


class TestSharpeRatio:
    def test_single_asset(self):
        m = moments([0.1, 0.0], np.diag([0.04, 0.04]))
        assert sharpe_ratio(np.array([1.0, 0.0]), m) == pytest.approx(0.5)

    def test_zero_numerator(self):
        m = moments([0.1, 0.1], np.diag([0.04, 0.04]))
        v = np.array([0.5, 0.5])
        ret, _ = portfolio_return_risk(v, m)
        assert sharpe_ratio(v, m, r_f=ret) == 0.0

    def test_hand_value_cross_checked(self):
        m = moments([0.1, 0.2], np.diag([0.04, 0.04]))
        v = np.array([1 / 3, 2 / 3])
        expected = 0.5 / (0.2 * np.sqrt(5))
        assert sharpe_ratio(v, m) == pytest.approx(expected, rel=1e-12)
        assert sharpe_ratio(v, m) == pytest.approx(oracle_sharpe(v, m.mean_returns, m.covariance))
        assert expected == pytest.approx(1.1180, abs=5e-5)


class TestEstimateMoments:
    def test_perfectly_correlated_rows(self):
        base = np.array([0.01, -0.02, 0.03, 0.01, -0.01])
        returns = np.stack([base, 2.0 * base])
        est = estimate_moments(returns, ridge=0.0)
        v0, v1 = est.covariance[0, 0], est.covariance[1, 1]
        assert est.covariance[0, 1] == pytest.approx(np.sqrt(v0 * v1), rel=1e-12)

    def test_constant_returns_loading_only(self):
        est = estimate_moments(np.full((2, 6), 0.01))
        assert np.allclose(est.covariance, 0.0)

    def test_near_rank_deficient_stays_psd(self):
        rng = np.random.default_rng(0)
        returns = rng.standard_normal((10, 20)) * 0.01
        est = estimate_moments(returns)
        eigenvalues = np.linalg.eigvalsh(est.covariance)
        assert eigenvalues.min() >= -1e-12
        assert np.array_equal(est.covariance, est.covariance.T)

    def test_too_few_observations(self):
        with pytest.raises(ValidationError):
            estimate_moments(np.ones((2, 1)))


class TestProjectToSimplex:
    def test_idempotent_on_simplex(self):
        v = np.array([0.2, 0.3, 0.5])
        assert np.allclose(project_to_simplex(v), v)

    def test_random_projection_properties(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            v = rng.standard_normal(5) * 3
            p = project_to_simplex(v)
            assert p.min() >= 0 and p.sum() == pytest.approx(1.0, abs=1e-12)
            # projection is the closest simplex point: compare against random candidates
            for _ in range(10):
                q = rng.dirichlet(np.ones(5))
                assert np.linalg.norm(v - p) <= np.linalg.norm(v - q) + 1e-12


class TestMaxSharpe:
    def test_two_asset_tangency(self):
        m = moments([0.1, 0.2], np.diag([0.04, 0.04]))
        v = max_sharpe_weights(m)
        assert np.abs(v - [1 / 3, 2 / 3]).max() < 1e-4

    def test_identical_assets_tie_break_uniform(self):
        m = moments([0.1, 0.1, 0.1], np.full((3, 3), 0.04))
        assert np.allclose(max_sharpe_weights(m), 1 / 3, atol=1e-9)

    def test_dominant_asset(self):
        m = moments([0.2, -0.01], np.diag([0.01, 0.09]))
        v = max_sharpe_weights(m)
        grid_sr, _ = grid_max_sharpe(m.mean_returns, m.covariance, step=0.001)
        assert sharpe_ratio(v, m) >= grid_sr - 1e-3
        assert v[0]        > 0.999

    def test_simplex_invariants(self):
        rng = np.random.default_rng(2)
        for _ in range(25):
            mu, cov = random_psd_instance(rng, 4)
            v = max_sharpe_weights(moments(mu, cov))
            assert v.sum() == pytest.approx(1.0, abs=1e-10)
            assert v.min() >= 0.0 and v.max() <= 1.0

    def test_matches_grid_oracle_small_n(self):
        rng = np.random.default_rng(3)
        for n, cases in ((2, 12), (3, 8)):
            for _ in range(cases):
                mu, cov = random_psd_instance(rng, n)
                m = moments(mu, cov)
                v = max_sharpe_weights(m)
                grid_sr, _ = grid_max_sharpe(mu, cov, step=0.001)
                assert sharpe_ratio(v, m) >= grid_sr - 1e-3

    def test_argmax_invariant_to_covariance_scaling(self):
        rng = np.random.default_rng(4)
        mu, cov = random_psd_instance(rng, 3)
        v1 = max_sharpe_weights(moments(mu, cov))
        v2 = max_sharpe_weights(moments(mu, 37.0 * cov))
        assert np.abs(v1 - v2).max() < 1e-6
        sr1 = sharpe_ratio(v1, moments(mu, cov))
        sr2 = sharpe_ratio(v2, moments(mu, 37.0 * cov))
        assert sr2 == pytest.approx(sr1 / np.sqrt(37.0), rel=1e-6)

    def test_all_below_risk_free_falls_back_to_min_variance(self):
        m = moments([-0.1, -0.2], np.diag([0.04, 0.01]))
        v = max_sharpe_weights(m, r_f=0.0)
        assert np.allclose(v, min_variance_weights(m), atol=1e-9)
        # analytic min variance of diag(a, b) is (b, a)/(a+b)
        assert np.abs(v - [0.2, 0.8]).max() < 1e-6

    def test_non_finite_moments_rejected(self):
        m = moments([0.1, 0.2], np.diag([0.04, 0.04]))
        bad = MomentEstimate.__new__(MomentEstimate)
        object.__setattr__(bad, "mean_returns", np.array([np.inf, 0.0]))
        object.__setattr__(bad, "covariance", m.covariance)
        object.__setattr__(bad, "sample_count", 5)
        with pytest.raises(ValidationError):
            max_sharpe_weights(bad)

    def test_deterministic(self):
        rng = np.random.default_rng(5)
        mu, cov = random_psd_instance(rng, 4)
        a = max_sharpe_weights(moments(mu, cov))
        b = max_sharpe_weights(moments(mu, cov))
        assert np.array_equal(a, b)


class TestMarkowitz:
    def test_trending_asset_takes_full_weight(self):
        days = 30
        trend = 100.0 * (1.02 ** np.arange(days))
        flat = np.full(days, 50.0)
        v = markowitz_weights(np.stack([trend, flat, flat * 2.0]))
        grid_sr, _ = grid_max_sharpe(*_moments_of(np.stack([trend, flat, flat * 2.0])), step=0.001)
        assert v[0] > 0.999
        m = estimate_moments(__import__("ganfolio.marketdata", fromlist=["simple_returns"])
                             .simple_returns(np.stack([trend, flat, flat * 2.0])))
        assert sharpe_ratio(v, m) >= grid_sr - 1e-3

    def test_identical_assets_uniform(self):
        prices = np.tile(100.0 + np.cumsum(np.ones(20)), (3, 1))
        assert np.allclose(markowitz_weights(prices), 1 / 3, atol=1e-9)

    def test_too_short_history(self):
        with pytest.raises(ValidationError):
            markowitz_weights(np.ones((2, 2)))


def _moments_of(prices):
    from ganfolio.marketdata import simple_returns

    est = estimate_moments(simple_returns(prices))
    return est.mean_returns, est.covariance
