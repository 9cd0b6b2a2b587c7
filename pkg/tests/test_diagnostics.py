import numpy as np
import pytest

from narxlm.diagnostics import (
    VerdictThresholds,
    acceptance_verdict,
    confidence_bound,
    error_autocorrelation,
    input_error_crosscorrelation,
    max_divergence,
    regression_r,
)
from narxlm.errors import UndefinedStatisticError, ValidationError


class TestRegressionR:
    def test_perfect(self):
        x = np.linspace(1, 10, 50)
        assert regression_r(x, x) == pytest.approx(1.0)

    def test_perfect_anticorrelation(self):
        x = np.linspace(1, 10, 50)
        assert regression_r(-x, x) == pytest.approx(-1.0)

    def test_affine_invariance(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            o = rng.normal(size=30)
            t = rng.normal(size=30)
            r0 = regression_r(o, t)
            a, b = rng.uniform(0.1, 5), rng.normal()
            assert regression_r(a * o + b, a * t + b) == pytest.approx(r0, abs=1e-12)

    def test_zero_variance(self):
        with pytest.raises(UndefinedStatisticError):
            regression_r(np.ones(10), np.arange(10.0))

    def test_bounded(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            r = regression_r(rng.normal(size=20), rng.normal(size=20))
            assert -1.0 <= r <= 1.0


class TestMaxDivergence:
    def test_zero_on_equal(self):
        x = np.array([20.0, 21.0])
        assert max_divergence(x, x) == 0.0

    def test_hand_example(self):
        assert max_divergence([21.0], [20.0]) == pytest.approx(5.0)

    def test_scale_invariance(self):
        rng = np.random.default_rng(2)
        o = 20 + rng.normal(size=30)
        t = 20 + rng.normal(size=30)
        base = max_divergence(o, t)
        for c in (0.1, 3.0, 1000.0):
            assert max_divergence(c * o, c * t) == pytest.approx(base)

    def test_zero_target_guard(self):
        with pytest.raises(UndefinedStatisticError):
            max_divergence([1.0, 2.0], [1.0, 0.0])


class TestAutocorrelation:
    def test_lag_zero_is_one(self):
        rng = np.random.default_rng(3)
        rho, _ = error_autocorrelation(rng.normal(size=200), 20)
        assert rho[0] == 1.0

    def test_periodic_signal(self):
        e = np.sin(2 * np.pi * np.arange(400) / 4.0)
        rho, bound = error_autocorrelation(e, 8)
        assert abs(rho[4]) > 0.9
        assert abs(rho[4]) > bound

    def test_white_noise_calibration(self):
        inside = total = 0
        for seed in range(50):
            rng = np.random.default_rng(seed)
            rho, bound = error_autocorrelation(rng.normal(size=500), 20)
            inside += int(np.sum(np.abs(rho[1:]) <= bound))
            total += 20
        assert inside / total >= 0.93

    def test_constant_series(self):
        with pytest.raises(UndefinedStatisticError):
            error_autocorrelation(np.ones(100), 5)

    def test_values_bounded(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            rho, _ = error_autocorrelation(rng.normal(size=100), 10)
            assert np.all(np.abs(rho) <= 1.0 + 1e-12)


class TestCrossCorrelation:
    def test_self_correlation_at_lag_zero(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=300)
        lags, rho, _ = input_error_crosscorrelation(x, x, 10)
        assert rho[list(lags).index(0)] == pytest.approx(1.0)

    def test_independent_series_calibration(self):
        inside = total = 0
        for seed in range(30):
            rng = np.random.default_rng(100 + seed)
            x = rng.normal(size=500)
            e = rng.normal(size=500)
            lags, rho, bound = input_error_crosscorrelation(x, e, 10)
            inside += int(np.sum(np.abs(rho) <= bound))
            total += len(lags)
        assert inside / total >= 0.93

    def test_bound_matches_observed_interval(self):
        # back-solved sample count for a band half-width of 0.018
        assert confidence_bound(11900) == pytest.approx(0.018, abs=0.001)

    def test_values_bounded(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            _, rho, _ = input_error_crosscorrelation(
                rng.normal(size=80), rng.normal(size=80), 10)
            assert np.all(np.abs(rho) <= 1.0 + 1e-12)

    def test_zero_variance(self):
        with pytest.raises(UndefinedStatisticError):
            input_error_crosscorrelation(np.ones(50), np.arange(50.0), 5)

    def test_length_mismatch(self):
        with pytest.raises(ValidationError):
            input_error_crosscorrelation(np.ones(50), np.ones(40), 5)


class TestVerdict:
    def test_paper_scale_numbers_accept(self):
        ok, reasons = acceptance_verdict(0.998, 1.122, 0.024288,
                                         VerdictThresholds(mse_max=0.1))
        assert ok and not reasons

    def test_divergence_rule(self):
        ok, reasons = acceptance_verdict(0.999, 10.5, 0.001)
        assert not ok
        assert any("10" in r for r in reasons)

    def test_boundary_inclusive(self):
        ok, _ = acceptance_verdict(0.99, 10.0, 0.0)
        assert ok

    def test_all_violations_listed(self):
        ok, reasons = acceptance_verdict(0.5, 50.0, 9.0,
                                         VerdictThresholds(mse_max=1.0))
        assert not ok and len(reasons) == 3

    def test_monotone(self):
        rng = np.random.default_rng(7)
        th = VerdictThresholds(mse_max=1.0)
        for _ in range(100):
            r = rng.uniform(0.9, 1.0)
            d = rng.uniform(0, 20)
            m = rng.uniform(0, 2)
            ok, _ = acceptance_verdict(r, d, m, th)
            better, _ = acceptance_verdict(min(r + 0.005, 1.0),
                                           max(d - 1, 0.0),
                                           max(m - 0.1, 0.0), th)
            if ok:
                assert better
