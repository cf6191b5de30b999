"""Tests for the normal, Student t and W = Sigma_hat / sigma distributions"""

import math

import numpy as np
import pytest
from pydantic import ValidationError
from scipy import stats

from src.core.distributions import (ProblemConfig, expected_w, normal_cdf, normal_pdf,
                                    t_central_probability, t_quantile, w_lower_bound, w_pdf,
                                    w_upper_bound)
from src.core.quadrature import QuadratureSettings, integrate
from src.utils.errors import DomainError

QUANTILE_TOL = 1e-9
DENSITY_RTOL = 1e-9


class TestNormal:
    def test_pdf_at_zero(self):
        assert normal_pdf(0.0) == pytest.approx(1.0 / math.sqrt(2.0 * math.pi), rel=1e-15)

    def test_cdf_matches_scipy(self):
        x = np.linspace(-8.0, 8.0, 33)
        np.testing.assert_allclose(normal_cdf(x), stats.norm.cdf(x), rtol=1e-12, atol=1e-300)

    def test_cdf_symmetry(self):
        x = np.array([0.3, 1.7, 4.2])
        np.testing.assert_allclose(normal_cdf(x) + normal_cdf(-x), 1.0, atol=1e-15)


class TestTQuantile:
    @pytest.mark.parametrize("m", [1, 2, 3, 5, 10, 30, 200])
    def test_matches_scipy(self, m):
        assert t_quantile(m, 0.05) == pytest.approx(stats.t.ppf(0.975, m), abs=QUANTILE_TOL)

    def test_large_m_value(self):
        assert t_quantile(200, 0.05) == pytest.approx(1.971896, abs=1e-6)

    def test_cauchy_quartile(self):
        assert t_quantile(1, 0.5) == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize("m,alpha", [(3, 0.05), (200, 0.05), (7, 0.2), (1, 0.01)])
    def test_round_trip(self, m, alpha):
        assert float(t_central_probability(t_quantile(m, alpha), m)) == pytest.approx(1.0 - alpha, abs=1e-10)

    def test_rejects_bad_arguments(self):
        with pytest.raises(DomainError):
            t_quantile(0, 0.05)
        with pytest.raises(DomainError):
            t_quantile(5, 1.0)


class TestW:
    @pytest.mark.parametrize("m", [1, 3, 30, 200])
    def test_density_matches_scaled_chi(self, m):
        w = np.linspace(0.2, 2.5, 24)
        expected = stats.chi.pdf(w * math.sqrt(m), m) * math.sqrt(m)
        np.testing.assert_allclose(w_pdf(w, m), expected, rtol=DENSITY_RTOL, atol=1e-300)

    @pytest.mark.parametrize("m", [3, 200])
    def test_density_integrates_to_one(self, m):
        settings = QuadratureSettings(abs_tol=1e-11, rel_tol=1e-11)
        lo, hi = w_lower_bound(m, 1e-13), w_upper_bound(m, 1e-13)
        result = integrate(lambda w: w_pdf(w, m), lo, hi, settings)
        assert result.value == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.parametrize("m", [1, 3, 200])
    def test_expected_w(self, m):
        assert expected_w(m) == pytest.approx(stats.chi.mean(m) / math.sqrt(m), rel=1e-10)

    def test_density_rejects_nonpositive(self):
        with pytest.raises(DomainError):
            w_pdf(np.array([0.5, 0.0]), 3)
        with pytest.raises(DomainError):
            w_pdf(-1.0, 3)

    @pytest.mark.parametrize("m", [3, 200])
    def test_support_bounds(self, m):
        tail = 1e-12
        hi, lo = w_upper_bound(m, tail), w_lower_bound(m, tail)
        assert stats.chi2.sf(m * hi * hi, m) == pytest.approx(tail, rel=1e-6)
        assert stats.chi2.cdf(m * lo * lo, m) == pytest.approx(tail, rel=1e-6)
        assert 0.0 < lo < 1.0 < hi

    def test_support_rejects_large_tail(self):
        with pytest.raises(DomainError):
            w_upper_bound(3, 0.5)


class TestProblemConfig:
    def test_derived_values(self):
        cfg = ProblemConfig(m=200, eta=2.0)
        assert cfg.a == 3.7
        assert cfg.alpha == 0.05
        assert cfg.k == pytest.approx(7.4)
        assert cfg.t_m == t_quantile(200, 0.05)
        assert cfg.nominal_coverage == pytest.approx(0.95)

    def test_frozen(self):
        cfg = ProblemConfig(m=3, eta=1.0)
        with pytest.raises(ValidationError):
            cfg.m = 4

    @pytest.mark.parametrize("kwargs", [{"m": 0, "eta": 1.0}, {"m": 3, "eta": 0.0},
                                        {"m": 3, "eta": 1.0, "a": 2.0},
                                        {"m": 3, "eta": 1.0, "alpha": 1.5}])
    def test_rejects_out_of_range(self, kwargs):
        with pytest.raises(ValidationError):
            ProblemConfig(**kwargs)
