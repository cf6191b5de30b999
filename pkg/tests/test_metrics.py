"""Tests for scaled expected length, coverage probability and their scans"""

import math

import numpy as np
import pytest

from src.analysis.metrics import (ThetaGrid, b_func, coverage, coverage_breakpoints, coverage_curve,
                                  cp_inner, max_sel, scaled_mse, scan_grid, sel, sel_at_zero,
                                  sel_curve, sel_weight_theta0)
from src.core.distributions import ProblemConfig, normal_cdf, w_logpdf, w_lower_bound, w_upper_bound
from src.core.quadrature import QuadratureSettings, integrate
from src.core.scad import scad_threshold
from src.core.spline import constant_spline, s_eval
from src.utils.errors import DomainError
from tests.conftest import random_splines

IDENTITY_TOL = 1e-8
CROSS_CHECK_TOL = 1e-7
LIMIT_TOL = 1e-5
EVEN_TOL = 1e-8


class TestThetaGrid:
    def test_uniform_includes_endpoint(self):
        grid = ThetaGrid.uniform(1.03, 0.1)
        assert grid.points[0] == 0.0
        assert grid.theta_max == pytest.approx(1.03)
        assert np.all(np.diff(grid.points) > 0.0)

    def test_scan_grid_extent(self, cfg200):
        grid = scan_grid(cfg200)
        assert grid.theta_max == pytest.approx(cfg200.k + cfg200.t_m + 8.0)
        assert grid.points[1] == pytest.approx(0.05)

    @pytest.mark.parametrize("points", [[0.0, 0.5, 0.5], [0.1, 0.2], [0.0, -1.0], []])
    def test_rejects_invalid(self, points):
        with pytest.raises(DomainError):
            ThetaGrid(points=np.asarray(points, dtype=float), theta_max=1.0)

    def test_union_keeps_order(self):
        grid = ThetaGrid.from_points([0.0, 1.0, 2.0]).union([1.5, 0.25, 1.0])
        np.testing.assert_array_equal(grid.points, [0.0, 0.25, 1.0, 1.5, 2.0])


class TestScaledExpectedLength:
    @pytest.mark.parametrize("theta", [0.0, 0.5, 1.0, 5.0])
    def test_usual_width_gives_one(self, theta, cfg200, flat200, settings):
        assert sel(theta, flat200, cfg200, settings) == pytest.approx(1.0, abs=IDENTITY_TOL)

    def test_closed_form_at_zero_for_usual_width(self, cfg200, flat200, settings):
        assert sel_at_zero(flat200, cfg200, settings) == pytest.approx(1.0, abs=IDENTITY_TOL)

    def test_weight_matches_inner_integral(self, settings):
        m, x = 3, 0.7
        lo, hi = w_lower_bound(m, 1e-13), w_upper_bound(m, 1e-13)
        inner = integrate(lambda w: np.exp(-0.5 * (w * x) ** 2 + 2 * np.log(w) + w_logpdf(w, m))
                          / math.sqrt(2 * math.pi), lo, hi, settings).value
        assert float(sel_weight_theta0(x, m)) == pytest.approx(inner, abs=1e-9)

    @pytest.mark.parametrize("cfg", [ProblemConfig(m=200, eta=1.0), ProblemConfig(m=3, eta=0.5),
                                     ProblemConfig(m=3, eta=2.0)])
    def test_zero_forms_agree(self, cfg, settings):
        for s in random_splines(cfg, 5, 4, seed=cfg.m):
            assert sel(0.0, s, cfg, settings) == pytest.approx(sel_at_zero(s, cfg, settings),
                                                               abs=CROSS_CHECK_TOL)

    def test_wider_spline_is_longer(self, cfg200, bumpy200, settings):
        assert sel_at_zero(bumpy200, cfg200, settings) > 1.0

    def test_even_in_theta(self, cfg200, bumpy200, settings):
        for theta in (0.4, 2.3):
            assert sel(theta, bumpy200, cfg200, settings) == pytest.approx(
                sel(-theta, bumpy200, cfg200, settings), abs=EVEN_TOL)

    def test_tends_to_one(self, cfg3, bumpy3, settings):
        theta = cfg3.k + cfg3.t_m + 10.0
        assert sel(theta, bumpy3, cfg3, settings) == pytest.approx(1.0, abs=LIMIT_TOL)

    def test_curve_matches_scalar(self, cfg200, bumpy200, settings):
        thetas = np.array([0.0, 0.7, 3.1])
        curve = sel_curve(thetas, bumpy200, cfg200, settings)
        for theta, value in zip(thetas, curve):
            assert value == pytest.approx(sel(theta, bumpy200, cfg200, settings), abs=1e-9)

    def test_max_of_usual_width(self, cfg200, flat200, settings):
        peak, where = max_sel(flat200, cfg200, settings, ThetaGrid.uniform(3.0, 0.5))
        assert peak == pytest.approx(1.0, abs=IDENTITY_TOL)
        assert where == 0.0

    def test_max_refines_grid_value(self, cfg200, bumpy200, fast_settings):
        grid = ThetaGrid.uniform(cfg200.k + cfg200.t_m + 2.0, 0.5)
        peak, where = max_sel(bumpy200, cfg200, fast_settings, grid)
        grid_values = sel_curve(grid.points, bumpy200, cfg200, fast_settings)
        assert peak >= grid_values.max() - 1e-12
        assert sel(where, bumpy200, cfg200, fast_settings) == pytest.approx(peak, abs=2e-7)


class TestUsualIntervalTerm:
    def test_zero_theta(self, cfg200):
        w = np.array([0.8, 1.0, 1.3])
        np.testing.assert_allclose(b_func(w, 0.0, cfg200), 2.0 * normal_cdf(cfg200.t_m * w) - 1.0,
                                   rtol=1e-14)

    def test_vanishes_far_out(self, cfg200):
        assert float(b_func(1.0, 60.0, cfg200)) == 0.0

    def test_even_in_theta(self, cfg3):
        w = np.linspace(0.1, 3.0, 12)
        np.testing.assert_allclose(b_func(w, 1.7, cfg3), b_func(w, -1.7, cfg3), atol=1e-15)

    def test_rejects_nonpositive_w(self, cfg3):
        with pytest.raises(DomainError):
            b_func(np.array([1.0, 0.0]), 0.5, cfg3)


class TestInnerCoverage:
    def test_closed_form_at_zero(self, cfg3, bumpy3, settings):
        x = 0.3
        lo, hi = w_lower_bound(cfg3.m, 1e-14), w_upper_bound(cfg3.m, 1e-14)
        direct = integrate(lambda w: np.exp(-0.5 * (w * x) ** 2 + np.log(w) + w_logpdf(w, cfg3.m))
                           / math.sqrt(2 * math.pi), lo, hi, settings).value
        assert cp_inner(x, 0.0, bumpy3, cfg3, settings) == pytest.approx(direct, abs=1e-9)

    def test_empty_when_interval_below_zero(self, cfg200, flat200, settings):
        x = -3.5
        upper = scad_threshold(x, cfg200.eta, cfg200.a) + s_eval(flat200, abs(x))
        assert upper < 0.0
        assert cp_inner(x, 1.0, flat200, cfg200, settings) == 0.0

    def test_continuous_at_zero_theta(self, cfg200, bumpy200, settings):
        for x in (-1.0, 0.2, 2.5):
            assert cp_inner(x, 1e-7, bumpy200, cfg200, settings) == pytest.approx(
                cp_inner(x, 0.0, bumpy200, cfg200, settings), abs=1e-6)

    def test_mirror_rule(self, cfg200, bumpy200, settings):
        for x in (-2.0, 0.5, 3.0):
            assert cp_inner(x, -0.8, bumpy200, cfg200, settings) == pytest.approx(
                cp_inner(-x, 0.8, bumpy200, cfg200, settings), abs=1e-10)


class TestCoverage:
    def test_breakpoints_symmetric(self, cfg200, bumpy200):
        edges = coverage_breakpoints(bumpy200, cfg200)
        np.testing.assert_allclose(edges, -edges[::-1], atol=1e-12)
        assert edges[0] == -cfg200.k and edges[-1] == cfg200.k

    @pytest.mark.parametrize("theta", [0.3, 1.9, 4.4])
    def test_even_in_theta(self, theta, cfg200, bumpy200, settings):
        plus = coverage(theta, bumpy200, cfg200, settings, fold=False)
        minus = coverage(-theta, bumpy200, cfg200, settings, fold=False)
        assert plus == pytest.approx(minus, abs=EVEN_TOL)

    def test_fold_maps_to_absolute_value(self, cfg3, bumpy3, settings):
        assert coverage(-1.1, bumpy3, cfg3, settings) == coverage(1.1, bumpy3, cfg3, settings)

    @pytest.mark.parametrize("cfg_args", [{"m": 200, "eta": 1.0}, {"m": 3, "eta": 0.5}])
    def test_tends_to_nominal(self, cfg_args, settings):
        cfg = ProblemConfig(**cfg_args)
        s = random_splines(cfg, 4, 1, seed=7)[0]
        theta = cfg.k + cfg.t_m + 10.0
        assert coverage(theta, s, cfg, settings) == pytest.approx(0.95, abs=LIMIT_TOL)

    def test_probability_range(self, cfg3, bumpy3, fast_settings):
        values = coverage_curve(np.linspace(0.0, 6.0, 13), bumpy3, cfg3, fast_settings)
        assert np.all((values >= 0.0) & (values <= 1.0))

    def test_high_at_zero(self, cfg200, settings):
        s = random_splines(cfg200, 6, 1, seed=3)[0]
        assert coverage(0.0, s, cfg200, settings) > 0.95

    def test_curve_matches_scalar(self, cfg200, bumpy200, settings):
        thetas = np.array([0.0, 1.2, 5.0])
        curve = coverage_curve(thetas, bumpy200, cfg200, settings)
        for theta, value in zip(thetas, curve):
            assert value == pytest.approx(coverage(theta, bumpy200, cfg200, settings), abs=1e-9)

    def test_workers_preserve_order(self, cfg3, bumpy3, fast_settings):
        thetas = np.linspace(0.0, 4.0, 40)
        serial = coverage_curve(thetas, bumpy3, cfg3, fast_settings)
        pooled = coverage_curve(thetas, bumpy3, cfg3, fast_settings, workers=2)
        np.testing.assert_allclose(pooled, serial, rtol=0.0, atol=1e-9)


class TestScaledMse:
    def test_below_one_at_zero(self, cfg200, settings):
        assert scaled_mse(0.0, cfg200, settings) < 1.0

    def test_tends_to_one(self, cfg200, settings):
        assert scaled_mse(cfg200.k + 12.0, cfg200, settings) == pytest.approx(1.0, abs=1e-6)

    def test_even(self, cfg3, settings):
        assert scaled_mse(1.3, cfg3, settings) == pytest.approx(scaled_mse(-1.3, cfg3, settings), abs=1e-9)

    def test_soft_threshold_bias_region(self, settings):
        cfg = ProblemConfig(m=10, eta=1.0)
        assert scaled_mse(1.5, cfg, settings) > 1.0


class TestToleranceStability:
    HALVED = QuadratureSettings(abs_tol=5e-10)

    @pytest.mark.parametrize("which", ["200", "3"])
    def test_halving_abs_tol(self, which, request, settings):
        cfg = request.getfixturevalue(f"cfg{which}")
        s = request.getfixturevalue(f"bumpy{which}")
        for theta in (0.0, 0.7, 2.1, 5.0):
            assert coverage(theta, s, cfg, self.HALVED) == pytest.approx(coverage(theta, s, cfg, settings),
                                                                         abs=1e-6)
            assert sel(theta, s, cfg, self.HALVED) == pytest.approx(sel(theta, s, cfg, settings), abs=1e-6)
        assert sel_at_zero(s, cfg, self.HALVED) == pytest.approx(sel_at_zero(s, cfg, settings), abs=1e-6)


class TestSmallEta:
    @pytest.mark.parametrize("theta", [0.0, 1.0, 2.0, 4.0])
    def test_reverts_to_usual_interval(self, theta, settings):
        cfg = ProblemConfig(m=200, eta=1e-3)
        s = constant_spline(cfg, 4)
        np.testing.assert_allclose(s(np.linspace(0.0, cfg.k, 7)), cfg.t_m, atol=1e-12)
        assert coverage(theta, s, cfg, settings) == pytest.approx(0.95, abs=1e-3)
        assert sel(theta, s, cfg, settings) == pytest.approx(1.0, abs=IDENTITY_TOL)


@pytest.mark.slow
@pytest.mark.parametrize("m", [3, 200])
@pytest.mark.parametrize("eta", [0.5, 1.0, 2.0])
def test_zero_forms_agree_on_random_splines(m, eta, settings):
    cfg = ProblemConfig(m=m, eta=eta)
    for s in random_splines(cfg, 6, 20, seed=int(100 * eta) + m):
        assert sel(0.0, s, cfg, settings) == pytest.approx(sel_at_zero(s, cfg, settings), abs=CROSS_CHECK_TOL)
