"""Tests for run configuration loading"""

from pathlib import Path

import pytest
from pydantic import ValidationError

from src.utils.config import RunConfig, load_run_config, read_config_file
from src.utils.errors import ConfigValidationError


class TestRunConfig:
    def test_defaults(self):
        config = RunConfig()
        assert (config.m, config.alpha, config.eta, config.a, config.q) == (200, 0.05, 1.0, 3.7, 6)
        assert config.theta_max is None
        assert config.workers == 1 and config.parallel_cells is False

    def test_frozen(self):
        with pytest.raises(ValidationError):
            RunConfig().m = 3

    def test_derived_objects(self):
        config = RunConfig(m=3, eta=0.5, abs_tol=1e-8)
        cfg = config.problem()
        assert cfg.m == 3 and cfg.k == pytest.approx(1.85)
        assert config.quadrature().abs_tol == 1e-8
        assert config.scan().theta_max == pytest.approx(cfg.k + cfg.t_m + 8.0)
        problem = config.optimization_problem()
        assert problem.q == 6 and problem.multistart == 6

    def test_explicit_theta_max(self):
        assert RunConfig(theta_max=3.0, theta_step=0.5).scan().points.tolist() == [0.0, 0.5, 1.0, 1.5, 2.0,
                                                                                  2.5, 3.0]

    def test_tag(self):
        assert RunConfig(m=3, eta=0.5, q=4).tag() == "m3_eta0.5_q4"
        assert RunConfig().tag() == "m200_eta1_q6"


class TestLoading:
    def test_file_values(self, tmp_path):
        path = tmp_path / "run.env"
        path.write_text("M=3\nETA=2\n# comment\nq=5\nparallel_cells=true\n", encoding="utf-8")
        config = load_run_config(path)
        assert (config.m, config.eta, config.q, config.parallel_cells) == (3, 2.0, 5, True)

    def test_overrides_take_precedence(self, tmp_path):
        path = tmp_path / "run.env"
        path.write_text("m=3\neta=2\n", encoding="utf-8")
        config = load_run_config(path, {"eta": 0.5, "q": None})
        assert config.m == 3 and config.eta == 0.5 and config.q == 6

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "run.env"
        path.write_text("m=3\nknots=5\n", encoding="utf-8")
        with pytest.raises(ConfigValidationError) as info:
            load_run_config(path)
        assert info.value.field == "knots"

    def test_invalid_value_names_field(self):
        with pytest.raises(ConfigValidationError) as info:
            load_run_config(None, {"alpha": 1.5})
        assert info.value.field == "alpha"

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigValidationError) as info:
            load_run_config(tmp_path / "absent.env")
        assert info.value.field == "config"

    def test_empty_values_dropped(self, tmp_path):
        path = tmp_path / "run.env"
        path.write_text("theta_max=\nseed=7\n", encoding="utf-8")
        assert read_config_file(path) == {"seed": "7"}

    def test_shipped_defaults_file(self):
        path = Path(__file__).resolve().parents[1] / "config" / "default.env"
        assert load_run_config(path) == RunConfig()
