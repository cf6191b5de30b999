"""Shared fixtures: problem instances, quadrature settings and half-width functions"""

import os

os.environ.setdefault("LOG_TO_FILE", "0")
os.environ.setdefault("LOG_LEVEL", "WARNING")

import numpy as np
import pytest

from src.core.distributions import ProblemConfig
from src.core.quadrature import QuadratureSettings
from src.core.spline import constant_spline, spline_fit


@pytest.fixture(scope="session")
def cfg200():
    return ProblemConfig(m=200, eta=1.0)


@pytest.fixture(scope="session")
def cfg3():
    return ProblemConfig(m=3, eta=0.5)


@pytest.fixture(scope="session")
def settings():
    return QuadratureSettings()


@pytest.fixture(scope="session")
def fast_settings():
    return QuadratureSettings(abs_tol=1e-7, rel_tol=1e-7)


@pytest.fixture(scope="session")
def flat200(cfg200):
    """s = t(m) everywhere"""
    return constant_spline(cfg200, 6)


@pytest.fixture(scope="session")
def bumpy200(cfg200):
    """Wider than t(m) near the origin, close to it at k"""
    t = cfg200.t_m
    return spline_fit([t + 0.6, t + 0.5, t + 0.3, t + 0.15, t + 0.05], cfg200, 6)


@pytest.fixture(scope="session")
def bumpy3(cfg3):
    t = cfg3.t_m
    return spline_fit([t + 0.4, t + 0.2, t - 0.1], cfg3, 4)


def random_splines(cfg, q, n, seed):
    """n splines with free values t(m) + U(-0.3, 1.0)"""
    rng = np.random.default_rng(seed)
    return [spline_fit(cfg.t_m + rng.uniform(-0.3, 1.0, size=q - 1), cfg, q) for _ in range(n)]
