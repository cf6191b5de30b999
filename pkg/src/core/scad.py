"""
SCAD thresholding and the interval J(s) centred on the SCAD estimator
"""

import numpy as np

from ..utils.errors import DomainError
from .distributions import ProblemConfig
from .spline import SplineHalfWidth, s_eval


def scad_threshold(x, eta: float, a: float):
    """
    Standardized SCAD threshold function h

    soft-threshold sign(x)(|x| - eta)_+        for |x| <= 2 eta
    linear blend ((a-1)x - sign(x) a eta)/(a-2) for 2 eta < |x| < a eta
    identity x                                  for |x| >= a eta

    Args:
        x: scalar or array
        eta: threshold, > 0
        a: shape constant, > 2

    Returns:
        h(x), same shape as x
    """
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    sign = np.sign(x)
    soft = sign * np.maximum(ax - eta, 0.0)
    blend = ((a - 1.0) * x - sign * a * eta) / (a - 2.0)
    return np.where(ax <= 2.0 * eta, soft, np.where(ax < a * eta, blend, x))


def scad_estimate(beta_hat, sigma_hat, cfg: ProblemConfig):
    """
    Data-scale SCAD estimator with lambda = sigma_hat * eta

    Evaluated directly on the data scale, so the identity branch returns beta_hat
    unchanged; equals sigma_hat * h(beta_hat / sigma_hat) up to rounding.
    """
    beta_hat = np.asarray(beta_hat, dtype=float)
    sigma_hat = np.asarray(sigma_hat, dtype=float)
    if np.any(~(sigma_hat > 0.0)):
        raise DomainError("sigma_hat must be positive")

    lam = sigma_hat * cfg.eta
    a = cfg.a
    ab = np.abs(beta_hat)
    sign = np.sign(beta_hat)
    soft = sign * np.maximum(ab - lam, 0.0)
    blend = ((a - 1.0) * beta_hat - sign * a * lam) / (a - 2.0)
    return np.where(ab <= 2.0 * lam, soft, np.where(ab < a * lam, blend, beta_hat))


def interval_endpoints(beta_hat, sigma_hat, s: SplineHalfWidth, cfg: ProblemConfig):
    """
    Endpoints of J(s) = [beta_tilde - sigma_hat s(|beta_hat|/sigma_hat), beta_tilde + ...]

    Returns:
        (lower, upper), scalars or arrays matching the broadcast inputs
    """
    centre = scad_estimate(beta_hat, sigma_hat, cfg)
    sigma_hat = np.asarray(sigma_hat, dtype=float)
    half_width = sigma_hat * s_eval(s, np.abs(np.asarray(beta_hat, dtype=float)) / sigma_hat)
    return centre - half_width, centre + half_width
