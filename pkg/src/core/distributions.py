"""
Distributions of the pivotal quantities
Standard normal pdf/cdf, the Student t quantile t(m) and the law of W = Sigma_hat / sigma
"""

import math
from functools import lru_cache

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr
from scipy import optimize, special, stats

from ..utils.errors import DomainError, SolverError

SQRT_2PI = math.sqrt(2.0 * math.pi)
LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

T_QUANTILE_XTOL = 1e-12
MAX_BRACKET_DOUBLINGS = 200


class ProblemConfig(BaseModel):
    """The scalar problem instance (m, alpha, eta, a) with derived k and t(m)"""

    model_config = ConfigDict(frozen=True)

    m: int = Field(..., ge=1, description="residual degrees of freedom n - p")
    alpha: float = Field(0.05, gt=0.0, lt=1.0, description="1 - alpha is the nominal coverage")
    eta: float = Field(..., gt=0.0, description="tuning constant, lambda = Sigma_hat * eta")
    a: float = Field(3.7, gt=2.0, description="SCAD shape constant")

    _t_m: float = PrivateAttr()

    def model_post_init(self, __context) -> None:
        self._t_m = t_quantile(self.m, self.alpha)

    @property
    def k(self) -> float:
        return self.a * self.eta

    @property
    def t_m(self) -> float:
        return self._t_m

    @property
    def nominal_coverage(self) -> float:
        return 1.0 - self.alpha


def normal_pdf(x):
    """N(0,1) density; works elementwise on arrays"""
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x) / SQRT_2PI


def normal_cdf(x):
    """N(0,1) cumulative distribution function"""
    return special.ndtr(np.asarray(x, dtype=float))


def t_central_probability(t, m: int):
    """
    P(-t <= T <= t) for T ~ t_m, through the regularized incomplete beta function

    Args:
        t: nonnegative half-width (scalar or array)
        m: degrees of freedom

    Returns:
        central probability in [0, 1)
    """
    t = np.abs(np.asarray(t, dtype=float))
    return 1.0 - special.betainc(0.5 * m, 0.5, m / (m + t * t))


@lru_cache(maxsize=256)
def t_quantile(m: int, alpha: float) -> float:
    """
    Solve P(-t(m) <= T <= t(m)) = 1 - alpha for T ~ t_m

    The root is bracketed from [0, 1] by doubling the upper end and then refined with
    Brent's method to an absolute tolerance of 1e-12.
    """
    if m < 1:
        raise DomainError(f"degrees of freedom must be >= 1, got {m}")
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")

    target = 1.0 - alpha

    def excess(t: float) -> float:
        return float(t_central_probability(t, m)) - target

    lo, hi = 0.0, 1.0
    for _ in range(MAX_BRACKET_DOUBLINGS):
        if excess(hi) >= 0.0:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise SolverError("could not bracket the t quantile", bracket=(lo, hi),
                          values=(excess(lo), excess(hi)))

    if excess(hi) == 0.0:
        return hi
    try:
        root, info = optimize.brentq(excess, lo, hi, xtol=T_QUANTILE_XTOL, full_output=True)
    except (RuntimeError, ValueError) as e:
        raise SolverError(f"t quantile solve failed: {e}", bracket=(lo, hi),
                          values=(excess(lo), excess(hi))) from e
    if not info.converged:
        raise SolverError("t quantile solve did not converge", bracket=(lo, hi),
                          values=(excess(lo), excess(hi)))
    return float(root)


@lru_cache(maxsize=256)
def w_log_normaliser(m: int) -> float:
    """log of 2 m^(m/2) / (Gamma(m/2) 2^(m/2))"""
    half_m = 0.5 * m
    return math.log(2.0) + half_m * math.log(m) - special.gammaln(half_m) - half_m * math.log(2.0)


def w_logpdf(w, m: int):
    """log f_W(w) for w > 0 without domain checks (hot path)"""
    w = np.asarray(w, dtype=float)
    return w_log_normaliser(m) + (m - 1) * np.log(w) - 0.5 * m * w * w


def w_pdf(w, m: int):
    """
    Density of W = sqrt(chi2_m / m)

    f_W(w) = 2 m^(m/2) / (Gamma(m/2) 2^(m/2)) * w^(m-1) * exp(-m w^2 / 2), evaluated in
    log space so that m = 200 does not overflow.
    """
    w = np.asarray(w, dtype=float)
    if np.any(~(w > 0.0)):
        raise DomainError("f_W is defined for w > 0 only")
    return np.exp(w_logpdf(w, m))


@lru_cache(maxsize=256)
def expected_w(m: int) -> float:
    """E(W) = sqrt(2/m) Gamma((m+1)/2) / Gamma(m/2), via log-gamma differences"""
    if m < 1:
        raise DomainError(f"degrees of freedom must be >= 1, got {m}")
    return math.exp(0.5 * math.log(2.0 / m) + special.gammaln(0.5 * (m + 1)) - special.gammaln(0.5 * m))


def _check_tail_mass(tail_mass: float) -> None:
    if not 0.0 < tail_mass <= 0.01:
        raise DomainError(f"tail mass must lie in (0, 0.01], got {tail_mass}")


@lru_cache(maxsize=256)
def w_upper_bound(m: int, tail_mass: float) -> float:
    """w_hi with P(W > w_hi) <= tail_mass"""
    _check_tail_mass(tail_mass)
    return math.sqrt(stats.chi2.isf(tail_mass, m) / m)


@lru_cache(maxsize=256)
def w_lower_bound(m: int, tail_mass: float) -> float:
    """w_lo with P(W < w_lo) <= tail_mass"""
    _check_tail_mass(tail_mass)
    return math.sqrt(stats.chi2.ppf(tail_mass, m) / m)
