"""
Monte Carlo oracle
Direct simulation of the pivots Theta_hat ~ N(theta, 1) and W = sqrt(chi2_m / m) to
cross-check the quadrature values of coverage and scaled expected length.
"""

import json
import math
from multiprocessing import Pool
from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..core.distributions import ProblemConfig, expected_w
from ..core.scad import interval_endpoints
from ..core.spline import SplineHalfWidth, s_eval
from ..utils.errors import DomainError
from ..utils.logger import get_logger, log_execution_time

logger = get_logger(__name__)

MIN_SAMPLES = 10_000
BLOCK_SIZE = 250_000
SUM_OF_SQUARES_MAX_DF = 10


class McEstimate(BaseModel):
    """Simulated coverage and scaled expected length at one theta, with standard errors"""

    model_config = ConfigDict(frozen=True)

    theta: float
    coverage_est: float = Field(..., ge=0.0, le=1.0)
    coverage_se: float = Field(..., ge=0.0)
    sel_est: float
    sel_se: float = Field(..., ge=0.0)
    n_samples: int
    seed: int

    def z_scores(self, coverage_value: float, sel_value: float) -> Tuple[float, float]:
        """(quadrature - MC) / SE for coverage and sel; 0 when the SE vanishes and values agree"""
        return (_z(coverage_value, self.coverage_est, self.coverage_se),
                _z(sel_value, self.sel_est, self.sel_se))

    def to_json(self) -> str:
        return json.dumps(self.model_dump(), indent=2, sort_keys=True)


def _z(value: float, estimate: float, se: float) -> float:
    diff = value - estimate
    if se > 0.0:
        return diff / se
    return 0.0 if diff == 0.0 else math.copysign(math.inf, diff)


def sample_w(rng: np.random.Generator, m: int, size: int) -> np.ndarray:
    """
    W = sqrt(chi2_m / m); chi2_m as a sum of m squared normals for m <= 10,
    from the gamma sampler otherwise
    """
    if m <= SUM_OF_SQUARES_MAX_DF:
        z = rng.standard_normal((size, m))
        chi2 = np.einsum("ij,ij->i", z, z)
    else:
        chi2 = rng.gamma(0.5 * m, 2.0, size=size)
    return np.sqrt(chi2 / m)


def _simulate_block(theta: float, s: SplineHalfWidth, cfg: ProblemConfig, size: int,
                    seed_seq: np.random.SeedSequence) -> Tuple[int, float, float, float]:
    """(n, covered, sum of scaled lengths, sum of squared scaled lengths) for one block"""
    rng = np.random.default_rng(seed_seq)
    theta_hat = theta + rng.standard_normal(size)
    w = sample_w(rng, cfg.m, size)

    lower, upper = interval_endpoints(theta_hat, w, s, cfg)
    covered = float(np.count_nonzero((lower <= theta) & (theta <= upper)))
    scaled = w * s_eval(s, np.abs(theta_hat) / w) / (cfg.t_m * expected_w(cfg.m))
    return size, covered, float(scaled.sum()), float(np.dot(scaled, scaled))


def _block_sizes(n_samples: int) -> list:
    full, rest = divmod(n_samples, BLOCK_SIZE)
    return [BLOCK_SIZE] * full + ([rest] if rest else [])


@log_execution_time
def simulate(theta: float, s: SplineHalfWidth, cfg: ProblemConfig, n_samples: int, seed: int,
             workers: int = 1) -> McEstimate:
    """
    Estimate coverage and e(theta; s) from n_samples independent (Theta_hat, W) draws

    sigma is fixed at 1. Blocks use independent streams spawned from seed and are
    accumulated in block order, so the estimate depends on (seed, n_samples) only.

    Args:
        theta: beta_i / sigma
        s: half-width function
        cfg: problem instance matching s
        n_samples: number of draws, at least 10^4
        seed: root seed
        workers: process count for the blocks

    Returns:
        McEstimate
    """
    if n_samples < MIN_SAMPLES:
        raise DomainError(f"n_samples must be >= {MIN_SAMPLES}, got {n_samples}")

    sizes = _block_sizes(n_samples)
    streams = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = [(theta, s, cfg, size, stream) for size, stream in zip(sizes, streams)]
    if workers > 1 and len(jobs) > 1:
        with Pool(processes=min(workers, len(jobs))) as pool:
            blocks = pool.starmap(_simulate_block, jobs)
    else:
        blocks = [_simulate_block(*job) for job in jobs]

    n = covered = total = total_sq = 0.0
    for size, hits, block_sum, block_sq in blocks:
        n += size
        covered += hits
        total += block_sum
        total_sq += block_sq

    p = covered / n
    coverage_var = p * (1.0 - p) * n / (n - 1.0)
    mean = total / n
    sel_var = max(total_sq - n * mean * mean, 0.0) / (n - 1.0)
    estimate = McEstimate(theta=theta, coverage_est=p, coverage_se=math.sqrt(coverage_var / n),
                          sel_est=mean, sel_se=math.sqrt(sel_var / n), n_samples=int(n), seed=seed)
    logger.debug(f"MC theta={theta}: coverage {p:.6f} +- {estimate.coverage_se:.2e}, "
                 f"sel {mean:.6f} +- {estimate.sel_se:.2e}")
    return estimate
