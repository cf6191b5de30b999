"""
Performance functionals of J(s)
Scaled expected length e(theta; s) and coverage probability CP(theta; s), both as
nested one-dimensional integrals over x in [-k, k] and w = Sigma_hat / sigma.

All curves are evaluated in blocks of theta values: one adaptive pass integrates every
(theta, x-piece) pair and, inside it, every (theta, x) inner integral over w.
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from multiprocessing import Pool
from typing import Callable, Sequence, Tuple

import numpy as np
from scipy import optimize, special

from ..core.distributions import (LOG_SQRT_2PI, ProblemConfig, expected_w, normal_cdf,
                                  normal_pdf, w_log_normaliser, w_logpdf, w_lower_bound,
                                  w_upper_bound)
from ..core.quadrature import QuadratureSettings, integrate_batch, integrate_split, split_edges
from ..core.scad import scad_threshold
from ..core.spline import SplineHalfWidth, s_eval
from ..utils.errors import DomainError
from ..utils.logger import get_logger

logger = get_logger(__name__)

THETA_CHUNK = 16
ZERO_THETA = 1e-8
INNER_PANELS = 4
CROSSING_SAMPLES = 33
MSE_HALF_RANGE = 12.0
REFINE_XTOL = 1e-6
MAX_INFLATIONS = 60


@dataclass(frozen=True)
class ThetaGrid:
    """Sorted nonnegative evaluation grid for theta = beta_i / sigma, always holding 0"""

    points: np.ndarray
    theta_max: float

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size == 0:
            raise DomainError("theta grid must be a non-empty vector")
        if np.any(pts < 0.0):
            raise DomainError("theta grid points must be nonnegative")
        if np.any(np.diff(pts) <= 0.0):
            raise DomainError("theta grid points must be strictly increasing")
        if pts[0] != 0.0:
            raise DomainError("theta grid must contain 0")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def uniform(cls, theta_max: float, step: float) -> "ThetaGrid":
        if step <= 0.0 or theta_max <= 0.0:
            raise DomainError("theta grid needs positive step and horizon")
        n = int(math.floor(theta_max / step + 1e-9))
        pts = step * np.arange(n + 1)
        if theta_max - pts[-1] > 1e-12:
            pts = np.append(pts, theta_max)
        return cls(points=pts, theta_max=float(pts[-1]))

    @classmethod
    def from_points(cls, points: Sequence[float]) -> "ThetaGrid":
        pts = np.unique(np.asarray(list(points), dtype=float))
        return cls(points=pts, theta_max=float(pts[-1]))

    def union(self, extra: Sequence[float]) -> "ThetaGrid":
        return ThetaGrid.from_points(np.concatenate([self.points, np.asarray(list(extra), dtype=float)]))

    def __len__(self) -> int:
        return self.points.size


def scan_grid(cfg: ProblemConfig, step: float = 0.05, horizon: float = 8.0) -> ThetaGrid:
    """theta from 0 to k + t(m) + horizon in steps of step"""
    return ThetaGrid.uniform(cfg.k + cfg.t_m + horizon, step)


@lru_cache(maxsize=128)
def _w_support(m: int, tail_mass: float, abs_tol: float) -> Tuple[float, float]:
    """Effective support [w_lo, w_hi] of f_W, w_hi inflated until the w^2 f_W envelope is below abs_tol"""
    w_lo = w_lower_bound(m, tail_mass)
    w_hi = w_upper_bound(m, tail_mass)
    for _ in range(MAX_INFLATIONS):
        envelope = max(w_hi, w_hi * w_hi) * math.exp(float(w_logpdf(w_hi, m))) / math.sqrt(2.0 * math.pi)
        if envelope < abs_tol:
            break
        w_hi *= 1.1
    return w_lo, w_hi


def _support(cfg: ProblemConfig, settings: QuadratureSettings) -> Tuple[float, float]:
    return _w_support(cfg.m, settings.w_tail_mass, settings.abs_tol)


def _inner_settings(settings: QuadratureSettings, cfg: ProblemConfig) -> QuadratureSettings:
    # inner errors are integrated over an x-range of length 2k
    return settings.model_copy(update={"abs_tol": settings.abs_tol / (20.0 * cfg.k),
                                       "rel_tol": settings.rel_tol / 10.0})


def _chunks(thetas: np.ndarray) -> list:
    return [thetas[i:i + THETA_CHUNK] for i in range(0, thetas.size, THETA_CHUNK)]


def _evaluate_in_blocks(block: Callable, thetas: np.ndarray, args: tuple, workers: int) -> np.ndarray:
    """Evaluate block(theta_chunk, *args) over theta chunks, in a process pool when workers > 1"""
    chunks = _chunks(thetas)
    if workers > 1 and len(chunks) > 1:
        with Pool(processes=min(workers, len(chunks))) as pool:
            parts = pool.starmap(block, [(chunk,) + args for chunk in chunks])
    else:
        parts = [block(chunk, *args) for chunk in chunks]
    return np.concatenate(parts) if parts else np.zeros(0)


# ---------------------------------------------------------------------------
# scaled expected length
# ---------------------------------------------------------------------------

def sel_weight_theta0(x, m: int):
    """
    (2 pi)^(-1/2) (m / (x^2 + m))^(m/2 + 1), which equals the integral of
    phi(w x) w^2 f_W(w) over w > 0
    """
    x = np.asarray(x, dtype=float)
    return np.exp((0.5 * m + 1.0) * (math.log(m) - np.log(x * x + m)) - LOG_SQRT_2PI)


def _sel_block(thetas: np.ndarray, s: SplineHalfWidth, cfg: ProblemConfig,
               settings: QuadratureSettings) -> np.ndarray:
    k, t_m, m = cfg.k, cfg.t_m, cfg.m
    w_lo, w_hi = _support(cfg, settings)
    inner_settings = _inner_settings(settings, cfg)
    interior = s.knots[1:-1]
    edges = split_edges(-k, k, np.concatenate([[0.0], interior, -interior]))
    n_theta, n_pieces = thetas.size, edges.size - 1
    theta_of_piece = np.repeat(thetas, n_pieces)

    def outer(x, piece):
        excess = s_eval(s, np.abs(x)) - t_m
        out = np.zeros_like(x)
        active = excess != 0.0
        if not active.any():
            return out
        xa = x[active]
        th = theta_of_piece[piece[active]]

        def inner(w, j):
            z = w * xa[j] - th[j]
            return np.exp(-0.5 * z * z - LOG_SQRT_2PI + 2.0 * np.log(w) + w_logpdf(w, m))

        weight, _ = integrate_batch(inner, np.full(xa.size, w_lo), np.full(xa.size, w_hi),
                                    inner_settings, initial_panels=INNER_PANELS)
        out[active] = excess[active] * weight
        return out

    outer_settings = settings.model_copy(update={"abs_tol": settings.abs_tol / n_pieces})
    values, _ = integrate_batch(outer, np.tile(edges[:-1], n_theta), np.tile(edges[1:], n_theta),
                                outer_settings)
    integral = values.reshape(n_theta, n_pieces).sum(axis=1)
    return 1.0 + integral / (t_m * expected_w(m))


def sel_curve(thetas, s: SplineHalfWidth, cfg: ProblemConfig, settings: QuadratureSettings,
              workers: int = 1) -> np.ndarray:
    """e(theta; s) for every theta in thetas (any sign)"""
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    return _evaluate_in_blocks(_sel_block, thetas, (s, cfg, settings), workers)


def sel(theta: float, s: SplineHalfWidth, cfg: ProblemConfig, settings: QuadratureSettings) -> float:
    """
    Scaled expected length e(theta; s)

    1 + 1/(t(m) E(W)) * integral over [-k, k] of (s(|x|) - t(m)) times the integral of
    phi(w x - theta) w^2 f_W(w) over w > 0
    """
    return float(sel_curve([theta], s, cfg, settings)[0])


def sel_at_zero(s: SplineHalfWidth, cfg: ProblemConfig, settings: QuadratureSettings) -> float:
    """e(0; s) through the single-integral closed-weight form; the optimizer's objective"""
    t_m, m = cfg.t_m, cfg.m

    def integrand(x):
        return (s_eval(s, x) - t_m) * np.exp((0.5 * m + 1.0) * (math.log(m) - np.log(x * x + m)))

    result = integrate_split(integrand, 0.0, cfg.k, s.knots[1:-1], settings)
    return 1.0 + math.sqrt(2.0 / math.pi) / (t_m * expected_w(m)) * result.value


# ---------------------------------------------------------------------------
# coverage probability
# ---------------------------------------------------------------------------

def b_func(w, theta, cfg: ProblemConfig):
    """
    b(w; m, k, theta): N(0,1) mass of [-t(m) w, t(m) w] intersected with [-k w - theta, k w - theta]
    """
    w = np.asarray(w, dtype=float)
    if np.any(~(w > 0.0)):
        raise DomainError("b is defined for w > 0 only")
    return _b_values(w, np.asarray(theta, dtype=float), cfg.k, cfg.t_m)


def _b_values(w: np.ndarray, theta: np.ndarray, k: float, t_m: float) -> np.ndarray:
    upper = np.minimum(t_m * w, k * w - theta)
    lower = np.maximum(-t_m * w, -k * w - theta)
    # upper-tail form keeps precision when the whole interval sits right of 0
    mass = np.where(lower > 0.0, normal_cdf(-lower) - normal_cdf(-upper),
                    normal_cdf(upper) - normal_cdf(lower))
    return np.where(lower >= upper, 0.0, mass)


def _b_breakpoints(theta: float, k: float, t_m: float) -> list:
    points = [theta / (k + t_m), -theta / (k + t_m)]
    if k != t_m:
        points += [theta / (k - t_m), -theta / (k - t_m)]
    return [p for p in points if p > 0.0]


def _b_integral(thetas: np.ndarray, cfg: ProblemConfig, settings: QuadratureSettings) -> np.ndarray:
    """Integral of b(w; m, k, theta) f_W(w) over w > 0 for each theta"""
    k, t_m, m = cfg.k, cfg.t_m, cfg.m
    w_lo, w_hi = _support(cfg, settings)
    lo, hi, owner = [], [], []
    for i, theta in enumerate(thetas):
        edges = split_edges(w_lo, w_hi, _b_breakpoints(float(theta), k, t_m))
        lo.extend(edges[:-1])
        hi.extend(edges[1:])
        owner.extend([i] * (edges.size - 1))
    owner = np.asarray(owner)
    theta_of_piece = thetas[owner]

    def integrand(w, piece):
        return _b_values(w, theta_of_piece[piece], k, t_m) * np.exp(w_logpdf(w, m))

    piece_settings = settings.model_copy(update={"abs_tol": settings.abs_tol / 5.0})
    values, _ = integrate_batch(integrand, np.asarray(lo), np.asarray(hi), piece_settings)
    return np.bincount(owner, weights=values, minlength=thetas.size)


def _theta0_inner(x: np.ndarray, m: int) -> np.ndarray:
    """Integral of phi(w x) w f_W(w) over w > 0, by the closed form"""
    r = x * x + m
    log_value = (special.gammaln(0.5 * (m + 1)) - special.gammaln(0.5 * m) - 0.5 * math.log(math.pi)
                 + 0.5 * m * (math.log(m) - np.log(r)) - 0.5 * np.log(r))
    return np.exp(log_value)


def _w_limits(theta: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    The w-set {w > 0 : lower <= theta / w <= upper} as [w_from, w_to], empty when w_to <= w_from

    theta > 0: empty if upper <= 0; w >= theta/upper; w <= theta/lower when lower > 0
    theta < 0: empty if lower >= 0; w >= theta/lower; w <= theta/upper when upper < 0
    """
    positive = theta > 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        w_from = np.where(positive, theta / upper, theta / lower)
        w_to = np.where(positive,
                        np.where(lower > 0.0, theta / lower, np.inf),
                        np.where(upper < 0.0, theta / upper, np.inf))
    empty = np.where(positive, upper <= 0.0, lower >= 0.0)
    w_from = np.where(empty, np.inf, w_from)
    w_to = np.where(empty, -np.inf, w_to)
    return w_from, w_to


def _coverage_inner(x: np.ndarray, theta: np.ndarray, s: SplineHalfWidth, cfg: ProblemConfig,
                    settings: QuadratureSettings) -> np.ndarray:
    """
    Integral of I(h(x) - s(|x|) <= theta/w <= h(x) + s(|x|)) phi(w x - theta) w f_W(w) over w > 0,
    elementwise over paired arrays x and theta
    """
    x, theta = np.broadcast_arrays(np.atleast_1d(np.asarray(x, dtype=float)),
                                   np.atleast_1d(np.asarray(theta, dtype=float)))
    m = cfg.m
    h = scad_threshold(x, cfg.eta, cfg.a)
    half_width = s_eval(s, np.abs(x))
    lower, upper = h - half_width, h + half_width
    out = np.zeros(x.shape)

    at_zero = np.abs(theta) < ZERO_THETA
    if at_zero.any():
        covered = at_zero & (lower <= 0.0) & (upper >= 0.0)
        out[covered] = _theta0_inner(x[covered], m)

    rest = ~at_zero
    if rest.any():
        w_lo, w_hi = _support(cfg, settings)
        w_from, w_to = _w_limits(theta[rest], lower[rest], upper[rest])
        w_from = np.clip(w_from, w_lo, w_hi)
        w_to = np.clip(w_to, w_lo, w_hi)
        xr, tr = x[rest], theta[rest]

        def inner(w, j):
            z = w * xr[j] - tr[j]
            return np.exp(-0.5 * z * z - LOG_SQRT_2PI + np.log(w) + w_logpdf(w, m))

        values, _ = integrate_batch(inner, w_from, w_to, settings, initial_panels=INNER_PANELS)
        out[rest] = values
    return out


def cp_inner(x: float, theta: float, s: SplineHalfWidth, cfg: ProblemConfig,
             settings: QuadratureSettings) -> float:
    """
    Inner w-integral of the coverage formula at a single x

    theta = 0 (and |theta| < 1e-8) uses the closed form; theta > 0 integrates over
    [theta/(h+s), theta/(h-s)] when h - s > 0, over [theta/(h+s), inf) when h - s <= 0 < h + s,
    and is 0 when h + s <= 0. Negative theta is handled by the mirrored rule.
    """
    return float(_coverage_inner(np.array([x]), np.array([theta]), s, cfg, settings)[0])


def _interval_crossings(s: SplineHalfWidth, cfg: ProblemConfig, base: np.ndarray) -> list:
    """Zeros of h(x) + s(|x|) on [-k, k]; zeros of h - s are their negatives"""

    def g(x):
        return scad_threshold(x, cfg.eta, cfg.a) + s_eval(s, np.abs(x))

    roots = []
    for p0, p1 in zip(base[:-1], base[1:]):
        xs = np.linspace(p0, p1, CROSSING_SAMPLES)
        gs = g(xs)
        roots.extend(xs[1:-1][gs[1:-1] == 0.0])
        for i in np.nonzero(gs[:-1] * gs[1:] < 0.0)[0]:
            roots.append(optimize.brentq(lambda v: float(g(v)), xs[i], xs[i + 1], xtol=1e-14))
    return roots


def coverage_breakpoints(s: SplineHalfWidth, cfg: ProblemConfig) -> np.ndarray:
    """
    Edges of the smooth pieces of the outer x-integrand on [-k, k]: 0, +-eta, +-2 eta,
    +-knots and the points where h(x) +- s(|x|) changes sign
    """
    k, eta = cfg.k, cfg.eta
    interior = s.knots[1:-1]
    base = split_edges(-k, k, np.concatenate([[0.0, eta, -eta, 2 * eta, -2 * eta], interior, -interior]))
    crossings = np.asarray(_interval_crossings(s, cfg, base), dtype=float)
    return split_edges(-k, k, np.concatenate([base[1:-1], crossings, -crossings]))


def _coverage_block(thetas: np.ndarray, s: SplineHalfWidth, cfg: ProblemConfig,
                    settings: QuadratureSettings) -> np.ndarray:
    edges = coverage_breakpoints(s, cfg)
    n_theta, n_pieces = thetas.size, edges.size - 1
    theta_of_piece = np.repeat(thetas, n_pieces)
    inner_settings = _inner_settings(settings, cfg)

    def outer(x, piece):
        return _coverage_inner(x, theta_of_piece[piece], s, cfg, inner_settings)

    outer_settings = settings.model_copy(update={"abs_tol": settings.abs_tol / n_pieces})
    values, _ = integrate_batch(outer, np.tile(edges[:-1], n_theta), np.tile(edges[1:], n_theta),
                                outer_settings)
    indicator_part = values.reshape(n_theta, n_pieces).sum(axis=1)
    usual_part = _b_integral(thetas, cfg, settings)
    return np.clip(indicator_part + cfg.nominal_coverage - usual_part, 0.0, 1.0)


def coverage_curve(thetas, s: SplineHalfWidth, cfg: ProblemConfig, settings: QuadratureSettings,
                   fold: bool = True, workers: int = 1) -> np.ndarray:
    """
    Coverage probability of J(s) at every theta

    With fold=True negative theta is mapped to |theta| (coverage is even in theta);
    fold=False evaluates the formula at the signed theta.
    """
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    if fold:
        thetas = np.abs(thetas)
    return _evaluate_in_blocks(_coverage_block, thetas, (s, cfg, settings), workers)


def coverage(theta: float, s: SplineHalfWidth, cfg: ProblemConfig, settings: QuadratureSettings,
             fold: bool = True) -> float:
    """
    Coverage probability of J(s)

    integral over [-k, k] of the inner indicator integral, plus 1 - alpha, minus the
    integral of b(w; m, k, theta) f_W(w) over w > 0
    """
    return float(coverage_curve([theta], s, cfg, settings, fold=fold)[0])


# ---------------------------------------------------------------------------
# grid scans
# ---------------------------------------------------------------------------

def refine_extremum(values: np.ndarray, points: np.ndarray, fn: Callable[[float], float],
                    maximize: bool) -> Tuple[float, float]:
    """
    Refine the best grid value by bounded Brent/golden-section search on the cells
    around it, to REFINE_XTOL in theta

    Returns:
        (extreme value, location)
    """
    i = int(np.argmax(values) if maximize else np.argmin(values))
    best, where = float(values[i]), float(points[i])
    lo = points[max(i - 1, 0)]
    hi = points[min(i + 1, points.size - 1)]
    if hi <= lo:
        return best, where

    sign = -1.0 if maximize else 1.0
    res = optimize.minimize_scalar(lambda th: sign * fn(th), bounds=(lo, hi), method="bounded",
                                   options={"xatol": REFINE_XTOL})
    refined = sign * float(res.fun)
    if (maximize and refined > best) or (not maximize and refined < best):
        return refined, float(res.x)
    return best, where


def max_sel(s: SplineHalfWidth, cfg: ProblemConfig, settings: QuadratureSettings,
            grid: ThetaGrid, workers: int = 1) -> Tuple[float, float]:
    """(max, argmax) of e(theta; s) over theta >= 0: grid scan, then local refinement"""
    values = sel_curve(grid.points, s, cfg, settings, workers=workers)
    return refine_extremum(values, grid.points, lambda th: sel(th, s, cfg, settings), maximize=True)


# ---------------------------------------------------------------------------
# point estimator benchmark
# ---------------------------------------------------------------------------

def scaled_mse(theta: float, cfg: ProblemConfig, settings: QuadratureSettings) -> float:
    """
    Scaled mean squared error of the SCAD point estimator when sigma is known and
    lambda = sigma eta: E[(h(Theta_hat) - theta)^2] with Theta_hat ~ N(theta, 1)
    """
    eta, a = cfg.eta, cfg.a

    def integrand(x):
        err = scad_threshold(x, eta, a) - theta
        return err * err * normal_pdf(x - theta)

    lo, hi = theta - MSE_HALF_RANGE, theta + MSE_HALF_RANGE
    kinks = [p for p in (-a * eta, -2 * eta, -eta, eta, 2 * eta, a * eta) if lo < p < hi]
    return integrate_split(integrand, lo, hi, kinks, settings).value
