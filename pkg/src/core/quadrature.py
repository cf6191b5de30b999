"""
Adaptive Gauss-Kronrod quadrature
A vectorised 21-point Gauss-Kronrod rule with interval bisection. Many independent
integrals are advanced together so that nested integrals cost a few array passes.
"""

from typing import Callable, NamedTuple, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..utils.errors import DomainError, QuadratureError
from ..utils.logger import get_logger

logger = get_logger(__name__)

# Kronrod abscissae (descending, last is the centre) and weights of the 21-point rule,
# with the weights of the embedded 10-point Gauss rule at the odd-indexed abscissae
_XGK = np.array([
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077600525370805,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
])
_WG = np.array([
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
])

_half_gauss = np.zeros_like(_XGK)
_half_gauss[1::2] = _WG

NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS_WEIGHTS = np.concatenate([_half_gauss[:-1], _half_gauss[::-1]])
N_NODES = NODES.size

_EPS = np.finfo(float).eps
_TINY = np.finfo(float).tiny / (50.0 * _EPS)

BatchIntegrand = Callable[[np.ndarray, np.ndarray], np.ndarray]


class QuadratureSettings(BaseModel):
    """Tolerances and truncation for every integral"""

    model_config = ConfigDict(frozen=True)

    abs_tol: float = Field(1e-9, gt=0.0)
    rel_tol: float = Field(1e-9, gt=0.0)
    max_subdivisions: int = Field(2000, ge=10)
    w_tail_mass: float = Field(1e-12, gt=0.0, le=0.01)


class QuadratureResult(NamedTuple):
    value: float
    err_est: float


def _gauss_kronrod(f: BatchIntegrand, a: np.ndarray, b: np.ndarray,
                   owner: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Apply the 21-point rule to every interval [a_i, b_i] of item owner_i"""
    centre = 0.5 * (a + b)
    half = 0.5 * (b - a)
    nodes = centre[:, None] + half[:, None] * NODES[None, :]
    fx = np.asarray(f(nodes.ravel(), np.repeat(owner, N_NODES)), dtype=float).reshape(nodes.shape)
    if not np.all(np.isfinite(fx)):
        raise QuadratureError("integrand returned non-finite values",
                              value=float("nan"), err_est=float("inf"))

    kronrod_unit = fx @ KRONROD_WEIGHTS
    gauss_unit = fx @ GAUSS_WEIGHTS
    kronrod = half * kronrod_unit
    err = np.abs(half * (kronrod_unit - gauss_unit))

    # QUADPACK error scaling and round-off floor
    resasc = half * (np.abs(fx - 0.5 * kronrod_unit[:, None]) @ KRONROD_WEIGHTS)
    resabs = half * (np.abs(fx) @ KRONROD_WEIGHTS)
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = resasc * np.minimum(1.0, (200.0 * err / resasc) ** 1.5)
    err = np.where((resasc > 0.0) & (err > 0.0), scaled, err)
    err = np.where(resabs > _TINY, np.maximum(50.0 * _EPS * resabs, err), err)
    return kronrod, err


def integrate_batch(f: BatchIntegrand, lo, hi, settings: QuadratureSettings,
                    initial_panels: int = 1) -> Tuple[np.ndarray, np.ndarray]:
    """
    Integrate many functions at once: item i is the integral of f(., i) over [lo_i, hi_i]

    f receives a flat array of abscissae and the matching array of item indices and
    returns the integrand values. Items with hi_i <= lo_i integrate to zero. Each item
    is refined until its summed error estimate is within max(abs_tol, rel_tol |value|).

    Returns:
        (values, err_estimates) arrays of the broadcast shape of lo and hi

    Raises:
        QuadratureError: an item exhausted max_subdivisions before converging
    """
    lo, hi = np.broadcast_arrays(np.atleast_1d(np.asarray(lo, dtype=float)),
                                 np.atleast_1d(np.asarray(hi, dtype=float)))
    shape = lo.shape
    lo, hi = lo.ravel(), hi.ravel()
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise DomainError("integration limits must be finite")
    n_items = lo.size

    items = np.nonzero(hi > lo)[0]
    panels = max(1, int(initial_panels))
    owner = np.repeat(items, panels)
    frac = np.tile(np.arange(panels, dtype=float), items.size)
    span = (hi - lo)[owner] / panels
    a = lo[owner] + frac * span
    b = np.where(frac == panels - 1, hi[owner], a + span)
    if owner.size == 0:
        return np.zeros(shape), np.zeros(shape)

    kronrod, err = _gauss_kronrod(f, a, b, owner)
    length = np.where(hi > lo, hi - lo, 1.0)

    while True:
        total = np.bincount(owner, weights=kronrod, minlength=n_items)
        total_err = np.bincount(owner, weights=err, minlength=n_items)
        tol = np.maximum(settings.abs_tol, settings.rel_tol * np.abs(total))
        unconverged = total_err > tol
        if not unconverged.any():
            break

        share = tol[owner] * (b - a) / length[owner]
        splittable = (b - a) > 4.0 * _EPS * np.maximum(1.0, np.abs(a))
        split = unconverged[owner] & (err > share) & splittable
        stuck = unconverged & (np.bincount(owner[split], minlength=n_items) == 0)
        counts = np.bincount(owner, minlength=n_items) + np.bincount(owner[split], minlength=n_items)
        exhausted = unconverged & (counts > settings.max_subdivisions)
        if stuck.any() or exhausted.any():
            bad = np.nonzero(stuck | exhausted)[0]
            i = int(bad[np.argmax(total_err[bad])])
            raise QuadratureError(
                f"no convergence for {bad.size} of {n_items} integrals, worst on [{lo[i]}, {hi[i]}]",
                value=float(total[i]), err_est=float(total_err[i]))

        keep = ~split
        mid = 0.5 * (a[split] + b[split])
        new_a = np.concatenate([a[split], mid])
        new_b = np.concatenate([mid, b[split]])
        new_owner = np.concatenate([owner[split], owner[split]])
        new_kronrod, new_err = _gauss_kronrod(f, new_a, new_b, new_owner)

        a = np.concatenate([a[keep], new_a])
        b = np.concatenate([b[keep], new_b])
        owner = np.concatenate([owner[keep], new_owner])
        kronrod = np.concatenate([kronrod[keep], new_kronrod])
        err = np.concatenate([err[keep], new_err])

    return total.reshape(shape), total_err.reshape(shape)


def _check_limits(lo: float, hi: float) -> None:
    if not (np.isfinite(lo) and np.isfinite(hi)):
        raise DomainError("integration limits must be finite")
    if not lo < hi:
        raise DomainError(f"need lo < hi, got [{lo}, {hi}]")


def integrate(f: Callable[[np.ndarray], np.ndarray], lo: float, hi: float,
              settings: QuadratureSettings) -> QuadratureResult:
    """
    Adaptive integral of a vectorised f over the finite interval [lo, hi]

    Raises:
        QuadratureError: budget exhausted; carries the partial value and error estimate
    """
    _check_limits(lo, hi)
    values, errs = integrate_batch(lambda x, _: f(x), lo, hi, settings)
    return QuadratureResult(float(values[0]), float(errs[0]))


def split_edges(lo: float, hi: float, points: Sequence[float]) -> np.ndarray:
    """Sorted edges lo < p_1 < ... < hi keeping only points strictly inside (lo, hi)"""
    pts = np.unique(np.asarray(list(points), dtype=float))
    pts = pts[(pts > lo) & (pts < hi)]
    return np.concatenate([[lo], pts, [hi]])


def integrate_split(f: Callable[[np.ndarray], np.ndarray], lo: float, hi: float,
                    breakpoints: Sequence[float], settings: QuadratureSettings) -> QuadratureResult:
    """
    Sum of adaptive integrals over the pieces cut at the breakpoints

    Each piece receives an equal share of abs_tol so the sum honours the same contract.
    """
    _check_limits(lo, hi)
    pts = np.asarray(list(breakpoints), dtype=float)
    if np.any((pts <= lo) | (pts >= hi)):
        raise DomainError(f"breakpoints must lie inside ({lo}, {hi})")
    edges = split_edges(lo, hi, pts)
    n_pieces = edges.size - 1
    piece_settings = settings.model_copy(update={"abs_tol": settings.abs_tol / n_pieces})
    values, errs = integrate_batch(lambda x, _: f(x), edges[:-1], edges[1:], piece_settings)
    return QuadratureResult(float(np.sum(values)), float(np.sum(errs)))
