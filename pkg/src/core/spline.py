"""
Half-width function s
Natural cubic spline through equally spaced knots on [0, k], pinned to t(m) at k and
constant t(m) beyond it; JSON serialization for optimized functions
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.interpolate import CubicSpline

from ..utils.errors import ConfigValidationError, DomainError
from .distributions import ProblemConfig

PIN_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class SplineHalfWidth:
    """Immutable natural cubic spline s on [0, k] extended by t(m) on [k, inf)"""

    cfg: ProblemConfig
    knots: np.ndarray
    values: np.ndarray
    poly: CubicSpline = field(repr=False)

    @property
    def q(self) -> int:
        return len(self.knots)

    @property
    def free_values(self) -> np.ndarray:
        """s(x_1), ..., s(x_{q-1}); s(x_q) is pinned to t(m)"""
        return self.values[:-1]

    @property
    def coefficients(self) -> np.ndarray:
        """Per-interval cubic coefficients, rows (c3, c2, c1, c0) in powers of (x - x_i)"""
        return self.poly.c.T

    def __call__(self, x):
        return s_eval(self, x)


def spline_fit(knot_values: Sequence[float], cfg: ProblemConfig, q: int) -> SplineHalfWidth:
    """
    Fit the natural cubic spline through (x_i, v_i), i = 1..q-1, and the pinned point (k, t(m))

    Args:
        knot_values: the q-1 free values s(x_1), ..., s(x_{q-1})
        cfg: problem instance providing k and t(m)
        q: number of equally spaced knots on [0, k], x_1 = 0 and x_q = k

    Returns:
        SplineHalfWidth
    """
    if q < 3:
        raise DomainError(f"a natural cubic spline needs q >= 3 knots, got {q}")
    free = np.asarray(knot_values, dtype=float).ravel()
    if free.size != q - 1:
        raise DomainError(f"expected {q - 1} free knot values, got {free.size}")
    if not np.all(np.isfinite(free)):
        raise DomainError("knot values must be finite")

    knots = np.linspace(0.0, cfg.k, q)
    values = np.append(free, cfg.t_m)
    poly = CubicSpline(knots, values, bc_type="natural")
    knots.setflags(write=False)
    values.setflags(write=False)
    return SplineHalfWidth(cfg=cfg, knots=knots, values=values, poly=poly)


def constant_spline(cfg: ProblemConfig, q: int, value: Optional[float] = None) -> SplineHalfWidth:
    """Spline with every free knot at value (default t(m), i.e. s = t(m) everywhere)"""
    value = cfg.t_m if value is None else value
    return spline_fit(np.full(q - 1, value), cfg, q)


def s_eval(s: SplineHalfWidth, x):
    """Evaluate s at x >= 0: the spline on [0, k], t(m) on [k, inf)"""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0):
        raise DomainError("s is evaluated at |x| >= 0 only")
    k = s.cfg.k
    return np.where(x >= k, s.cfg.t_m, s.poly(np.minimum(x, k)))


def basis_splines(cfg: ProblemConfig, q: int) -> List[CubicSpline]:
    """
    Natural splines through the unit vectors on the q knots of [0, k]

    The natural spline is linear in its knot values, so s = sum_j v_j B_j.
    """
    knots = np.linspace(0.0, cfg.k, q)
    return [CubicSpline(knots, unit, bc_type="natural") for unit in np.eye(q)]


def basis_matrix(cfg: ProblemConfig, q: int, x, splines: Optional[Sequence[CubicSpline]] = None) -> np.ndarray:
    """Matrix B with s(x) = B @ [v_1, ..., v_q] for x in [0, k]"""
    x = np.asarray(x, dtype=float)
    splines = basis_splines(cfg, q) if splines is None else splines
    return np.column_stack([b(x) for b in splines])


class SplineFile(BaseModel):
    """On-disk form of a half-width function"""

    model_config = ConfigDict(extra="forbid")

    m: int = Field(..., ge=1)
    alpha: float = Field(..., gt=0.0, lt=1.0)
    eta: float = Field(..., gt=0.0)
    a: float = Field(..., gt=2.0)
    q: int = Field(..., ge=3)
    knot_values: List[float]

    @model_validator(mode="after")
    def _check_length(self):
        if len(self.knot_values) != self.q:
            raise ValueError(f"knot_values must hold q={self.q} values, got {len(self.knot_values)}")
        return self

    @classmethod
    def from_spline(cls, s: SplineHalfWidth) -> "SplineFile":
        return cls(m=s.cfg.m, alpha=s.cfg.alpha, eta=s.cfg.eta, a=s.cfg.a, q=s.q,
                   knot_values=[float(v) for v in s.values])

    def to_problem_config(self) -> ProblemConfig:
        return ProblemConfig(m=self.m, alpha=self.alpha, eta=self.eta, a=self.a)


def spline_to_json(s: SplineHalfWidth) -> str:
    # json.dumps writes floats with the shortest round-trip repr
    return json.dumps(SplineFile.from_spline(s).model_dump(), indent=2)


def spline_from_json(text: str, expected: Optional[ProblemConfig] = None,
                     expected_q: Optional[int] = None) -> SplineHalfWidth:
    """
    Parse and validate a spline document

    Raises:
        ConfigValidationError: malformed document, v_q != t(m), or a field that does not
        match the expected configuration
    """
    try:
        doc = SplineFile.model_validate_json(text)
    except ValueError as e:
        raise ConfigValidationError(f"malformed spline file: {e}", field="spline") from e

    if expected is not None:
        for name in ("m", "alpha", "eta", "a"):
            if getattr(doc, name) != getattr(expected, name):
                raise ConfigValidationError(
                    f"spline has {getattr(doc, name)}, configuration has {getattr(expected, name)}",
                    field=name)
    if expected_q is not None and doc.q != expected_q:
        raise ConfigValidationError(f"spline has {doc.q}, configuration has {expected_q}", field="q")

    cfg = expected if expected is not None else doc.to_problem_config()
    if not np.all(np.isfinite(doc.knot_values)):
        raise ConfigValidationError("knot values must be finite", field="knot_values")
    if abs(doc.knot_values[-1] - cfg.t_m) > PIN_TOLERANCE:
        raise ConfigValidationError(
            f"last knot value {doc.knot_values[-1]!r} differs from t(m) = {cfg.t_m!r}",
            field="knot_values")
    return spline_fit(doc.knot_values[:-1], cfg, doc.q)


def save_spline(s: SplineHalfWidth, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(spline_to_json(s), encoding="utf-8")
    return path


def load_spline(path: Union[str, Path], expected: Optional[ProblemConfig] = None,
                expected_q: Optional[int] = None) -> SplineHalfWidth:
    path = Path(path)
    if not path.exists():
        raise ConfigValidationError(f"spline file not found: {path}", field="spline_file")
    return spline_from_json(path.read_text(encoding="utf-8"), expected, expected_q)
