"""
Figure data
Curve data for the scaled expected length / coverage plot and for the plot of s*
"""

import numpy as np
import pandas as pd

from ..analysis.metrics import ThetaGrid, coverage_curve, sel_curve
from ..core.distributions import ProblemConfig
from ..core.quadrature import QuadratureSettings
from ..core.spline import SplineHalfWidth, s_eval
from ..utils.errors import DomainError

HALF_WIDTH_POINTS = 201


def performance_frame(s: SplineHalfWidth, cfg: ProblemConfig, settings: QuadratureSettings,
                      grid: ThetaGrid, workers: int = 1) -> pd.DataFrame:
    """Columns theta, sel, coverage over the grid"""
    return pd.DataFrame({
        "theta": grid.points,
        "sel": sel_curve(grid.points, s, cfg, settings, workers=workers),
        "coverage": coverage_curve(grid.points, s, cfg, settings, workers=workers),
    })


def half_width_frame(s: SplineHalfWidth, n_points: int = HALF_WIDTH_POINTS) -> pd.DataFrame:
    """Columns x, s, is_knot on [0, k]; the knots are always included"""
    x = np.union1d(np.linspace(0.0, s.cfg.k, n_points), s.knots)
    return pd.DataFrame({"x": x, "s": s_eval(s, x), "is_knot": np.isin(x, s.knots)})


def figure_frame(figure_id: int, s: SplineHalfWidth, cfg: ProblemConfig,
                 settings: QuadratureSettings, grid: ThetaGrid, workers: int = 1) -> pd.DataFrame:
    if figure_id == 1:
        return performance_frame(s, cfg, settings, grid, workers=workers)
    if figure_id == 2:
        return half_width_frame(s)
    raise DomainError(f"figure must be 1 or 2, got {figure_id}")
