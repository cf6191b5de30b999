"""
Core Package
Provides the distributions, SCAD thresholding, spline half-widths and quadrature
"""

from .distributions import ProblemConfig, t_quantile, w_pdf, expected_w
from .quadrature import QuadratureSettings, integrate, integrate_split
from .scad import scad_threshold, scad_estimate, interval_endpoints
from .spline import SplineHalfWidth, spline_fit, s_eval, load_spline, save_spline

__all__ = ['ProblemConfig', 't_quantile', 'w_pdf', 'expected_w',
           'QuadratureSettings', 'integrate', 'integrate_split',
           'scad_threshold', 'scad_estimate', 'interval_endpoints',
           'SplineHalfWidth', 'spline_fit', 's_eval', 'load_spline', 'save_spline']
