"""
Analysis Package
Provides coverage and expected-length functionals, the constrained optimizer and the Monte Carlo oracle
"""

from .metrics import ThetaGrid, coverage, sel, sel_at_zero, max_sel, scaled_mse
from .optimizer import OptimizationProblem, OptimizationResult, optimize, verify_coverage
from .monte_carlo import McEstimate, simulate

__all__ = ['ThetaGrid', 'coverage', 'sel', 'sel_at_zero', 'max_sel', 'scaled_mse',
           'OptimizationProblem', 'OptimizationResult', 'optimize', 'verify_coverage',
           'McEstimate', 'simulate']
