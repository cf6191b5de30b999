"""
Utils Package
Provides logging, error types and run configuration
"""

from .logger import get_logger, log_execution_time
from .errors import (ScadIntervalError, DomainError, ConfigValidationError, SolverError,
                     QuadratureError, InfeasibleOptimizationError, OracleDisagreementError)

__all__ = ['get_logger', 'log_execution_time', 'ScadIntervalError', 'DomainError',
           'ConfigValidationError', 'SolverError', 'QuadratureError',
           'InfeasibleOptimizationError', 'OracleDisagreementError']
