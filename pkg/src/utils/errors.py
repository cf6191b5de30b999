"""
Exception hierarchy
Every failure raised by the library derives from ScadIntervalError
"""

from typing import Dict, Optional, Sequence


class ScadIntervalError(Exception):
    """Base class for all library errors"""


class DomainError(ScadIntervalError, ValueError):
    """An argument lies outside the domain of the operation"""


class ConfigValidationError(ScadIntervalError, ValueError):
    """A configuration or spline file failed validation"""

    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field


class SolverError(ScadIntervalError):
    """A root solve failed to bracket or converge"""

    def __init__(self, message: str, bracket=None, values=None):
        detail = ""
        if bracket is not None:
            detail = f" (bracket={tuple(bracket)}, values={tuple(values) if values is not None else None})"
        super().__init__(message + detail)
        self.bracket = bracket
        self.values = values


class QuadratureError(ScadIntervalError):
    """Adaptive quadrature exhausted its subdivision budget"""

    def __init__(self, message: str, value=None, err_est=None):
        super().__init__(f"{message} (partial value={value}, error estimate={err_est})")
        self.value = value
        self.err_est = err_est


class InfeasibleOptimizationError(ScadIntervalError):
    """No multistart produced a point satisfying every constraint"""

    def __init__(self, message: str, best_values: Sequence[float] = (),
                 violations: Optional[Dict[str, float]] = None):
        super().__init__(message)
        self.best_values = list(best_values)
        self.violations = dict(violations or {})


class OracleDisagreementError(ScadIntervalError):
    """Monte Carlo and quadrature estimates disagree beyond the z-score limit"""

    def __init__(self, message: str, max_abs_z: float):
        super().__init__(f"{message} (max |z| = {max_abs_z:.2f})")
        self.max_abs_z = max_abs_z
