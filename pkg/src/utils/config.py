"""
Run configuration
Flat KEY=value configuration files (python-dotenv) validated into a frozen pydantic model
"""

from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Union

import numpy as np
from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from ..analysis.metrics import ThetaGrid
from ..analysis.optimizer import OptimizationProblem
from ..core.distributions import ProblemConfig
from ..core.quadrature import QuadratureSettings
from .errors import ConfigValidationError
from .logger import get_logger

logger = get_logger(__name__)


class RunConfig(BaseModel):
    """Every setting of a run; defaults are the 1 - alpha = 0.95, a = 3.7 setting"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    m: int = Field(200, ge=1)
    alpha: float = Field(0.05, gt=0.0, lt=1.0)
    eta: float = Field(1.0, gt=0.0)
    a: float = Field(3.7, gt=2.0)
    q: int = Field(6, ge=3)
    abs_tol: float = Field(1e-9, gt=0.0)
    rel_tol: float = Field(1e-9, gt=0.0)
    w_tail_mass: float = Field(1e-12, gt=0.0, le=0.01)
    theta_step: float = Field(0.05, gt=0.0)
    theta_max: Optional[float] = Field(None, gt=0.0)
    multistart: int = Field(6, ge=1)
    seed: int = 20240101
    out_dir: str = "output"
    max_iters: int = Field(100, ge=1)
    solver_tol: float = Field(1e-7, gt=0.0)
    n_samples: int = Field(4_000_000, ge=10_000)
    workers: int = Field(1, ge=1)
    parallel_cells: bool = False

    def problem(self) -> ProblemConfig:
        return ProblemConfig(m=self.m, alpha=self.alpha, eta=self.eta, a=self.a)

    def quadrature(self) -> QuadratureSettings:
        return QuadratureSettings(abs_tol=self.abs_tol, rel_tol=self.rel_tol, w_tail_mass=self.w_tail_mass)

    def scan(self) -> ThetaGrid:
        """theta grid [0, theta_max]; theta_max defaults to k + t(m) + 8"""
        cfg = self.problem()
        theta_max = self.theta_max if self.theta_max is not None else cfg.k + cfg.t_m + 8.0
        return ThetaGrid.uniform(theta_max, self.theta_step)

    def optimization_problem(self, warm_starts: Tuple[np.ndarray, ...] = ()) -> OptimizationProblem:
        return OptimizationProblem.build(
            self.problem(), self.q, settings=self.quadrature(), verification_grid=self.scan(),
            solver_tol=self.solver_tol, max_iters=self.max_iters, multistart=self.multistart,
            seed=self.seed, workers=self.workers, warm_starts=warm_starts)

    def tag(self) -> str:
        """File-name tag, e.g. m200_eta1_q6"""
        return f"m{self.m}_eta{self.eta:g}_q{self.q}"


def _as_validation_error(e: ValidationError) -> ConfigValidationError:
    first = e.errors()[0]
    field = ".".join(str(part) for part in first.get("loc", ())) or None
    return ConfigValidationError(first.get("msg", str(e)), field=field)


def read_config_file(path: Union[str, Path]) -> Dict[str, str]:
    """Flat KEY=value pairs from path, keys lower-cased; empty values are dropped"""
    path = Path(path)
    if not path.exists():
        raise ConfigValidationError(f"config file not found: {path}", field="config")
    values = dotenv_values(path)
    return {key.strip().lower(): value for key, value in values.items() if value not in (None, "")}


def load_run_config(path: Optional[Union[str, Path]] = None,
                    overrides: Optional[Mapping[str, Any]] = None) -> RunConfig:
    """
    Build a RunConfig from defaults, then the config file, then overrides

    Args:
        path: optional KEY=value file
        overrides: values from command-line flags; None entries are ignored

    Raises:
        ConfigValidationError: unknown key or invalid value, naming the field
    """
    merged: Dict[str, Any] = {}
    if path is not None:
        merged.update(read_config_file(path))
        logger.debug(f"Loaded {len(merged)} settings from {path}")
    merged.update({key: value for key, value in (overrides or {}).items() if value is not None})
    try:
        return RunConfig(**merged)
    except ValidationError as e:
        raise _as_validation_error(e) from e
