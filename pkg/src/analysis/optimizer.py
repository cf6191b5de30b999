"""
Constrained design of the half-width function
Minimizes e(0; s) over the free spline values subject to s >= 1e-3 on [0, k] and
coverage >= 1 - alpha on a theta grid, with a post-hoc scan that feeds violations
back into the grid.
"""

import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import optimize as sp_optimize

from ..core.distributions import ProblemConfig, expected_w
from ..core.quadrature import QuadratureSettings, integrate_split
from ..core.spline import SplineFile, SplineHalfWidth, basis_matrix, basis_splines, spline_fit
from ..utils.errors import DomainError, InfeasibleOptimizationError, QuadratureError, SolverError
from ..utils.logger import get_logger, log_execution_time
from .metrics import (ThetaGrid, coverage, coverage_curve, max_sel, refine_extremum,
                      scan_grid, sel_at_zero)

logger = get_logger(__name__)

POSITIVITY_FLOOR = 1e-3
POSITIVITY_POINTS = 200
VERIFICATION_SLACK = 1e-5
MAX_CUTTING_ROUNDS = 5
FD_STEP = 1e-5
TIE_TOLERANCE = 1e-9
FIXED_START_OFFSETS = (0.0, 0.5, 1.0)
RAMP_HEIGHTS = (4.0, 8.0)
KNOT_VALUE_HEADROOM = 30.0
MAX_RESOLVES = 3


def default_constraint_grid(cfg: ProblemConfig) -> ThetaGrid:
    """{0 : 0.05 : 2} together with {2 : 0.1 : k + t(m) + 4}"""
    fine = 0.05 * np.arange(41)
    n_coarse = int(np.ceil((cfg.k + cfg.t_m + 4.0 - 2.0) / 0.1 - 1e-9))
    coarse = 2.0 + 0.1 * np.arange(n_coarse + 1)
    return ThetaGrid.from_points(np.round(np.concatenate([fine, coarse]), 12))


@dataclass(frozen=True)
class OptimizationProblem:
    """One optimization run: problem instance, knot count, grids and solver controls"""

    cfg: ProblemConfig
    q: int
    constraint_grid: ThetaGrid
    positivity_grid: np.ndarray
    settings: QuadratureSettings = field(default_factory=QuadratureSettings)
    verification_grid: Optional[ThetaGrid] = None
    solver_tol: float = 1e-7
    max_iters: int = 100
    multistart: int = 6
    seed: int = 20240101
    workers: int = 1
    warm_starts: Tuple[np.ndarray, ...] = ()

    def __post_init__(self):
        if self.q < 3:
            raise DomainError(f"q must be >= 3, got {self.q}")
        if self.multistart < 1:
            raise DomainError("multistart needs at least one start")
        if any(np.asarray(x0).size != self.q - 1 for x0 in self.warm_starts):
            raise DomainError(f"warm starts must hold q - 1 = {self.q - 1} knot values")
        if self.constraint_grid.theta_max <= self.cfg.k + self.cfg.t_m:
            raise DomainError("constraint grid must extend past k + t(m)")
        pts = np.asarray(self.positivity_grid, dtype=float)
        if pts.size == 0 or np.any((pts < 0.0) | (pts > self.cfg.k)):
            raise DomainError("positivity grid must be a non-empty subset of [0, k]")
        if self.verification_grid is None:
            object.__setattr__(self, "verification_grid", scan_grid(self.cfg))

    @classmethod
    def build(cls, cfg: ProblemConfig, q: int, **kwargs) -> "OptimizationProblem":
        """Problem with the default constraint and positivity grids"""
        return cls(cfg=cfg, q=q, constraint_grid=default_constraint_grid(cfg),
                   positivity_grid=np.linspace(0.0, cfg.k, POSITIVITY_POINTS), **kwargs)


@dataclass(frozen=True)
class TraceRow:
    round: int
    n_constraints: int
    objective: float
    min_coverage: float


@dataclass(frozen=True)
class OptimizationResult:
    s_star: SplineHalfWidth
    objective: float
    max_sel: float
    argmax_theta: float
    min_coverage: float
    argmin_theta: float
    iterations: int
    converged: bool
    solver_trace: List[TraceRow] = field(default_factory=list)

    def to_dict(self) -> Dict:
        return {
            "spline": SplineFile.from_spline(self.s_star).model_dump(),
            "objective": self.objective,
            "max_sel": self.max_sel,
            "argmax_theta": self.argmax_theta,
            "min_coverage": self.min_coverage,
            "argmin_theta": self.argmin_theta,
            "iterations": self.iterations,
            "converged": self.converged,
            "solver_trace": [vars(row) for row in self.solver_trace],
        }


def result_to_json(result: OptimizationResult) -> str:
    return json.dumps(result.to_dict(), indent=2, sort_keys=True)


@dataclass
class _Candidate:
    """Outcome of one multistart"""

    label: str
    free: np.ndarray
    s: SplineHalfWidth
    objective: float
    min_coverage: float
    argmin_theta: float
    iterations: int
    converged: bool
    violations: Dict[str, float]
    trace: List[TraceRow]
    message: str = ""


def knot_bounds(cfg: ProblemConfig, q: int) -> List[Tuple[float, float]]:
    """Box [1e-3, t(m) + 30] on every free knot value"""
    return [(POSITIVITY_FLOOR, cfg.t_m + KNOT_VALUE_HEADROOM)] * (q - 1)


def verify_coverage(s: SplineHalfWidth, cfg: ProblemConfig, settings: QuadratureSettings,
                    scan: ThetaGrid, workers: int = 1) -> Tuple[float, float]:
    """
    Minimum coverage over the scan grid, refined around the grid minimum to 1e-6 in theta

    Returns:
        (min_coverage, argmin_theta)
    """
    values = coverage_curve(scan.points, s, cfg, settings, workers=workers)
    return refine_extremum(values, scan.points, lambda th: coverage(th, s, cfg, settings),
                           maximize=False)


class _ConstraintSet:
    """
    Coverage and positivity constraints of one grid, with the objective as a linear form

    e(0; s) is linear in the knot values, so the objective and positivity are exact
    linear maps; only the coverage jacobian is taken by forward differences.
    """

    def __init__(self, problem: OptimizationProblem, grid: ThetaGrid, gradient: np.ndarray):
        self.problem = problem
        self.cfg = problem.cfg
        self.grid = grid
        self.gradient = gradient
        self.positivity = basis_matrix(self.cfg, problem.q, problem.positivity_grid)
        self._cache: Dict[bytes, np.ndarray] = {}
        self._jac_cache: Dict[bytes, np.ndarray] = {}

    def objective(self, free: np.ndarray) -> float:
        return 1.0 + float(self.gradient @ (free - self.cfg.t_m))

    def objective_grad(self, free: np.ndarray) -> np.ndarray:
        return self.gradient

    def coverage_margin(self, free: np.ndarray) -> np.ndarray:
        key = np.asarray(free, dtype=float).tobytes()
        if key not in self._cache:
            s = spline_fit(free, self.cfg, self.problem.q)
            values = coverage_curve(self.grid.points, s, self.cfg, self.problem.settings,
                                    workers=self.problem.workers)
            self._cache[key] = values - self.cfg.nominal_coverage
        return self._cache[key]

    def coverage_jac(self, free: np.ndarray) -> np.ndarray:
        free = np.asarray(free, dtype=float)
        key = free.tobytes()
        if key not in self._jac_cache:
            base = self.coverage_margin(free)
            columns = []
            for j in range(free.size):
                bumped = free.copy()
                bumped[j] += FD_STEP
                columns.append((self.coverage_margin(bumped) - base) / FD_STEP)
            self._jac_cache[key] = np.column_stack(columns)
        return self._jac_cache[key]

    def positivity_margin(self, free: np.ndarray) -> np.ndarray:
        return self.positivity @ np.append(free, self.cfg.t_m) - POSITIVITY_FLOOR

    def positivity_jac(self, free: np.ndarray) -> np.ndarray:
        return self.positivity[:, :-1]

    def violations(self, free: np.ndarray) -> Dict[str, float]:
        return {
            "coverage": float(max(0.0, -np.min(self.coverage_margin(free)))),
            "positivity": float(max(0.0, -np.min(self.positivity_margin(free)))),
        }


def objective_gradient(cfg: ProblemConfig, q: int, settings: QuadratureSettings) -> np.ndarray:
    """
    Coefficients g with e(0; s) = 1 + g . (v_free - t(m))

    g_j = sqrt(2/pi) / (t(m) E(W)) times the integral over [0, k] of the j-th natural
    spline basis function against (m / (x^2 + m))^(m/2 + 1).
    """
    m = cfg.m
    scale = np.sqrt(2.0 / np.pi) / (cfg.t_m * expected_w(m))
    interior = np.linspace(0.0, cfg.k, q)[1:-1]
    splines = basis_splines(cfg, q)
    gradient = []
    for basis in splines[:-1]:
        def integrand(x, basis=basis):
            return basis(x) * np.exp((0.5 * m + 1.0) * (np.log(m) - np.log(x * x + m)))
        gradient.append(scale * integrate_split(integrand, 0.0, cfg.k, interior, settings).value)
    return np.asarray(gradient)


def _solve_grid(constraints: _ConstraintSet, x0: np.ndarray) -> sp_optimize.OptimizeResult:
    problem = constraints.problem
    return sp_optimize.minimize(
        constraints.objective, x0, jac=constraints.objective_grad, method="SLSQP",
        bounds=knot_bounds(problem.cfg, problem.q),
        constraints=[
            {"type": "ineq", "fun": constraints.coverage_margin, "jac": constraints.coverage_jac},
            {"type": "ineq", "fun": constraints.positivity_margin, "jac": constraints.positivity_jac},
        ],
        options={"maxiter": problem.max_iters, "ftol": problem.solver_tol},
    )


def _restore_feasibility(constraints: _ConstraintSet, x0: np.ndarray) -> np.ndarray:
    """
    Elastic phase: minimize the common slack tau >= 0 over (free values, tau) subject to
    coverage margin + tau >= 0 and positivity

    Returns:
        the free values of the end point, grid-feasible when tau reached zero
    """
    problem = constraints.problem
    n = x0.size
    tau0 = constraints.violations(x0)["coverage"]
    unit = np.append(np.zeros(n), 1.0)

    def coverage_fun(z):
        return constraints.coverage_margin(z[:n]) + z[n]

    def coverage_jac(z):
        jac = constraints.coverage_jac(z[:n])
        return np.hstack([jac, np.ones((jac.shape[0], 1))])

    def positivity_jac(z):
        jac = constraints.positivity_jac(z[:n])
        return np.hstack([jac, np.zeros((jac.shape[0], 1))])

    res = sp_optimize.minimize(
        lambda z: z[n], np.append(np.clip(x0, *knot_bounds(problem.cfg, problem.q)[0]), tau0),
        jac=lambda z: unit, method="SLSQP",
        bounds=knot_bounds(problem.cfg, problem.q) + [(0.0, None)],
        constraints=[
            {"type": "ineq", "fun": coverage_fun, "jac": coverage_jac},
            {"type": "ineq", "fun": lambda z: constraints.positivity_margin(z[:n]), "jac": positivity_jac},
        ],
        options={"maxiter": problem.max_iters, "ftol": problem.solver_tol},
    )
    logger.debug(f"Feasibility phase: slack {tau0:.3g} -> {float(res.x[n]):.3g} ({res.message})")
    return np.asarray(res.x[:n], dtype=float)


def _solve_round(constraints: _ConstraintSet, x0: np.ndarray,
                 label: str) -> Tuple[np.ndarray, int, str]:
    """
    SLSQP on one constraint grid

    A run that stops infeasible is followed by the feasibility phase and a fresh run
    from its end point; a run that stops early at a feasible point is restarted from
    there while the objective keeps dropping.

    Returns:
        (free values, solver iterations, last solver message)
    """
    tol = constraints.problem.solver_tol
    x = np.asarray(x0, dtype=float)
    best: Optional[np.ndarray] = None
    iterations = 0
    message = ""

    for _ in range(MAX_RESOLVES + 1):
        res = _solve_grid(constraints, x)
        iterations += int(res.nit)
        message = str(res.message)
        candidate = np.asarray(res.x, dtype=float)

        if max(constraints.violations(candidate).values()) <= tol:
            improved = best is None or constraints.objective(candidate) < constraints.objective(best) - tol
            if improved:
                best = candidate
            if res.success or not improved:
                break
            logger.debug(f"{label}: restarting after '{message}'")
            x = candidate
        else:
            logger.warning(f"{label}: solver stopped infeasible ({message}); entering feasibility phase")
            x = _restore_feasibility(constraints, candidate)

    if best is None:
        return x, iterations, message
    return best, iterations, message


def _solve_from(problem: OptimizationProblem, x0: np.ndarray, gradient: np.ndarray,
                label: str) -> _Candidate:
    """SLSQP on the constraint grid, then verification; violations are added to the grid"""
    cfg = problem.cfg
    target = cfg.nominal_coverage - VERIFICATION_SLACK
    grid = problem.constraint_grid
    x = np.asarray(x0, dtype=float)
    trace: List[TraceRow] = []
    iterations = 0

    for round_no in range(1, MAX_CUTTING_ROUNDS + 1):
        constraints = _ConstraintSet(problem, grid, gradient)
        x, nit, message = _solve_round(constraints, x, label)
        iterations += nit
        violations = constraints.violations(x)
        s = spline_fit(x, cfg, problem.q)
        min_cov, argmin = verify_coverage(s, cfg, problem.settings, problem.verification_grid,
                                          workers=problem.workers)
        objective = sel_at_zero(s, cfg, problem.settings)
        trace.append(TraceRow(round_no, len(grid), objective, min_cov))
        logger.debug(f"{label} round {round_no}: {len(grid)} constraints, objective {objective:.6f}, "
                     f"min coverage {min_cov:.6f} at theta {argmin:.4f}, solver: {message}")

        grid_feasible = max(violations.values()) <= problem.solver_tol
        if min_cov >= target or not grid_feasible:
            break
        grid = grid.union([argmin])

    converged = bool(grid_feasible and min_cov >= target)
    if not converged:
        logger.warning(f"{label} did not converge: violations {violations}, min coverage {min_cov:.6f} "
                       f"at theta {argmin:.4f}, solver: {message}")
    return _Candidate(label=label, free=x, s=s, objective=objective, min_coverage=min_cov,
                      argmin_theta=argmin, iterations=iterations, converged=converged,
                      violations=violations, trace=trace, message=message)


def coarse_start(s: SplineHalfWidth, q: int) -> np.ndarray:
    """Free values of a q-knot start that follows an already optimized s"""
    knots = np.linspace(0.0, s.cfg.k, q)[:-1]
    low, high = knot_bounds(s.cfg, q)[0]
    return np.clip(s(knots), low, high)


def initial_points(problem: OptimizationProblem) -> List[Tuple[str, np.ndarray]]:
    """
    Constant starts at t(m), t(m) + 0.5 and t(m) + 1, one seeded random start
    t(m) + U(0.5, 1.5) per knot, ramps rising from t(m) + 0.5 at the origin to
    t(m) + 4.5 and t(m) + 8.5 at the last free knot, then further random starts.
    The first multistart of these are used; warm starts come on top.
    """
    cfg, n_free = problem.cfg, problem.q - 1
    rng = np.random.default_rng(problem.seed)
    ramp = np.linspace(0.0, 1.0, n_free)

    starts = [(f"t+{offset:g}", np.full(n_free, cfg.t_m + offset)) for offset in FIXED_START_OFFSETS]
    starts.append(("random0", cfg.t_m + rng.uniform(0.5, 1.5, size=n_free)))
    starts.extend((f"ramp{height:g}", cfg.t_m + 0.5 + height * ramp) for height in RAMP_HEIGHTS)
    for i in range(1, problem.multistart - len(starts) + 1):
        starts.append((f"random{i}", cfg.t_m + rng.uniform(0.5, 1.5, size=n_free)))

    starts = starts[:problem.multistart]
    starts.extend((f"warm{i}", np.asarray(x0, dtype=float)) for i, x0 in enumerate(problem.warm_starts))
    return starts


def _select(candidates: List[_Candidate], problem: OptimizationProblem) -> Tuple[_Candidate, float, float]:
    """Lowest objective; ties broken by smaller max e(theta; s), then smaller knot values"""
    best_objective = min(c.objective for c in candidates)
    tied = [c for c in candidates if c.objective - best_objective <= TIE_TOLERANCE]
    scored = []
    for c in tied:
        peak, where = max_sel(c.s, problem.cfg, problem.settings, problem.verification_grid,
                              workers=problem.workers)
        scored.append((peak, tuple(c.free), where, c))
    scored.sort(key=lambda row: row[:2])
    peak, _, where, winner = scored[0]
    return winner, peak, where


@log_execution_time
def optimize(problem: OptimizationProblem) -> OptimizationResult:
    """
    Minimize e(0; s) over the q - 1 free knot values from every multistart

    Returns:
        OptimizationResult for the best converged start

    Raises:
        InfeasibleOptimizationError: no start satisfies the constraints; carries the
        most feasible iterate and its violations
    """
    cfg = problem.cfg
    starts = initial_points(problem)
    logger.info(f"Optimizing m={cfg.m}, alpha={cfg.alpha}, eta={cfg.eta}, q={problem.q} "
                f"with {len(starts)} starts")
    gradient = objective_gradient(cfg, problem.q, problem.settings)

    candidates: List[_Candidate] = []
    for label, x0 in starts:
        try:
            candidate = _solve_from(problem, x0, gradient, label)
        except (QuadratureError, SolverError) as e:
            logger.warning(f"Start {label} failed: {str(e)}")
            continue
        logger.info(f"Start {label}: objective {candidate.objective:.6f}, "
                    f"min coverage {candidate.min_coverage:.6f}, converged {candidate.converged}")
        candidates.append(candidate)

    feasible = [c for c in candidates if c.converged]
    if not feasible:
        if not candidates:
            raise InfeasibleOptimizationError("every start failed numerically")
        closest = min(candidates, key=lambda c: (sum(c.violations.values()),
                                                 cfg.nominal_coverage - c.min_coverage))
        violations = dict(closest.violations, verification=max(0.0, cfg.nominal_coverage - closest.min_coverage))
        raise InfeasibleOptimizationError(
            f"no feasible start for m={cfg.m}, eta={cfg.eta}, q={problem.q}",
            best_values=closest.s.values, violations=violations)

    winner, peak, where = _select(feasible, problem)
    logger.info(f"Best start {winner.label}: e(0;s*) = {winner.objective:.6f}, max e = {peak:.6f}")
    return OptimizationResult(
        s_star=winner.s, objective=winner.objective, max_sel=peak, argmax_theta=where,
        min_coverage=winner.min_coverage, argmin_theta=winner.argmin_theta,
        iterations=winner.iterations, converged=winner.converged, solver_trace=winner.trace)
