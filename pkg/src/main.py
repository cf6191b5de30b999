"""
SCAD Intervals Main Orchestrator
Command-line front-end: evaluate, optimize, reproduce tables and figure data, cross-check by Monte Carlo
"""

import argparse
import sys
import time
from multiprocessing import Pool
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from dotenv import load_dotenv

from .analysis.metrics import coverage_curve, scaled_mse, sel_curve
from .analysis.monte_carlo import simulate
from .analysis.optimizer import OptimizationResult, coarse_start, optimize, result_to_json
from .core.spline import SplineHalfWidth, load_spline, save_spline
from .reporting.figures import figure_frame
from .reporting.tables import (CellOutcome, comparison_frame, format_layout, reference,
                               table_cells, timings_frame)
from .reporting.writers import ResultWriter
from .utils.config import RunConfig, load_run_config
from .utils.errors import (ConfigValidationError, DomainError, InfeasibleOptimizationError,
                           OracleDisagreementError)
from .utils.logger import get_logger

# Load environment variables
load_dotenv()

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_VALIDATION = 2
EXIT_INFEASIBLE = 3
EXIT_DISAGREEMENT = 4

MC_Z_LIMIT = 4.0

FLAG_TYPES = {
    "m": int, "alpha": float, "eta": float, "a": float, "q": int,
    "abs_tol": float, "rel_tol": float, "w_tail_mass": float,
    "theta_step": float, "theta_max": float, "multistart": int, "seed": int,
    "out_dir": str, "max_iters": int, "solver_tol": float, "n_samples": int,
    "workers": int, "parallel_cells": str,
}

COLUMN_NOTES = """\
output columns:
  eval      theta; coverage = integral over x in [-k, k] of the indicator w-integral
            plus (1 - alpha) minus the integral of b(w; m, k, theta) f_W(w);
            sel = 1 + 1/(t(m) E(W)) * integral of (s(|x|) - t(m)) times the integral
            of phi(w x - theta) w^2 f_W(w) dw
  optimize  spline JSON (m, alpha, eta, a, q, knot_values) and result JSON with
            objective = e(0; s*) from the single-integral theta = 0 form, max_sel and
            argmax_theta from the theta scan, min_coverage and argmin_theta from the
            verification scan, solver_trace per cutting-plane round
  table     eta, q, sel_at_zero = e(0; s*), max_sel = max over theta of e(theta; s*),
            ref_* = published values, diff_* = reproduced - published,
            within_tolerance = |diff_sel_at_zero| <= 0.005; wall times go to a
            separate timings file
  figure    1: theta, sel = e(theta; s), coverage = coverage probability;
            2: x, s = s(x) on [0, k], is_knot marks the spline knots
  mc-check  theta, quantity (coverage | sel), quadrature, mc, se, z = (quadrature - mc) / se
  mse       theta, scaled_mse = E[(h(Theta_hat) - theta)^2] with Theta_hat ~ N(theta, 1)

exit status: 0 success, 2 invalid configuration or spline file,
             3 infeasible optimization, 4 Monte Carlo disagreement (|z| > 4), 1 other failure
"""


def solve_table_cell(config: RunConfig,
                     warm_starts: Tuple[np.ndarray, ...] = ()) -> Tuple[CellOutcome, Optional[SplineHalfWidth]]:
    """Optimize one (eta, q) cell; failures are recorded in the outcome and give no spline"""
    started = time.perf_counter()
    try:
        result = optimize(config.optimization_problem(warm_starts))
        return CellOutcome(eta=config.eta, q=config.q, wall_time=time.perf_counter() - started,
                           sel_at_zero=result.objective, max_sel=result.max_sel,
                           argmax_theta=result.argmax_theta, min_coverage=result.min_coverage), result.s_star
    except Exception as e:
        logger.error(f"Cell eta={config.eta}, q={config.q} failed: {str(e)}")
        return CellOutcome(eta=config.eta, q=config.q, wall_time=time.perf_counter() - started,
                           status=f"failed: {type(e).__name__}"), None


def run_table_cell(config: RunConfig) -> CellOutcome:
    return solve_table_cell(config)[0]


def solve_cells_in_order(cell_configs: Sequence[RunConfig]) -> List[CellOutcome]:
    """Cells in order; each cell also starts from the previous optimum of the same eta"""
    outcomes: List[CellOutcome] = []
    previous: Optional[SplineHalfWidth] = None
    for cell in cell_configs:
        warm = ()
        if previous is not None and previous.cfg.eta == cell.eta:
            warm = (coarse_start(previous, cell.q),)
        outcome, previous = solve_table_cell(cell, warm)
        outcomes.append(outcome)
    return outcomes


class IntervalPipeline:
    """Runs the subcommands for one configuration"""

    def __init__(self, config: RunConfig):
        """Initialize the pipeline from a validated configuration"""
        self.config = config
        self.cfg = config.problem()
        self.settings = config.quadrature()
        self.writer = ResultWriter(config.out_dir)

    def spline_path(self, spline_file: Optional[str] = None) -> Path:
        if spline_file is not None:
            return Path(spline_file)
        return self.writer.path(f"spline_{self.config.tag()}.json")

    def load_spline(self, spline_file: Optional[str] = None) -> SplineHalfWidth:
        return load_spline(self.spline_path(spline_file), expected=self.cfg, expected_q=self.config.q)

    def thetas(self, theta_list: Optional[Sequence[float]]) -> np.ndarray:
        if theta_list:
            return np.asarray(theta_list, dtype=float)
        return self.config.scan().points

    def run_eval(self, spline_file: Optional[str], theta_list: Optional[Sequence[float]]) -> pd.DataFrame:
        """Coverage and scaled expected length of a stored spline at each theta"""
        s = self.load_spline(spline_file)
        thetas = self.thetas(theta_list)
        logger.info(f"Evaluating {thetas.size} theta values")
        frame = pd.DataFrame({
            "theta": thetas,
            "coverage": coverage_curve(thetas, s, self.cfg, self.settings, workers=self.config.workers),
            "sel": sel_curve(thetas, s, self.cfg, self.settings, workers=self.config.workers),
        })
        self.writer.write_csv(frame, "eval", f"eval_{self.config.tag()}.csv")
        return frame

    def run_optimize(self) -> OptimizationResult:
        """Optimize s and store the spline and the result report"""
        tag = self.config.tag()
        try:
            result = optimize(self.config.optimization_problem())
        except InfeasibleOptimizationError as e:
            self.writer.write_json({"status": "infeasible", "message": str(e),
                                    "best_values": e.best_values, "violations": e.violations},
                                   f"infeasible_{tag}.json")
            raise
        save_spline(result.s_star, self.spline_path())
        self.writer.write_json(result_to_json(result), f"result_{tag}.json")
        logger.info(f"e(0;s*) = {result.objective:.6f}, max e = {result.max_sel:.6f} "
                    f"at theta = {result.argmax_theta:.4f}, min coverage = {result.min_coverage:.6f}")
        return result

    def run_table(self, table_id: int) -> pd.DataFrame:
        """Optimize every (eta, q) cell of a table and compare with the published values"""
        ref = reference(table_id)
        cell_configs = [self.config.model_copy(update={"m": ref.m, "eta": eta, "q": q})
                        for eta, q in table_cells(table_id)]
        logger.info(f"Reproducing table {table_id} (m={ref.m}): {len(cell_configs)} cells")

        if self.config.parallel_cells:
            with Pool(processes=self.config.workers) as pool:
                outcomes = pool.map(run_table_cell, cell_configs)
        else:
            outcomes = solve_cells_in_order(cell_configs)

        frame = comparison_frame(table_id, outcomes)
        self.writer.write_csv(frame, "table", f"table{table_id}.csv")
        self.writer.write_csv(timings_frame(outcomes), "timings", f"table{table_id}_timings.csv")
        layout = format_layout(frame)
        self.writer.write_text(layout, f"table{table_id}.txt")
        print(layout)
        return frame

    def run_figure(self, figure_id: int, spline_file: Optional[str]) -> pd.DataFrame:
        s = self.load_spline(spline_file)
        frame = figure_frame(figure_id, s, self.cfg, self.settings, self.config.scan(),
                             workers=self.config.workers)
        self.writer.write_csv(frame, f"figure{figure_id}", f"figure{figure_id}_{self.config.tag()}.csv")
        return frame

    def run_mc_check(self, spline_file: Optional[str], theta_list: Optional[Sequence[float]]) -> pd.DataFrame:
        """
        Quadrature against Monte Carlo at each theta

        Raises:
            OracleDisagreementError: some |z| exceeds 4; the report is written first
        """
        s = self.load_spline(spline_file)
        thetas = np.asarray(theta_list if theta_list else [0.0, 0.5, 2.0], dtype=float)
        cov_q = coverage_curve(thetas, s, self.cfg, self.settings, workers=self.config.workers)
        sel_q = sel_curve(thetas, s, self.cfg, self.settings, workers=self.config.workers)

        rows: List[Dict] = []
        estimates = []
        for i, theta in enumerate(thetas):
            est = simulate(float(theta), s, self.cfg, self.config.n_samples, self.config.seed + i,
                           workers=self.config.workers)
            estimates.append(est.model_dump())
            z_cov, z_sel = est.z_scores(float(cov_q[i]), float(sel_q[i]))
            rows.append({"theta": theta, "quantity": "coverage", "quadrature": cov_q[i],
                         "mc": est.coverage_est, "se": est.coverage_se, "z": z_cov})
            rows.append({"theta": theta, "quantity": "sel", "quadrature": sel_q[i],
                         "mc": est.sel_est, "se": est.sel_se, "z": z_sel})

        frame = pd.DataFrame(rows)
        tag = self.config.tag()
        self.writer.write_csv(frame, "mc-check", f"mc_check_{tag}.csv")
        self.writer.write_json({"estimates": estimates}, f"mc_check_{tag}.json")

        worst = float(frame["z"].abs().max())
        if worst > MC_Z_LIMIT:
            raise OracleDisagreementError("Monte Carlo and quadrature disagree", max_abs_z=worst)
        logger.info(f"Monte Carlo agrees with quadrature (max |z| = {worst:.2f})")
        return frame

    def run_mse(self, theta_list: Optional[Sequence[float]]) -> pd.DataFrame:
        thetas = self.thetas(theta_list)
        frame = pd.DataFrame({"theta": thetas,
                              "scaled_mse": [scaled_mse(float(t), self.cfg, self.settings) for t in thetas]})
        self.writer.write_csv(frame, "mse", f"mse_m{self.config.m}_eta{self.config.eta:g}.csv")
        return frame


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat KEY=value configuration file")
    for name, kind in FLAG_TYPES.items():
        flags = [f"--{name}"]
        if "_" in name:
            flags.append(f"--{name.replace('_', '-')}")
        parser.add_argument(*flags, dest=name, type=kind, default=None,
                            help=f"override the {name} configuration key")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scad-intervals",
        description="Confidence intervals centred on the SCAD estimator",
        epilog=COLUMN_NOTES,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    commands = parser.add_subparsers(dest="command", required=True)

    def command(name: str, help_text: str) -> argparse.ArgumentParser:
        sub = commands.add_parser(name, help=help_text, epilog=COLUMN_NOTES,
                                  formatter_class=argparse.RawDescriptionHelpFormatter)
        _add_config_flags(sub)
        return sub

    sub = command("eval", "coverage and scaled expected length of a spline")
    sub.add_argument("--spline", help="spline JSON (default: out_dir/spline_<tag>.json)")
    sub.add_argument("--theta", type=float, nargs="+", help="theta values (default: scan grid)")

    command("optimize", "optimize the half-width function")

    sub = command("table", "reproduce a table of optimized half-width functions")
    sub.add_argument("--table", type=int, choices=(1, 2), required=True)

    sub = command("figure", "curve data for a figure")
    sub.add_argument("--figure", type=int, choices=(1, 2), required=True)
    sub.add_argument("--spline", help="spline JSON (default: out_dir/spline_<tag>.json)")

    sub = command("mc-check", "cross-check quadrature against Monte Carlo")
    sub.add_argument("--spline", help="spline JSON (default: out_dir/spline_<tag>.json)")
    sub.add_argument("--theta", type=float, nargs="+", help="theta values (default: 0 0.5 2)")

    sub = command("mse", "scaled mean squared error of the SCAD point estimator")
    sub.add_argument("--theta", type=float, nargs="+", help="theta values (default: scan grid)")
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments, run one subcommand and return the exit status"""
    args = build_parser().parse_args(argv)
    overrides = {name: getattr(args, name) for name in FLAG_TYPES}

    try:
        config = load_run_config(args.config, overrides)
        pipeline = IntervalPipeline(config)
        if args.command == "eval":
            pipeline.run_eval(args.spline, args.theta)
        elif args.command == "optimize":
            pipeline.run_optimize()
        elif args.command == "table":
            frame = pipeline.run_table(args.table)
            if (frame["status"] != "ok").any():
                logger.error("Some table cells failed")
                return EXIT_FAILURE
        elif args.command == "figure":
            pipeline.run_figure(args.figure, args.spline)
        elif args.command == "mc-check":
            pipeline.run_mc_check(args.spline, args.theta)
        elif args.command == "mse":
            pipeline.run_mse(args.theta)
        return EXIT_OK

    except (ConfigValidationError, DomainError) as e:
        logger.error(f"Invalid input: {str(e)}")
        return EXIT_VALIDATION
    except InfeasibleOptimizationError as e:
        logger.error(f"Optimization failed: {str(e)}; violations {e.violations}")
        return EXIT_INFEASIBLE
    except OracleDisagreementError as e:
        logger.error(f"Monte Carlo check failed: {str(e)}")
        return EXIT_DISAGREEMENT
    except Exception as e:
        logger.error(f"{args.command} failed: {str(e)}")
        return EXIT_FAILURE


def main():
    """Main execution function"""
    sys.exit(run())


if __name__ == "__main__":
    main()
