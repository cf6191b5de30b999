"""
Table reproduction
Cell layout, published reference values and the comparison frame for the two tables of
optimized half-width functions (m = 200 and m = 3)
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import pandas as pd

from ..utils.errors import DomainError

TABLE_ETAS = (0.5, 1.0, 2.0)
TABLE_QS = (4, 5, 6)
REFERENCE_TOLERANCE = 0.005

Cell = Tuple[float, int]


@dataclass(frozen=True)
class PublishedReference:
    """Published e(0; s*) and max e(theta; s*) per (eta, q) cell of one table"""

    table_id: int
    m: int
    sel_at_zero: Dict[Cell, float]
    max_sel: Dict[Cell, float]


def _cells(rows: Dict[float, Tuple[float, float, float]]) -> Dict[Cell, float]:
    return {(eta, q): value for eta, values in rows.items() for q, value in zip(TABLE_QS, values)}


REFERENCES = {
    1: PublishedReference(
        table_id=1, m=200,
        sel_at_zero=_cells({0.5: (1.1609, 1.1274, 1.1250),
                            1.0: (1.2940, 1.2826, 1.2825),
                            2.0: (1.2181, 1.2155, 1.2154)}),
        max_sel=_cells({0.5: (1.1609, 1.1274, 1.1250),
                        1.0: (1.3936, 1.3821, 1.3748),
                        2.0: (2.1045, 5.5869, 5.5272)}),
    ),
    2: PublishedReference(
        table_id=2, m=3,
        sel_at_zero=_cells({0.5: (1.0526, 1.0519, 1.0511),
                            1.0: (1.0977, 1.0966, 1.0950),
                            2.0: (1.0824, 1.0815, 1.0788)}),
        max_sel=_cells({0.5: (1.0759, 1.0782, 1.0796),
                        1.0: (1.3216, 1.3385, 1.3464),
                        2.0: (2.0858, 2.1650, 2.1193)}),
    ),
}


def reference(table_id: int) -> PublishedReference:
    if table_id not in REFERENCES:
        raise DomainError(f"table must be one of {sorted(REFERENCES)}, got {table_id}")
    return REFERENCES[table_id]


def table_cells(table_id: int) -> List[Cell]:
    """(eta, q) cells in row-major order of the published layout"""
    reference(table_id)
    return [(eta, q) for eta in TABLE_ETAS for q in TABLE_QS]


@dataclass(frozen=True)
class CellOutcome:
    eta: float
    q: int
    wall_time: float
    sel_at_zero: Optional[float] = None
    max_sel: Optional[float] = None
    argmax_theta: Optional[float] = None
    min_coverage: Optional[float] = None
    status: str = "ok"


def comparison_frame(table_id: int, outcomes: List[CellOutcome]) -> pd.DataFrame:
    """
    One row per cell with the reproduced and published values

    Failed cells keep their row with empty values and the failure in status.
    """
    ref = reference(table_id)
    rows = []
    for outcome in outcomes:
        cell = (outcome.eta, outcome.q)
        row = {"table": table_id, "m": ref.m, "eta": outcome.eta, "q": outcome.q,
               "sel_at_zero": outcome.sel_at_zero, "max_sel": outcome.max_sel,
               "argmax_theta": outcome.argmax_theta, "min_coverage": outcome.min_coverage,
               "ref_sel_at_zero": ref.sel_at_zero[cell], "ref_max_sel": ref.max_sel[cell]}
        if outcome.sel_at_zero is not None:
            row["diff_sel_at_zero"] = outcome.sel_at_zero - ref.sel_at_zero[cell]
            row["diff_max_sel"] = outcome.max_sel - ref.max_sel[cell]
            row["within_tolerance"] = abs(row["diff_sel_at_zero"]) <= REFERENCE_TOLERANCE
        else:
            row["diff_sel_at_zero"] = row["diff_max_sel"] = None
            row["within_tolerance"] = False
        row["status"] = outcome.status
        rows.append(row)
    return pd.DataFrame(rows)


def timings_frame(outcomes: List[CellOutcome]) -> pd.DataFrame:
    return pd.DataFrame([{"eta": o.eta, "q": o.q, "wall_time_s": o.wall_time, "status": o.status}
                         for o in outcomes])


def format_layout(frame: pd.DataFrame) -> str:
    """
    Text table in the published layout: for each eta, a row of e(0; s*) and a row of
    max e(theta; s*), with one column per knot count; failed cells print as 'failed'
    """
    lines = []
    header = f"{'eta':>5}  {'quantity':<16}" + "".join(f"{'q=' + str(q):>10}" for q in TABLE_QS)
    lines.append(header)
    lines.append("-" * len(header))
    for eta in TABLE_ETAS:
        block = frame[frame["eta"] == eta].set_index("q")
        for column, label in (("sel_at_zero", "e(0;s*)"), ("max_sel", "max e(theta;s*)")):
            cells = []
            for q in TABLE_QS:
                value = block[column].get(q) if q in block.index else None
                cells.append(f"{'failed':>10}" if value is None or pd.isna(value) else f"{value:>10.4f}")
            lines.append(f"{eta:>5g}  {label:<16}" + "".join(cells))
    return "\n".join(lines) + "\n"

