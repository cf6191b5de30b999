"""
Reporting Package
Provides CSV/JSON writers, table reproduction and figure data
"""

from .writers import ResultWriter, read_csv, read_schema
from .tables import REFERENCES, CellOutcome, comparison_frame, format_layout, table_cells
from .figures import figure_frame, half_width_frame, performance_frame

__all__ = ['ResultWriter', 'read_csv', 'read_schema', 'REFERENCES', 'CellOutcome',
           'comparison_frame', 'format_layout', 'table_cells', 'figure_frame',
           'half_width_frame', 'performance_frame']
