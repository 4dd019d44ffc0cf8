"""Figure renderers for campaign summary CSVs.

This package never imports the simulator; it consumes only the documented
summary schema (config_hash, axis, axis_value, algo, metric, mean, stderr,
n, source) so the two components can evolve independently.
"""

from .families import FAMILIES
from .reader import SchemaError, SummaryRow, read_summary, series_for

__all__ = ["FAMILIES", "SchemaError", "SummaryRow", "read_summary", "series_for"]
