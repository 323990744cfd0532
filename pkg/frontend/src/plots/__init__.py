"""File-based figure rendering for quantum-walk scan and accumulation CSVs."""

from .figures import KINDS, FigureSpec, SchemaError, load_table, render

__all__ = ["KINDS", "FigureSpec", "SchemaError", "load_table", "render"]

__version__ = "0.1.0"
