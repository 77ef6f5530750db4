"""Paper-style figures from onebit-mubf experiment CSVs.

The plotting layer is intentionally dumb: it reads the CSV contract of each
figure and draws, never recomputing any of the underlying math, and its
output is a pure function of the CSV bytes so images diff cleanly.
"""

__version__ = "0.1.0"

from .render import FIGURES, FigureSpec, SchemaMismatch, build_figure, render

__all__ = ["FIGURES", "FigureSpec", "SchemaMismatch", "build_figure", "render"]
