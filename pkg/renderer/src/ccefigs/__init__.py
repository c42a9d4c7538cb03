"""Publication-style figures from ccesim CSV tables."""

from .render import FigureSpec, RenderError, render

__version__ = "0.1.0"

__all__ = ["FigureSpec", "RenderError", "render", "__version__"]
