"""Figure suite over the fbmlab CSV/JSON output contracts."""

__version__ = "0.1.0"

from .figures import (
    FIGURE_KINDS,
    FigureSpec,
    PlotError,
    plot_decay,
    plot_gaps,
    plot_growth,
    plot_kcurve,
    render,
)
