"""Figures from condest harness artifacts (CSV + summary JSON)."""

from .rates import FigureSpec, InputError, collect_series, fitted_slope, plot_rates

__version__ = "0.1.0"
