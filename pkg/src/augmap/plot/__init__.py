"""
Preview figures for augmap.
"""

from augmap.plot.topview import plot_topview, plot_costmap, plot_residuals

__all__ = [
    "plot_topview",
    "plot_costmap",
    "plot_residuals",
]
