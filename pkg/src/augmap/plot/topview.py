"""
Top-down preview figures.

Quick matplotlib views of the pipeline outputs: the augmented scene
colored by provenance, an occupancy grid in world coordinates, and the ICP
residual history of an alignment.
"""

from typing import Optional, Sequence, Tuple

import matplotlib
import matplotlib.pyplot as plt
from matplotlib.axes import Axes
from matplotlib.colors import ListedColormap
from matplotlib.lines import Line2D
import numpy as np

from augmap.cloud.core import PointCloud
from augmap.config.rcparams import resolve_param
from augmap.costmap.grid import OCCUPIED, UNKNOWN, OccupancyGrid
from augmap.registration.align import Alignment


def _figure(ax: Optional[Axes], figsize) -> Tuple[plt.Figure, Axes]:
    if ax is None:
        return plt.subplots(figsize=figsize)
    return ax.get_figure(), ax


def plot_topview(
    cloud: PointCloud,
    provenance: Optional[np.ndarray] = None,
    model_ids: Sequence[str] = (),
    point_size: Optional[float] = None,
    original_color: Optional[str] = None,
    palette: Optional[str] = None,
    figsize: Optional[Tuple[float, float]] = None,
    ax: Optional[Axes] = None,
    title: str = "",
    legend: bool = True,
) -> Tuple[plt.Figure, Axes]:
    """
    Scatter the xy coordinates of a cloud.

    Parameters
    ----------
    cloud : PointCloud
        Points to draw.
    provenance : ndarray, optional
        Per-point tag: 0 for original scene points, k for the k-th placed
        model. Without it every point gets ``original_color``.
    model_ids : sequence of str, optional
        Legend names of the placed models.
    point_size : float, optional
        Marker size. Defaults to ``rcParams["plot.point_size"]``.
    original_color : str, optional
        Color of original scene points.
    palette : str, optional
        Matplotlib colormap cycling over placed models.
    figsize : tuple, optional
        Figure size when ``ax`` is None.
    ax : Axes, optional
        Axes to draw on.
    title : str, default=""
        Axes title.
    legend : bool, default=True
        Draw a legend when models are present.

    Returns
    -------
    fig : Figure
    ax : Axes

    Examples
    --------
    >>> fig, ax = plot_topview(scene.cloud, scene.provenance, scene.model_ids)  # doctest: +SKIP
    """
    point_size = resolve_param("plot.point_size", point_size)
    original_color = resolve_param("plot.original_color", original_color)
    palette = resolve_param("plot.palette", palette)
    figsize = resolve_param("plot.figsize", figsize)
    fig, ax = _figure(ax, figsize)

    points = cloud.points
    tags = np.zeros(len(points), dtype=np.int64) if provenance is None else np.asarray(provenance, dtype=np.int64)
    cmap = matplotlib.colormaps[palette]

    original = tags == 0
    ax.scatter(points[original, 0], points[original, 1], s=point_size, c=original_color, linewidths=0)
    handles = []
    for k in np.unique(tags[~original]):
        color = cmap((int(k) - 1) % cmap.N)
        mask = tags == k
        ax.scatter(points[mask, 0], points[mask, 1], s=point_size, color=color, linewidths=0)
        name = model_ids[k - 1] if k - 1 < len(model_ids) else f"object {k}"
        handles.append(Line2D([], [], marker="o", linestyle="", color=color, label=name))

    ax.set_aspect("equal")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    if title:
        ax.set_title(title)
    if legend and handles:
        ax.legend(handles=handles, frameon=False, fontsize="small", loc="best")
    return fig, ax


def plot_costmap(
    grid: OccupancyGrid,
    free_color: Optional[str] = None,
    occupied_color: Optional[str] = None,
    unknown_color: Optional[str] = None,
    figsize: Optional[Tuple[float, float]] = None,
    ax: Optional[Axes] = None,
    title: str = "",
) -> Tuple[plt.Figure, Axes]:
    """
    Draw an occupancy grid in world coordinates.

    Returns
    -------
    fig : Figure
    ax : Axes
    """
    free_color = resolve_param("plot.free_color", free_color)
    occupied_color = resolve_param("plot.occupied_color", occupied_color)
    unknown_color = resolve_param("plot.unknown_color", unknown_color)
    figsize = resolve_param("plot.figsize", figsize)
    fig, ax = _figure(ax, figsize)

    index = np.zeros(grid.cells.shape, dtype=np.int64)
    index[grid.cells == OCCUPIED] = 1
    index[grid.cells == UNKNOWN] = 2
    cmap = ListedColormap([free_color, occupied_color, unknown_color])
    extent = grid.extent()
    ax.imshow(
        index, cmap=cmap, vmin=0, vmax=2, origin="lower",
        extent=extent, interpolation="nearest",
    )
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    if title:
        ax.set_title(title)
    return fig, ax


def plot_residuals(
    alignment: Alignment,
    figsize: Optional[Tuple[float, float]] = None,
    ax: Optional[Axes] = None,
    title: str = "",
) -> Tuple[plt.Figure, Axes]:
    """
    ICP residual per iteration (iteration 0 is the coarse alignment).
    """
    figsize = resolve_param("plot.figsize", figsize)
    fig, ax = _figure(ax, figsize)
    history = np.asarray(alignment.residual_history, dtype=np.float64)
    ax.plot(np.arange(len(history)), history, marker="o", markersize=3)
    ax.set_xlabel("iteration")
    ax.set_ylabel("model distance [m]")
    if title:
        ax.set_title(title)
    return fig, ax
