"""Static SVG figures of two-dimensional instances.

Triangle points are drawn in the plane with corner e⁰ at the origin, e¹ at
(1, 0) and e² at (1/2, √3/2).
"""
import logging
from dataclasses import dataclass
from typing import Any, Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.patches import Polygon  # noqa: E402

from .errors import NotRenderable  # noqa: E402
from .oracles import (  # noqa: E402
    KkmInstance,
    QueryLedger,
    RkkmInstance,
    SpernerInstance,
    query_color,
    query_covering,
    query_kkm,
)
from .schemas import Solution  # noqa: E402
from .triangulation import (  # noqa: E402
    cell_vertices,
    iter_cells,
    iter_triangle_cells,
    iter_triangle_vertices,
    iter_vertices,
)
from .utils import config_value  # noqa: E402

logger = logging.getLogger(__name__)

FIGURE_SIZE = float(config_value("plot", "figure_size", 6))
SAMPLE_PITCH = int(config_value("plot", "sample_pitch", 40))
PALETTE = config_value("plot", "palette", ["#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd"])
UNCOVERED = "#bbbbbb"

_CORNERS = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, np.sqrt(3.0) / 2.0]])


@dataclass
class PlotSummary:
    kind: str
    vertices: int
    path: str
    panels: int = 1


def to_plane(points) -> np.ndarray:
    """Barycentric rows (any positive scale) to planar coordinates"""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    return (points / points.sum(axis=1, keepdims=True)) @ _CORNERS


def _color(index: int) -> str:
    return PALETTE[index % len(PALETTE)] if index >= 0 else UNCOVERED


def _triangle_axes(ax):
    ax.add_patch(Polygon(_CORNERS, closed=True, fill=False, edgecolor="black", linewidth=1.0))
    ax.set_aspect("equal")
    ax.set_axis_off()


def _lattice_points(pitch: int) -> np.ndarray:
    return np.array(list(iter_triangle_vertices(pitch)), dtype=float) / pitch


def _mark_solution(ax, point: Sequence[float]):
    xy = to_plane(point)
    ax.scatter(xy[:, 0], xy[:, 1], marker="*", s=220, color="black", zorder=5)


def plot_sperner_triangle(inst: SpernerInstance, path: str, solution: Optional[Solution] = None) -> PlotSummary:
    ledger = QueryLedger()
    vertices = list(iter_triangle_vertices(inst.N))
    fig, ax = plt.subplots(figsize=(FIGURE_SIZE, FIGURE_SIZE))
    _triangle_axes(ax)
    for cell in iter_triangle_cells(inst.N):
        ax.add_patch(Polygon(to_plane(cell), closed=True, fill=False, edgecolor="#888888", linewidth=0.5))
    if solution is not None and solution.cell:
        ax.add_patch(Polygon(to_plane(solution.cell), closed=True, facecolor="#ffe08a", edgecolor="black"))
    colors = [_color(query_color(inst, ledger, v)) for v in vertices]
    xy = to_plane(vertices)
    ax.scatter(xy[:, 0], xy[:, 1], c=colors, s=max(8.0, 400.0 / inst.N), zorder=3, edgecolors="black")
    ax.set_title(f"Sperner coloring, N={inst.N}")
    _save(fig, path)
    return PlotSummary(kind="sperner-triangle", vertices=len(vertices), path=path)


def _first_set(member, n: int) -> int:
    for j in range(n):
        if member(j):
            return j
    return -1


def plot_coverings(inst: Any, path: str, solution: Optional[Solution] = None,
                   pitch: int = SAMPLE_PITCH) -> PlotSummary:
    """Per-sample coloring by the first set containing the sample, one panel per covering"""
    ledger = QueryLedger()
    samples = _lattice_points(pitch)
    if isinstance(inst, KkmInstance):
        panels = [lambda x, j: query_kkm(inst, ledger, inst.N * x, j)]
        kind = "kkm"
    else:
        panels = [
            (lambda i: lambda x, j: query_covering(inst, ledger, i, x, j))(i) for i in range(inst.n)
        ]
        kind = "rkkm"

    fig, axes = plt.subplots(1, len(panels), figsize=(FIGURE_SIZE * len(panels), FIGURE_SIZE), squeeze=False)
    xy = to_plane(samples)
    for i, (ax, member) in enumerate(zip(axes[0], panels)):
        _triangle_axes(ax)
        colors = [_color(_first_set(lambda j: member(x, j), 3)) for x in samples]
        ax.scatter(xy[:, 0], xy[:, 1], c=colors, s=6, zorder=2)
        if solution is not None and solution.point:
            _mark_solution(ax, solution.point)
        ax.set_title(f"covering {i}" if kind == "rkkm" else f"covering of N={inst.N} triangle")
    _save(fig, path)
    return PlotSummary(kind=kind, vertices=len(samples) * len(panels), path=path, panels=len(panels))


def plot_sperner_cube(inst: SpernerInstance, path: str, solution: Optional[Solution] = None) -> PlotSummary:
    ledger = QueryLedger()
    d, N = inst.d, inst.N
    vertices = list(iter_vertices(d, N))
    coords = np.array(vertices, dtype=float)
    if d == 1:
        coords = np.hstack([coords, np.zeros((len(vertices), 1))])
    fig, ax = plt.subplots(figsize=(FIGURE_SIZE, FIGURE_SIZE if d == 2 else FIGURE_SIZE / 3))
    if d == 2:
        for cell in iter_cells(d, N):
            ax.add_patch(Polygon(cell_vertices(cell), closed=True, fill=False, edgecolor="#888888", linewidth=0.5))
    else:
        ax.plot([0, N], [0, 0], color="#888888", linewidth=0.5)
    if solution is not None and solution.cell:
        cell = np.array(solution.cell, dtype=float)
        if d == 1:
            ax.plot(cell[:, 0], [0.0] * len(cell), color="black", linewidth=4)
        else:
            ax.add_patch(Polygon(cell, closed=True, facecolor="#ffe08a", edgecolor="black"))
    colors = [_color(query_color(inst, ledger, v)) for v in vertices]
    ax.scatter(coords[:, 0], coords[:, 1], c=colors, s=max(8.0, 400.0 / N), zorder=3, edgecolors="black")
    ax.set_aspect("equal")
    ax.set_title(f"cube coloring, d={d}, N={N}")
    _save(fig, path)
    return PlotSummary(kind="sperner-cube", vertices=len(vertices), path=path)


def _save(fig, path: str):
    fig.savefig(path, format="svg", bbox_inches="tight")
    plt.close(fig)
    logger.info(f"Wrote figure to {path}")


def render(inst: Any, path: str, solution: Optional[Solution] = None) -> PlotSummary:
    """Draw the instance if it has a planar picture, else raise NotRenderable"""
    if isinstance(inst, SpernerInstance):
        if inst.variant == "triangle":
            return plot_sperner_triangle(inst, path, solution)
        if inst.d <= 2:
            return plot_sperner_cube(inst, path, solution)
        raise NotRenderable(f"cube colorings with d={inst.d} have no planar picture")
    if isinstance(inst, KkmInstance) or (isinstance(inst, RkkmInstance) and inst.n == 3):
        return plot_coverings(inst, path, solution)
    n = getattr(inst, "n", getattr(inst, "d", None))
    raise NotRenderable(f"{type(inst).__name__} with {n} agents has no planar picture")
