"""Render simulator CSV tables into figures.

The renderer is display-only: it consumes the documented CSV schemas,
validates them by header, and draws. Five figure kinds are supported:

    timeseries  aggregates.csv       median-skill and strategy-share curves
    simplex     field_samples.csv    replicator field on the strategy simplex
                [+ trajectories.csv] with optional trajectory overlays
    strips      step_records.csv     per-group stacked strategy shares
    heatmap     summary.csv          final median skill over two swept axes
    threshold   summary.csv          dominance fractions over the in-group rate

Barycentric compositions project onto a fixed equilateral triangle with
vertices ordered NoAI, Complement, Substitute.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

KINDS = ("timeseries", "simplex", "strips", "heatmap", "threshold")

STRATEGY_COLORS = {"noai": "#888888", "complement": "#e07b39", "substitute": "#2a7f62"}
STRATEGY_LABELS = ("noai", "complement", "substitute")

# equilateral triangle, vertex order fixed by strategy serialization order
_TRIANGLE = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3.0) / 2.0]])


class RenderError(ValueError):
    """Input does not match the expected schema or is empty."""


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    inputs: tuple[str, ...]
    output: str
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    dpi: int = 150

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise RenderError(f"unknown figure kind {self.kind!r}; expected one of {KINDS}")
        if not self.inputs:
            raise RenderError("at least one input CSV is required")


@dataclass
class Table:
    path: str
    columns: list[str]
    rows: list[list[str]]

    def floats(self, column: str) -> np.ndarray:
        idx = self.columns.index(column)
        return np.array([float(row[idx]) for row in self.rows])

    def strings(self, column: str) -> list[str]:
        idx = self.columns.index(column)
        return [row[idx] for row in self.rows]


def read_table(path: str | Path, required: tuple[str, ...]) -> Table:
    path = Path(path)
    if not path.exists():
        raise RenderError(f"input not found: {path}")
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            columns = next(reader)
        except StopIteration:
            raise RenderError(f"{path}: no header row") from None
        rows = [row for row in reader if row]
    missing = [c for c in required if c not in columns]
    if missing:
        raise RenderError(f"{path}: missing required columns {missing}")
    if not rows:
        raise RenderError(f"{path}: empty input (header only)")
    return Table(str(path), columns, rows)


def _coord_columns(table: Table, before: str) -> list[str]:
    return table.columns[: table.columns.index(before)]


def _group_rows(table: Table, keys: list[str]) -> dict[tuple, list[int]]:
    indices = [table.columns.index(k) for k in keys]
    groups: dict[tuple, list[int]] = {}
    for i, row in enumerate(table.rows):
        groups.setdefault(tuple(row[j] for j in indices), []).append(i)
    return groups


def _to_xy(comp: np.ndarray) -> np.ndarray:
    return comp @ _TRIANGLE


def _render_timeseries(spec: FigureSpec, axes) -> None:
    table = read_table(
        spec.inputs[0],
        ("step", "median_of_medians", "se",
         "share_noai", "share_complement", "share_substitute"),
    )
    coords = _coord_columns(table, "step")
    groups = _group_rows(table, coords) if coords else {(): list(range(len(table.rows)))}
    step = table.floats("step")
    median = table.floats("median_of_medians")
    shares = {s: table.floats(f"share_{s}") for s in STRATEGY_LABELS}
    top, bottom = axes
    for key, idx in sorted(groups.items()):
        label = "/".join(key) if key else "run"
        order = np.argsort(step[idx], kind="stable")
        sel = np.array(idx)[order]
        top.plot(step[sel], median[sel], label=label, linewidth=1.4)
        adoption = shares["complement"][sel] + shares["substitute"][sel]
        bottom.plot(step[sel], adoption, label=label, linewidth=1.2)
    top.set_ylabel(spec.ylabel or "median skill")
    top.legend(fontsize=8)
    bottom.set_ylabel("AI adoption share")
    bottom.set_xlabel(spec.xlabel or "generation")
    bottom.set_ylim(-0.02, 1.02)


def _render_simplex(spec: FigureSpec, ax) -> None:
    table = read_table(
        spec.inputs[0],
        ("x0", "xc", "xs", "dx0", "dxc", "dxs", "speed", "confidence_flag"),
    )
    comp = np.stack([table.floats("x0"), table.floats("xc"), table.floats("xs")], axis=1)
    vel = np.stack([table.floats("dx0"), table.floats("dxc"), table.floats("dxs")], axis=1)
    speed = table.floats("speed")
    xy = _to_xy(comp)
    dxy = vel @ _TRIANGLE
    span = speed.max() - speed.min()
    norm = (speed - speed.min()) / (span if span > 0 else 1.0)
    ax.scatter(xy[:, 0], xy[:, 1], c=norm, cmap="viridis", s=18, zorder=1)
    moving = speed > 0
    if moving.any():
        ax.quiver(
            xy[moving, 0], xy[moving, 1], dxy[moving, 0], dxy[moving, 1],
            angles="xy", width=0.0035, color="#333333", zorder=2,
        )
    for extra in spec.inputs[1:]:
        traj = read_table(extra, ("traj_id", "t", "x0", "xc", "xs"))
        tcomp = np.stack(
            [traj.floats("x0"), traj.floats("xc"), traj.floats("xs")], axis=1
        )
        txy = _to_xy(tcomp)
        ids = traj.floats("traj_id")
        for traj_id in np.unique(ids):
            sel = ids == traj_id
            ax.plot(txy[sel, 0], txy[sel, 1], color="#c0392b", linewidth=1.1, zorder=3)
    outline = np.vstack([_TRIANGLE, _TRIANGLE[0]])
    ax.plot(outline[:, 0], outline[:, 1], color="black", linewidth=1.0, zorder=4)
    offsets = ((-0.03, -0.04), (0.03, -0.04), (0.0, 0.035))
    for label, (vx, vy), (ox, oy) in zip(STRATEGY_LABELS, _TRIANGLE, offsets):
        ax.annotate(label, (vx, vy), (vx + ox, vy + oy), ha="center", fontsize=9)
    ax.set_aspect("equal")
    ax.axis("off")


def _render_strips(spec: FigureSpec, fig) -> None:
    table = read_table(
        spec.inputs[0],
        ("step", "scope", "median_skill", "share_noai",
         "share_complement", "share_substitute"),
    )
    scopes = [s for s in dict.fromkeys(table.strings("scope")) if s.startswith("group_")]
    if not scopes:
        scopes = list(dict.fromkeys(table.strings("scope")))
    step = table.floats("step")
    shares = {s: table.floats(f"share_{s}") for s in STRATEGY_LABELS}
    scope_col = table.strings("scope")
    axes = fig.subplots(len(scopes), 1, squeeze=False)[:, 0]
    for ax, scope in zip(axes, scopes):
        sel = np.array([i for i, s in enumerate(scope_col) if s == scope])
        order = np.argsort(step[sel], kind="stable")
        sel = sel[order]
        ax.stackplot(
            step[sel],
            [shares[s][sel] for s in STRATEGY_LABELS],
            labels=STRATEGY_LABELS,
            colors=[STRATEGY_COLORS[s] for s in STRATEGY_LABELS],
        )
        ax.set_ylim(0, 1)
        ax.set_ylabel(scope, fontsize=8)
    axes[0].legend(fontsize=7, ncol=3, loc="upper right")
    axes[-1].set_xlabel(spec.xlabel or "generation")


def _render_heatmap(spec: FigureSpec, ax, fig) -> None:
    table = read_table(spec.inputs[0], ("label", "final_median_of_medians"))
    coords = _coord_columns(table, "label")
    if len(coords) < 2:
        raise RenderError("heatmap needs a summary table with two sweep coordinates")
    xs = table.floats(coords[0])
    ys = table.floats(coords[1])
    z = table.floats("final_median_of_medians")
    x_vals, y_vals = np.unique(xs), np.unique(ys)
    grid = np.full((len(y_vals), len(x_vals)), np.nan)
    for x, y, value in zip(xs, ys, z):
        grid[np.searchsorted(y_vals, y), np.searchsorted(x_vals, x)] = value
    mesh = ax.pcolormesh(x_vals, y_vals, grid, shading="nearest", cmap="magma")
    fig.colorbar(mesh, ax=ax, label="final median skill")
    ax.set_xlabel(spec.xlabel or coords[0])
    ax.set_ylabel(spec.ylabel or coords[1])


def _render_threshold(spec: FigureSpec, ax) -> None:
    table = read_table(
        spec.inputs[0],
        ("label", "frac_dominant_noai", "frac_dominant_complement",
         "frac_dominant_substitute"),
    )
    coords = _coord_columns(table, "label")
    if not coords:
        raise RenderError("threshold needs a summary table with a swept rate column")
    rate = table.floats(coords[0])
    order = np.argsort(rate)
    for s in STRATEGY_LABELS:
        ax.plot(
            rate[order], table.floats(f"frac_dominant_{s}")[order],
            marker="o", label=s, color=STRATEGY_COLORS[s],
        )
    ax.axhline(0.5, color="black", linewidth=0.8, linestyle="--")
    ax.set_xlabel(spec.xlabel or coords[0])
    ax.set_ylabel(spec.ylabel or "dominance fraction")
    ax.set_ylim(-0.02, 1.02)
    ax.legend(fontsize=8)


def render(spec: FigureSpec) -> Path:
    """Render the figure and write the image file; returns the path."""
    if spec.kind == "timeseries":
        fig, axes = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
        _render_timeseries(spec, axes)
    elif spec.kind == "simplex":
        fig, ax = plt.subplots(figsize=(6.5, 6))
        _render_simplex(spec, ax)
    elif spec.kind == "strips":
        fig = plt.figure(figsize=(7, 5))
        _render_strips(spec, fig)
    elif spec.kind == "heatmap":
        fig, ax = plt.subplots(figsize=(6.5, 5))
        _render_heatmap(spec, ax, fig)
    else:
        fig, ax = plt.subplots(figsize=(6.5, 4.5))
        _render_threshold(spec, ax)
    if spec.title:
        fig.suptitle(spec.title)
    out = Path(spec.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    try:
        fig.tight_layout()
        fig.savefig(out, dpi=spec.dpi)
    finally:
        plt.close(fig)
    return out
