"""Figures written next to the CSV outputs (Agg backend, files only)."""
from __future__ import annotations

from os import PathLike
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .experiments import ErrorRecord  # noqa: E402
from .grid import GridField  # noqa: E402

__all__ = ["plot_errors", "plot_pathwise", "plot_surface"]


def _reference_line(ax, x, y0, rate, label):
    x = np.asarray(x, dtype=float)
    ax.loglog(x, y0 * (x / x[0]) ** rate, "k--", lw=0.8, label=label)


def plot_errors(
    tables: Mapping[str, Sequence[ErrorRecord]],
    path: str | PathLike,
    xlabel: str,
    rates: Sequence[float] = (),
) -> None:
    """Strong errors of every table against resolution on log-log axes."""
    fig, ax = plt.subplots(figsize=(5, 4))
    for name, recs in tables.items():
        x = [r.resolution for r in recs]
        for metric, mk in (("err_pos", "o"), ("err_vel", "s"), ("err_state", "^")):
            y = np.array([getattr(r, metric) for r in recs])
            ok = y > 0
            if ok.any():
                ax.loglog(np.asarray(x)[ok], y[ok], marker=mk, label=f"{name} {metric[4:]}")
    first = next(iter(tables.values()), [])
    pos = [r for r in first if r.err_state > 0]
    for rate in rates:
        if pos:
            _reference_line(ax, [r.resolution for r in pos], pos[0].err_state, rate, f"slope {rate:g}")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("error")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_pathwise(tables: Mapping[str, Sequence[ErrorRecord]], path: str | PathLike, xlabel: str) -> None:
    """Per-sample pathwise errors as faint lines with their maximum on top."""
    fig, ax = plt.subplots(figsize=(5, 4))
    for name, recs in tables.items():
        x = np.array([r.resolution for r in recs], dtype=float)
        paths = np.array([r.err_path for r in recs])
        for col in paths.T:
            ok = col > 0
            ax.loglog(x[ok], col[ok], color="0.7", lw=0.5)
        mx = np.array([r.err_path_max for r in recs])
        ok = mx > 0
        ax.loglog(x[ok], mx[ok], "o-", label=f"{name} max")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("pathwise error")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_surface(field: GridField, path: str | PathLike, title: str = "") -> None:
    """Field drawn on the sphere with values as colour."""
    g = field.grid
    th, ph = np.meshgrid(g.theta, np.append(g.phi, 2 * np.pi), indexing="ij")
    vals = np.concatenate([field.values, field.values[:, :1]], axis=1)
    x, y, z = np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)
    span = float(np.max(np.abs(vals))) or 1.0
    colours = plt.cm.coolwarm((vals / span + 1.0) / 2.0)
    fig = plt.figure(figsize=(5, 5))
    ax = fig.add_subplot(projection="3d")
    ax.plot_surface(x, y, z, facecolors=colours, rstride=1, cstride=1, linewidth=0, antialiased=False, shade=False)
    ax.set_box_aspect((1, 1, 1))
    ax.set_axis_off()
    if title:
        ax.set_title(title)
    fig.savefig(path, dpi=100)
    plt.close(fig)
