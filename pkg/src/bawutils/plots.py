"""Best-effort SVG previews of the CSV outputs. Needs the ``plots`` extra (matplotlib)."""
import io
import logging
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence, Union

import numpy as np

from bawutils.output import write_atomic

_LOGGER = logging.getLogger(__name__)

SVG_METADATA = {"Date": None, "Creator": "bawutils"}


def _pyplot() -> Any:
    try:
        import matplotlib  # pylint:disable=import-outside-toplevel

        matplotlib.use("Agg")
        from matplotlib import pyplot  # pylint:disable=import-outside-toplevel
    except ImportError:
        return None
    # fixed element ids so reruns produce identical files
    matplotlib.rcParams["svg.hashsalt"] = "bawutils"
    return pyplot


def _save(plt: Any, fig: Any, path: Union[str, Path]) -> Path:
    buffer = io.StringIO()
    try:
        fig.savefig(buffer, format="svg", metadata=SVG_METADATA)
    finally:
        plt.close(fig)
    return write_atomic(path, buffer.getvalue())


def plot_curves(
    path: Union[str, Path],
    x: Sequence[float],
    series: Mapping[str, Sequence[float]],
    xlabel: str,
    ylabel: str,
    log_y: bool = False,
) -> Optional[Path]:
    """Line plot of every series against ``x``; returns None without matplotlib"""
    plt = _pyplot()
    if plt is None:
        _LOGGER.warning(f"matplotlib is not installed, skipping {path}")
        return None
    fig, axes = plt.subplots(figsize=(7.0, 4.5))
    for label, values in series.items():
        axes.plot(np.asarray(x), np.asarray(values), label=label, linewidth=1.0)
    axes.set_xlabel(xlabel)
    axes.set_ylabel(ylabel)
    if log_y:
        axes.set_yscale("log")
    if len(series) > 1:
        axes.legend()
    axes.grid(True, linewidth=0.3)
    return _save(plt, fig, path)


def plot_points(
    path: Union[str, Path], groups: Mapping[str, Sequence[Sequence[float]]], xlabel: str, ylabel: str
) -> Optional[Path]:
    """Scatter plot, one marker series per group of (x, y) pairs"""
    plt = _pyplot()
    if plt is None:
        _LOGGER.warning(f"matplotlib is not installed, skipping {path}")
        return None
    fig, axes = plt.subplots(figsize=(7.0, 4.5))
    for label, points in groups.items():
        data = np.asarray(points, dtype=float).reshape(-1, 2)
        axes.plot(data[:, 0], data[:, 1], ".", markersize=2.0, label=label)
    axes.set_xlabel(xlabel)
    axes.set_ylabel(ylabel)
    axes.legend(fontsize="small", markerscale=4.0)
    axes.grid(True, linewidth=0.3)
    return _save(plt, fig, path)
