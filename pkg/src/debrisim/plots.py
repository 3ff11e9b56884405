"""Static SVG figure emission for scenario reports.

Figures are rendered through matplotlib's SVG backend with a pinned hash
salt and no date metadata, so identical inputs produce byte-identical
files. Data artists carry ``series-<i>`` / ``bar-<i>-<j>`` group ids for
content checks.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib
import numpy as np
from matplotlib.figure import Figure

_SVG_RC = {"svg.hashsalt": "debrisim", "svg.fonttype": "path"}

STYLES = ("line", "step", "cdf", "histogram")


def emit_plot(series, style: str, path: str | Path, *, title: str = "",
              xlabel: str = "", ylabel: str = "", bins=None) -> Path:
    """Render labeled series to a self-contained SVG file.

    ``series`` is a list of (label, x, y) triples; for the histogram
    style, (label, values) pairs with ``bins`` forwarded to numpy.
    """
    if style not in STYLES:
        raise ValueError(f"unknown plot style {style!r}")
    if not series:
        raise ValueError("emit_plot: empty series")
    fig = Figure(figsize=(7.0, 4.0), dpi=100)
    ax = fig.add_subplot(111)
    labeled = False
    for i, item in enumerate(series):
        if style == "histogram":
            label, values = item
            values = np.asarray(values, dtype=float)
            if values.size == 0:
                raise ValueError("emit_plot: empty series")
            counts, edges = np.histogram(values, bins=bins if bins is not None else 20)
            bars = ax.bar(edges[:-1], counts, width=np.diff(edges),
                          align="edge", label=label or None,
                          edgecolor="black", linewidth=0.4)
            for j, patch in enumerate(bars.patches):
                patch.set_gid(f"bar-{i}-{j}")
            labeled = labeled or bool(label)
            continue
        label, x, y = item
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.size == 0 or x.size != y.size:
            raise ValueError("emit_plot: series must be non-empty and aligned")
        if style == "line":
            (ln,) = ax.plot(x, y, label=label or None)
        else:  # step, cdf
            (ln,) = ax.step(x, y, where="post", label=label or None)
        ln.set_gid(f"series-{i}")
        labeled = labeled or bool(label)
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    if labeled:
        ax.legend(loc="best")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with matplotlib.rc_context(_SVG_RC):
        fig.savefig(path, format="svg", metadata={"Date": None})
    return path
