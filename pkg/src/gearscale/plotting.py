"""SVG figure helpers for scalograms and scale-selection maps.

Figures are built on a bare ``Figure`` (no pyplot state) and written with a
fixed hash salt and no date stamp, so identical data gives identical files.
"""

from __future__ import annotations

import matplotlib as mpl
from matplotlib.figure import Figure
import numpy as np

CMAP = "Blues"
FIGSIZE = (7.0, 3.6)

_rc = {
    "svg.hashsalt": "gearscale",
    "svg.fonttype": "none",
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.labelsize": 9,
}


def _heatmap(ax, values, scales, n_samples, fs_hz):
    t_end = n_samples / fs_hz if fs_hz else n_samples
    extent = (0.0, t_end, scales[0] - 0.5, scales[-1] + 0.5)
    im = ax.imshow(values, aspect="auto", origin="lower", extent=extent, cmap=CMAP, interpolation="nearest")
    ax.set_xlabel("time (s)" if fs_hz else "sample")
    ax.set_ylabel("scale")
    return im


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})
    return path


def scalogram_svg(path, scg, fs_hz=None, title=""):
    """Heatmap of ``|W(a, b)|`` over scale and time."""
    with mpl.rc_context(_rc):
        fig = Figure(figsize=FIGSIZE)
        ax = fig.add_subplot()
        im = _heatmap(ax, np.abs(scg.coefficients), scg.grid.scales, scg.signal_len, fs_hz)
        fig.colorbar(im, ax=ax, label="|W|")
        if title:
            ax.set_title(title)
        fig.tight_layout()
        return _save(fig, path)


def objective_map_svg(path, centers, values, scales, trace, n_samples, fs_hz=None, title=""):
    """Objective value per (scale, frame) with the winning scale overdrawn in white.

    ``values`` has one row per scale and one column per frame centre;
    columns outside the valid centre range are left blank.
    """
    full = np.full((len(scales), n_samples), np.nan)
    full[:, centers] = values
    with mpl.rc_context(_rc):
        fig = Figure(figsize=FIGSIZE)
        ax = fig.add_subplot()
        ax.set_facecolor("0.85")
        im = _heatmap(ax, full, scales, n_samples, fs_hz)
        fig.colorbar(im, ax=ax, label="objective")
        tx = trace.centers / fs_hz if fs_hz else trace.centers
        ax.plot(tx, trace.selected_scales, linestyle="none", marker=".", markersize=2.0, color="white")
        if title:
            ax.set_title(title)
        fig.tight_layout()
        return _save(fig, path)
