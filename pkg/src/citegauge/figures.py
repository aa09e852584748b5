"""Render plot-data JSON payloads to matplotlib figure files.

Every report path emits {"kind": "heatmap"|"bar"|"box", "rows", "cols",
"values"} JSON for arbitrary front ends; this module is the built-in one,
writing PNGs next to the delimited output.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402


def render_plot_data(plot: dict, out_path: str | Path, title: str | None = None) -> Path:
    """Write one plot-data payload to an image file and return its path."""
    kind = plot.get("kind")
    if kind == "heatmap":
        fig = _heatmap(plot)
    elif kind == "bar":
        fig = _bar(plot)
    elif kind == "box":
        fig = _box(plot)
    else:
        raise ValueError(f"unknown plot kind: {kind!r}")
    if title:
        fig.suptitle(title)
    out_path = Path(out_path)
    fig.savefig(out_path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return out_path


def _heatmap(plot: dict):
    values = np.asarray(plot["values"], dtype=float)
    rows, cols = plot["rows"], plot["cols"]
    fig, ax = plt.subplots(figsize=(1.1 * len(cols) + 2, 0.6 * len(rows) + 2))
    # signed values (residuals) get a diverging map centered at zero
    if values.size and values.min() < 0:
        limit = max(abs(values.min()), abs(values.max())) or 1.0
        image = ax.imshow(values, cmap="RdBu_r", vmin=-limit, vmax=limit)
    else:
        image = ax.imshow(values, cmap="viridis")
    ax.set_xticks(range(len(cols)), labels=cols, rotation=45, ha="right")
    ax.set_yticks(range(len(rows)), labels=rows)
    for i in range(len(rows)):
        for j in range(len(cols)):
            ax.text(j, i, f"{values[i, j]:.2f}", ha="center", va="center",
                    fontsize=8)
    fig.colorbar(image, ax=ax, shrink=0.8)
    fig.tight_layout()
    return fig


def _bar(plot: dict):
    values = np.asarray(plot["values"], dtype=float)
    rows, cols = plot["rows"], plot["cols"]
    fig, ax = plt.subplots(figsize=(max(6, 0.8 * len(rows) * max(1, len(cols))), 4))
    x = np.arange(len(rows))
    width = 0.8 / max(1, len(cols))
    for j, col in enumerate(cols):
        ax.bar(x + j * width, values[:, j], width, label=col)
    ax.set_xticks(x + 0.4 - width / 2, labels=rows, rotation=45, ha="right")
    if len(cols) > 1:
        ax.legend(fontsize=8)
    ax.set_ylabel("count")
    fig.tight_layout()
    return fig


def _box(plot: dict):
    rows = plot["rows"]
    fig, ax = plt.subplots(figsize=(max(6, 0.9 * len(rows)), 4))
    ax.boxplot(plot["values"], tick_labels=rows)
    ax.tick_params(axis="x", rotation=45)
    fig.tight_layout()
    return fig


def save_figures(plots: dict[str, dict], outdir: str | Path) -> list[Path]:
    """Render a named family of plot payloads into ``outdir``."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    return [render_plot_data(plot, outdir / f"{name}.png", title=name.replace("_", " "))
            for name, plot in plots.items()]
