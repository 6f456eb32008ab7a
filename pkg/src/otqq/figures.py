"""Scatter figures for Q-Q and potential plot sets, rendered to SVG.

Rendering goes through matplotlib's SVG backend with a fixed hash salt and no
date metadata, so identical inputs produce byte-identical documents.
"""

from __future__ import annotations

import io

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .analysis import PlotSet  # noqa: E402

_HASHSALT = "otqq"


def render_svg(
    plot_set: PlotSet,
    extra_slope: float | None = None,
    title: str | None = None,
) -> str:
    """SVG scatter of the pairs with the diagonal reference line across the
    data range, and optionally a second line of the given slope through the
    origin."""
    pairs = plot_set.pairs
    if pairs.shape[0] == 0:
        raise ValueError("plot set is empty")
    lo = float(min(pairs[:, 0].min(), pairs[:, 1].min()))
    hi = float(max(pairs[:, 0].max(), pairs[:, 1].max()))
    if hi == lo:
        lo, hi = lo - 1.0, hi + 1.0
    pad = 0.05 * (hi - lo)
    lo -= pad
    hi += pad

    with plt.rc_context({"svg.hashsalt": _HASHSALT}):
        fig, ax = plt.subplots(figsize=(4.0, 4.0))
        try:
            ax.plot([lo, hi], [lo, hi], color="tab:blue", linewidth=1.0, zorder=1)
            if extra_slope is not None:
                ax.plot(
                    [lo, hi],
                    [extra_slope * lo, extra_slope * hi],
                    color="black",
                    linewidth=1.0,
                    zorder=1,
                )
            ax.scatter(pairs[:, 0], pairs[:, 1], s=8, color="tab:red", zorder=2)
            if isinstance(plot_set.component, str):
                ax.set_xlabel(f"{plot_set.component} of first sample")
                ax.set_ylabel(f"{plot_set.component} of second sample")
            else:
                ax.set_xlabel(f"component {plot_set.component + 1} of first sample")
                ax.set_ylabel(f"component {plot_set.component + 1} of second sample")
            ax.set_title(title if title is not None else f"{plot_set.label} [{plot_set.method}]")
            buf = io.StringIO()
            fig.savefig(buf, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)
    return buf.getvalue()
