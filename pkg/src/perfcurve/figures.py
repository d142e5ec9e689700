"""Matplotlib figure rendering for scaling-pattern reports.

SVG output is kept byte-reproducible: clip-path ids are derived from a
fixed hash salt and the creation date is omitted, so re-rendering the
same data yields identical files.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

SVG_HASH_SALT = "perfcurve"
CURVE_SAMPLES = 200


def _deterministic_rc():
    plt.rcParams["svg.hashsalt"] = SVG_HASH_SALT


def render_scaling_figure(points, curves, out_path, y_field="smap_value",
                          y_label="SMAP", title=None):
    """Scatter of disorder vs accuracy, one color per model, plus fitted curves.

    `points` are ScalingPoint records; `curves` maps model name to a
    FittedCurve (models without a curve are scattered only).
    """
    _deterministic_rc()
    models = sorted({p.model for p in points})
    cmap = plt.get_cmap("tab10")
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    for idx, model in enumerate(models):
        group = [p for p in points if p.model == model]
        xs = np.array([p.apce for p in group])
        ys = np.array([getattr(p, y_field) for p in group])
        color = cmap(idx % 10)
        ax.scatter(xs, ys, s=22, alpha=0.75, color=color, edgecolors="none",
                   label=model)
        curve = curves.get(model)
        if curve is not None:
            grid = np.linspace(xs.min(), xs.max(), CURVE_SAMPLES)
            ax.plot(grid, curve.value(grid), color=color, linewidth=1.5,
                    label=f"{model} fit ($R^2$={curve.r_squared:.3f})")
    ax.set_xlabel("APCE")
    ax.set_ylabel(y_label)
    if title:
        ax.set_title(title)
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return out_path
