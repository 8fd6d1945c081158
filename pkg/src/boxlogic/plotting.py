"""Hasse diagram rendering with matplotlib (bottom to top)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .logic import LogicPoset, rank_levels  # noqa: E402


def hasse_layout(poset: LogicPoset) -> list[tuple[float, float]]:
    """Rank on the y axis, elements of each rank spread evenly in canonical order."""
    levels = rank_levels(poset)
    by_level: dict[int, list[int]] = {}
    for i, lv in enumerate(levels):
        by_level.setdefault(lv, []).append(i)
    pos = [(0.0, 0.0)] * len(poset)
    for lv, members in by_level.items():
        k = len(members)
        for slot, i in enumerate(members):
            pos[i] = ((slot + 0.5) / k, float(lv))
    return pos


def render_hasse(poset: LogicPoset, path, labels: bool = True, dpi: int = 120) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    pos = hasse_layout(poset)
    width = max(6.0, 0.35 * max(sum(1 for p in pos if p[1] == y) for _, y in pos))
    fig, ax = plt.subplots(figsize=(width, 8))
    for i, j in poset.covers:
        (x0, y0), (x1, y1) = pos[i], pos[j]
        ax.plot([x0, x1], [y0, y1], color="0.6", linewidth=0.4, zorder=1)
    xs, ys = zip(*pos)
    ax.scatter(xs, ys, s=8, color="black", zorder=2)
    if labels:
        for i, (x, y) in enumerate(pos):
            ax.annotate(poset.labels[i], (x, y), fontsize=3, ha="center", va="bottom",
                        xytext=(0, 2), textcoords="offset points")
    ax.set_axis_off()
    fig.tight_layout()
    fig.savefig(path, dpi=dpi, metadata={"Software": None})
    plt.close(fig)
