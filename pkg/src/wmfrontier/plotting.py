"""Static figure rendering and plot-ready data export.

Figures are batch artifacts (scatter of operating points, optional fitted
or predicted curves) written to SVG/PNG next to the delimited output; no
interactive display.
"""

from __future__ import annotations

import csv
import io
from typing import List, Optional, Sequence, Tuple

import numpy as np

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .analysis import Point2D, TanhCurve
from .harness import SweepRow

PLOT_CSV_HEADER = ["x", "y", "series"]


def tradeoff_series(
    rows: Sequence[SweepRow],
    fit: Optional[TanhCurve] = None,
    predicted: Optional[Sequence[Point2D]] = None,
) -> List[Tuple[float, float, str]]:
    """(x, y, series) records: one series per green fraction, plus curves."""
    records = []
    for r in sorted(rows, key=lambda r: (r.point.g, r.point.delta, r.seed)):
        records.append((r.f05, r.s_q, f"g={r.point.g:g}"))
    if fit is not None:
        xs = np.linspace(0.0, 1.0, 128)
        for x, y in zip(xs, fit(xs)):
            records.append((float(x), float(y), "tanh_fit"))
    if predicted is not None:
        for p in predicted:
            records.append((p.x, p.y, "predicted"))
    return records


def series_to_csv(records: Sequence[Tuple[float, float, str]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PLOT_CSV_HEADER)
    for x, y, series in records:
        w.writerow([f"{x:.10g}", f"{y:.10g}", series])
    return buf.getvalue()


def render_tradeoff(
    rows: Sequence[SweepRow],
    path,
    fit: Optional[TanhCurve] = None,
    predicted: Optional[Sequence[Point2D]] = None,
    title: str = "Quality vs detectability",
) -> None:
    """Scatter of (F0.5, s_q) per operating point with optional curves."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    gs = sorted({r.point.g for r in rows})
    cmap = plt.get_cmap("viridis")
    for i, g in enumerate(gs):
        pts = [r for r in rows if r.point.g == g]
        ax.scatter(
            [r.f05 for r in pts], [r.s_q for r in pts],
            s=18, color=cmap(i / max(len(gs) - 1, 1)), label=f"g={g:g}",
        )
    if fit is not None:
        xs = np.linspace(0.0, 1.0, 256)
        ax.plot(xs, fit(xs), "k-", lw=1.2, label="tanh fit")
    if predicted is not None:
        ax.plot([p.x for p in predicted], [p.y for p in predicted],
                "r--", lw=1.2, label="predicted")
    ax.set_xlabel("detectability (max F0.5)")
    ax.set_ylabel("quality (pairwise preference)")
    ax.set_title(title)
    if len(gs) <= 12:
        ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def render_length_heatmap(rows: Sequence[SweepRow], path) -> None:
    """Mean watermarked output length per (g, delta) cell."""
    gs = sorted({r.point.g for r in rows})
    ds = sorted({r.point.delta for r in rows})
    grid = np.full((len(ds), len(gs)), np.nan)
    for r in rows:
        grid[ds.index(r.point.delta), gs.index(r.point.g)] = r.mean_len
    fig, ax = plt.subplots(figsize=(6, 4))
    im = ax.imshow(grid, origin="lower", aspect="auto", cmap="magma")
    ax.set_xticks(range(len(gs)), [f"{g:g}" for g in gs], fontsize=7)
    ax.set_yticks(range(len(ds)), [f"{d:g}" for d in ds], fontsize=7)
    ax.set_xlabel("green fraction g")
    ax.set_ylabel("bias delta")
    ax.set_title("mean output length (tokens)")
    fig.colorbar(im, ax=ax)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
