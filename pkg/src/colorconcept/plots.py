"""Figure rendering for pipeline reports.

All figures are written to files (Agg backend); nothing opens a display.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .evaluation import EstimateMatrix, EvaluationReport  # noqa: E402
from .datasets import RatingsTable  # noqa: E402
from .modeling import CvCurve  # noqa: E402


def save_cv_curve_plot(curve: CvCurve, path: str | Path) -> Path:
    """Held-out MSE as a function of the number of active features."""
    ks = [k for k, _ in curve.entries]
    mses = [m for _, m in curve.entries]
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.plot(ks, mses, marker="o", ms=3.5, lw=1.2, color="#348ABD")
    ax.set_xlabel("number of features (nonzero weights)")
    ax.set_ylabel("mean held-out MSE")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_correlation_bars(report: EvaluationReport, path: str | Path) -> Path:
    """Per-concept correlation bars, sorted descending, plus the overall r."""
    stats = sorted(report.per_concept, key=lambda s: s.r, reverse=True)
    names = [s.concept for s in stats]
    rs = [s.r for s in stats]
    fig, ax = plt.subplots(figsize=(max(4.0, 0.55 * len(names) + 1.5), 3.2))
    ax.bar(range(len(names)), rs, color="#555555")
    ax.axhline(report.overall_r, color="#E24A33", lw=1.2,
               label=f"overall r = {report.overall_r:.2f}")
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=45, ha="right", fontsize=8)
    ax.set_ylabel("Pearson r")
    ax.set_ylim(min(0.0, min(rs) - 0.05), 1.0)
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_scatter_grid(estimates: EstimateMatrix, ratings: RatingsTable,
                      path: str | Path) -> Path:
    """Grid of per-concept scatters: human rating vs model estimate."""
    concepts = ratings.concepts
    order = [estimates.concepts.index(c) for c in concepts]
    ncols = min(4, len(concepts))
    nrows = math.ceil(len(concepts) / ncols)
    fig, axes = plt.subplots(nrows, ncols, figsize=(2.6 * ncols, 2.4 * nrows),
                             squeeze=False)
    for i, concept in enumerate(concepts):
        ax = axes[i // ncols][i % ncols]
        hum = ratings.values[i]
        est = estimates.values[order[i]]
        ax.scatter(hum, est, s=8, alpha=0.7, color="#348ABD", edgecolors="none")
        ax.set_title(concept, fontsize=8)
        ax.tick_params(labelsize=6)
    for j in range(len(concepts), nrows * ncols):
        axes[j // ncols][j % ncols].axis("off")
    fig.supxlabel("human rating", fontsize=9)
    fig.supylabel("model estimate", fontsize=9)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
