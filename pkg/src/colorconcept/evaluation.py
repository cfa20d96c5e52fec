"""Comparing estimated association ratings against human ratings.

Reports Pearson correlations overall and per concept, per-concept sums of
squared error, and Fisher z tests for differences between independent
correlations.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import stats

from .datasets import ColorTable, RatingsTable


def pearson_r(xs, ys) -> tuple[float, float]:
    """Sample Pearson correlation with a two-tailed p via the t transform
    (n - 2 degrees of freedom)."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"inputs must be equal-length vectors: {x.shape} vs {y.shape}")
    n = x.shape[0]
    if n < 3:
        raise ValueError(f"correlation needs at least 3 points, got {n}")
    xd = x - x.mean()
    yd = y - y.mean()
    sx = float(xd @ xd)
    sy = float(yd @ yd)
    if sx == 0.0 or sy == 0.0:
        raise ValueError("zero variance input to correlation")
    r = float(xd @ yd) / math.sqrt(sx * sy)
    r = max(-1.0, min(1.0, r))
    if abs(r) == 1.0:
        return r, 0.0
    t = r * math.sqrt((n - 2) / (1.0 - r * r))
    p = 2.0 * float(stats.t.sf(abs(t), n - 2))
    return r, p


def fisher_z_independent(r1: float, n1: int, r2: float, n2: int) -> tuple[float, float]:
    """Two-sample z test for a difference between independent correlations:
    z = (atanh(r1) - atanh(r2)) / sqrt(1/(n1-3) + 1/(n2-3)), two-tailed p."""
    for r in (r1, r2):
        if not abs(r) < 1.0:
            raise ValueError(f"correlation must satisfy |r| < 1, got {r}")
    for n in (n1, n2):
        if n <= 3:
            raise ValueError(f"sample size must exceed 3, got {n}")
    se = math.sqrt(1.0 / (n1 - 3) + 1.0 / (n2 - 3))
    z = (math.atanh(r1) - math.atanh(r2)) / se
    p = 2.0 * float(stats.norm.sf(abs(z)))
    return z, p


@dataclass(frozen=True)
class ConceptStats:
    concept: str
    n: int
    r: float
    p: float
    sse: float


@dataclass(frozen=True)
class EvaluationReport:
    overall_r: float
    overall_p: float
    n: int
    per_concept: tuple[ConceptStats, ...]

    def to_csv_text(self) -> str:
        lines = ["concept,n,r,p,sse"]
        lines.append(f"overall,{self.n},{repr(self.overall_r)},{repr(self.overall_p)},")
        for s in self.per_concept:
            lines.append(f"{s.concept},{s.n},{repr(s.r)},{repr(s.p)},{repr(s.sse)}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        doc = {
            "overall": {"r": self.overall_r, "p": self.overall_p, "n": self.n},
            "per_concept": [
                {"concept": s.concept, "n": s.n, "r": s.r, "p": s.p, "sse": s.sse}
                for s in self.per_concept
            ],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


@dataclass(frozen=True)
class EstimateMatrix:
    """Concept-by-color estimates in the same layout as a ratings table,
    but without the [0, 1] bound (estimates are raw linear scores)."""

    concepts: tuple[str, ...]
    color_indices: tuple[int, ...]
    values: np.ndarray  # (n_concepts, n_colors)

    def __post_init__(self):
        if self.values.shape != (len(self.concepts), len(self.color_indices)):
            raise ValueError(f"estimate shape {self.values.shape} does not match "
                             f"{len(self.concepts)} x {len(self.color_indices)}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("estimates contain non-finite cells")

    def save(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["color_index", *self.concepts])
            for j, idx in enumerate(self.color_indices):
                writer.writerow([idx] + [repr(float(v)) for v in self.values[:, j]])


def estimate_matrix(concepts, colors: ColorTable, values) -> EstimateMatrix:
    return EstimateMatrix(concepts=tuple(concepts),
                          color_indices=tuple(e.index for e in colors.entries),
                          values=np.asarray(values, dtype=float))


def load_estimates(path: str | Path) -> EstimateMatrix:
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "color_index" or len(header) < 2:
            raise ValueError(f"{path}: not an estimates CSV (bad header)")
        concepts = tuple(h.strip() for h in header[1:])
        indices, rows = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(f"{path}:{lineno}: expected {len(header)} cells")
            indices.append(int(row[0]))
            rows.append([float(v) for v in row[1:]])
    values = np.array(rows).T
    return EstimateMatrix(concepts=concepts, color_indices=tuple(indices), values=values)


def evaluate_model(estimates: EstimateMatrix, ratings: RatingsTable) -> EvaluationReport:
    """Correlate estimates with ratings: one overall r across all cells plus
    per-concept r and sum of squared error.

    Concepts are aligned by name and must match exactly as sets; color
    counts must agree.
    """
    if set(estimates.concepts) != set(ratings.concepts):
        raise ValueError(
            f"concept sets differ: estimates {sorted(estimates.concepts)} "
            f"vs ratings {sorted(ratings.concepts)}")
    if len(estimates.color_indices) != len(ratings.colors):
        raise ValueError(
            f"color count mismatch: {len(estimates.color_indices)} estimates "
            f"vs {len(ratings.colors)} ratings")
    order = [estimates.concepts.index(c) for c in ratings.concepts]
    est = estimates.values[order, :]
    hum = ratings.values
    overall_r, overall_p = pearson_r(est.reshape(-1), hum.reshape(-1))
    per = []
    for i, concept in enumerate(ratings.concepts):
        r, p = pearson_r(est[i], hum[i])
        sse = float(np.sum((est[i] - hum[i]) ** 2))
        per.append(ConceptStats(concept=concept, n=est.shape[1], r=r, p=p, sse=sse))
    return EvaluationReport(overall_r=overall_r, overall_p=overall_p,
                            n=est.size, per_concept=tuple(per))


def save_scatter_data(estimates: EstimateMatrix, ratings: RatingsTable,
                      outdir: str | Path) -> list[Path]:
    """Per-concept (color index, human, estimate) CSVs for scatter plots."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    order = [estimates.concepts.index(c) for c in ratings.concepts]
    written = []
    for i, concept in enumerate(ratings.concepts):
        path = outdir / f"scatter_{concept}.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["color_index", "human", "estimate"])
            for j, entry in enumerate(ratings.colors.entries):
                writer.writerow([entry.index, repr(float(ratings.values[i, j])),
                                 repr(float(estimates.values[order[i], j]))])
        written.append(path)
    return written
