"""Sparse regression, feature selection, and estimation.

The model is fitted in two stages: a lasso sweep over a descending lambda
grid picks which features matter (with leave-one-concept-out cross-validation
guiding how many), then plain least squares on the selected columns sets the
final weights and offset. Fitted models serialize to JSON and apply to new
corpora and color tables without further training data.
"""

from __future__ import annotations

import json
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .categories import CategoryModel, categorize_index, default_category_model
from .corpus import CorpusManifest
from .datasets import ColorTable
from .features import (DesignMatrix, feature_block, parse_feature_id,
                       _image_masks, _stage_for_ids)
from .imaging import (DEFAULT_SEGMENT_ITERATIONS, DEFAULT_SEGMENT_SMOOTHING,
                      center_windows, normalize_image)

DEFAULT_TOL = 1e-7
DEFAULT_MAX_ITER = 100_000
DEFAULT_LAMBDA_COUNT = 100
DEFAULT_LAMBDA_MIN_RATIO = 1e-4


class ConvergenceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class LassoFit:
    weights: np.ndarray
    offset: float
    lam: float
    n_sweeps: int
    converged: bool

    @property
    def nonzero(self) -> int:
        return int(np.count_nonzero(self.weights))


def _soft(x: float, t: float) -> float:
    if x > t:
        return x - t
    if x < -t:
        return x + t
    return 0.0


def _validate_xy(X: np.ndarray, y: np.ndarray):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
        raise ValueError(f"X must be a nonempty 2-D array, got shape {X.shape}")
    if y.shape != (X.shape[0],):
        raise ValueError(f"y length {y.shape} does not match {X.shape[0]} rows")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("non-finite values in regression inputs")
    return X, y


def lambda_max(X: np.ndarray, y: np.ndarray) -> float:
    """Smallest penalty at which the lasso solution is all zeros."""
    X, y = _validate_xy(X, y)
    n = X.shape[0]
    xc = X - X.mean(axis=0)
    yc = y - y.mean()
    return float(np.max(np.abs(xc.T @ yc)) / n)


def default_lambda_grid(X: np.ndarray, y: np.ndarray,
                        count: int = DEFAULT_LAMBDA_COUNT,
                        min_ratio: float = DEFAULT_LAMBDA_MIN_RATIO) -> np.ndarray:
    """Log-spaced descending grid from lambda_max down to min_ratio of it."""
    lmax = lambda_max(X, y)
    if lmax <= 0.0:
        return np.zeros(1)
    return np.geomspace(lmax, lmax * min_ratio, count)


def lasso_fit(X: np.ndarray, y: np.ndarray, lam: float, tol: float = DEFAULT_TOL,
              max_iter: int = DEFAULT_MAX_ITER,
              w0: np.ndarray | None = None) -> LassoFit:
    """Minimize (1/2n)||y - Xw - b||^2 + lam*||w||_1 with unpenalized offset.

    Cyclic coordinate descent on Gram-matrix updates; converged when the
    largest coordinate change in a sweep drops below tol. max_iter caps the
    total coordinate update steps; hitting it is reported, not raised, since
    it only occurs for near-singular designs at vanishing penalties. At a
    converged solution the subgradient conditions hold within tolerance.

    At lam == 0 the objective is a plain quadratic and the final distance to
    the least-squares solution scales with the conditioning, so the update
    tolerance is tightened by 1e-4 to keep the OLS limit sharp.
    """
    X, y = _validate_xy(X, y)
    if lam < 0:
        raise ValueError(f"penalty must be non-negative, got {lam}")
    if lam == 0.0:
        tol = tol * 1e-4
    n, p = X.shape
    xm = X.mean(axis=0)
    ym = float(y.mean())
    xc = X - xm
    yc = y - ym
    gram = xc.T @ xc / n
    corr = xc.T @ yc / n
    diag = np.diag(gram).copy()
    w = np.zeros(p) if w0 is None else np.array(w0, dtype=float)
    q = gram @ w if w0 is not None else np.zeros(p)

    all_coords = [j for j in range(p) if diag[j] > 0.0]  # skip constant columns

    def sweep(coords) -> float:
        nonlocal q
        delta = 0.0
        for j in coords:
            rho = corr[j] - q[j] + diag[j] * w[j]
            wj = _soft(rho, lam) / diag[j]
            if wj != w[j]:
                step = wj - w[j]
                q += gram[:, j] * step
                delta = max(delta, abs(step))
                w[j] = wj
        return delta

    def objective() -> float:
        # (1/2n)||yc - Xc w||^2 + lam*||w||_1, via Gram identities
        return (0.5 * float(yc @ yc) / n - float(corr @ w) + 0.5 * float(w @ q)
                + lam * float(np.abs(w).sum()))

    # Full passes decide convergence; between them, iterate the active set
    # only. On near-singular designs the coefficients can keep wandering in
    # a flat valley long after the fit stops improving; exact-arithmetic
    # descent strictly decreases the objective, so zero progress between
    # drift-corrected checkpoints means the fit is at float resolution and
    # counts as converged.
    checkpoint_interval = 128
    converged = False
    sweeps = 0
    steps = 0
    last_checkpoint = None
    while steps < max_iter and not converged:
        delta = sweep(all_coords)
        sweeps += 1
        steps += p
        if delta < tol:
            converged = True
            break
        active = [j for j in all_coords if w[j] != 0.0]
        while active and steps < max_iter:
            delta = sweep(active)
            sweeps += 1
            steps += len(active)
            if delta < tol:
                break
            if sweeps % checkpoint_interval == 0:
                q = gram @ w  # shed incremental-update drift on long runs
                obj = objective()
                if last_checkpoint is not None and last_checkpoint - obj <= 0.0:
                    converged = True
                    break
                last_checkpoint = obj
    if not converged:
        warnings.warn("coordinate descent hit the step cap before converging; "
                      "returning the partial solution", ConvergenceWarning)
    offset = ym - float(xm @ w)
    return LassoFit(weights=w, offset=offset, lam=float(lam),
                    n_sweeps=sweeps, converged=converged)


def kkt_violation(X: np.ndarray, y: np.ndarray, w: np.ndarray, lam: float) -> float:
    """Largest violation of the lasso stationarity conditions.

    For zero weights the smooth gradient must stay within [-lam, lam]; for
    active weights it must equal -sign(w) * lam.
    """
    X, y = _validate_xy(X, y)
    n = X.shape[0]
    xc = X - X.mean(axis=0)
    yc = y - y.mean()
    grad = -(xc.T @ (yc - xc @ w)) / n
    worst = 0.0
    for j in range(X.shape[1]):
        if w[j] == 0.0:
            worst = max(worst, abs(grad[j]) - lam)
        else:
            worst = max(worst, abs(grad[j] + np.sign(w[j]) * lam))
    return float(worst)


def lasso_path(X: np.ndarray, y: np.ndarray, lambdas,
               tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> list[LassoFit]:
    """Warm-started fits along a descending lambda grid."""
    fits = []
    w = None
    for lam in lambdas:
        fit = lasso_fit(X, y, lam, tol=tol, max_iter=max_iter, w0=w)
        fits.append(fit)
        w = fit.weights
    return fits


@dataclass(frozen=True)
class CvCurve:
    """Mean held-out MSE per nonzero-feature count, across concept folds."""

    entries: tuple[tuple[int, float], ...]  # (k, mean mse), k ascending
    n_folds: int

    def mse_at(self, k: int) -> float:
        for kk, mse in self.entries:
            if kk == k:
                return mse
        raise KeyError(f"no cross-validation entry for k={k}")

    def to_csv_text(self) -> str:
        lines = ["k,mean_mse"]
        lines += [f"{k},{repr(float(m))}" for k, m in self.entries]
        return "\n".join(lines) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv_text())


def load_cv_curve(path: str | Path) -> CvCurve:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != "k,mean_mse":
        raise ValueError(f"{path}: not a cross-validation curve CSV")
    entries = []
    for line in lines[1:]:
        if not line:
            continue
        k, m = line.split(",")
        entries.append((int(k), float(m)))
    return CvCurve(entries=tuple(entries), n_folds=0)


def loo_cv_curve(matrix: DesignMatrix, lambdas=None,
                 lambda_count: int = DEFAULT_LAMBDA_COUNT,
                 lambda_min_ratio: float = DEFAULT_LAMBDA_MIN_RATIO,
                 tol: float = DEFAULT_TOL, jobs: int = 1) -> CvCurve:
    """Leave-one-concept-out error curve over the lambda sweep.

    Each concept in turn becomes the held-out fold; the path is fitted on
    the remaining concepts and scored on the held-out rows. The sweep is
    built per fold from that fold's training rows (so it always spans the
    null model down to a dense one) unless an explicit grid is given.
    Within a fold, multiple lambdas reaching the same nonzero count keep the
    lowest MSE; folds are then averaged per count.
    """
    if matrix.y is None:
        raise ValueError("cross-validation requires a response vector")
    concepts = matrix.concepts
    if len(concepts) < 2:
        raise ValueError("cross-validation needs at least 2 concepts")

    def run_fold(concept):
        test = matrix.concept_row_mask(concept)
        train = ~test
        assert not np.any(train & test)  # fold hygiene: disjoint by construction
        grid = lambdas if lambdas is not None else default_lambda_grid(
            matrix.X[train], matrix.y[train],
            count=lambda_count, min_ratio=lambda_min_ratio)
        fits = lasso_path(matrix.X[train], matrix.y[train], grid, tol=tol)
        per_k: dict[int, float] = {}
        Xt, yt = matrix.X[test], matrix.y[test]
        for fit in fits:
            resid = yt - Xt @ fit.weights - fit.offset
            mse = float(resid @ resid / resid.shape[0])
            k = fit.nonzero
            if k not in per_k or mse < per_k[k]:
                per_k[k] = mse
        return per_k

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            folds = list(pool.map(run_fold, concepts))
    else:
        folds = [run_fold(c) for c in concepts]

    all_k = sorted({k for fold in folds for k in fold})
    entries = []
    for k in all_k:
        vals = [fold[k] for fold in folds if k in fold]
        entries.append((k, float(np.mean(vals))))
    return CvCurve(entries=tuple(entries), n_folds=len(concepts))


def select_features(X: np.ndarray, y: np.ndarray, k: int, lambdas=None,
                    tol: float = DEFAULT_TOL,
                    refine_steps: int = 40) -> tuple[tuple[int, ...], float]:
    """Column indices of the k features kept at the largest penalty that
    leaves exactly k weights active.

    Scans the lambda grid, bisecting between neighbors when no grid point
    lands on k exactly. If k is unreachable, the closest count below k is
    returned with a warning.
    """
    X, y = _validate_xy(X, y)
    if k < 1:
        raise ValueError(f"target feature count must be >= 1, got {k}")
    if k > X.shape[1]:
        raise ValueError(f"target feature count {k} exceeds {X.shape[1]} columns")
    if lambdas is None:
        lambdas = default_lambda_grid(X, y)
    fits = lasso_path(X, y, lambdas, tol=tol)

    for fit in fits:  # grid is descending, so the first hit has the largest lambda
        if fit.nonzero == k:
            return _support(fit), fit.lam

    # bisect within the first bracket that jumps past k
    prev = None
    for fit in fits:
        if prev is not None and prev.nonzero < k < fit.nonzero:
            lo, hi = fit.lam, prev.lam
            w = prev.weights
            for _ in range(refine_steps):
                mid = np.sqrt(lo * hi)
                cand = lasso_fit(X, y, mid, tol=tol, w0=w)
                w = cand.weights
                if cand.nonzero == k:
                    return _support(cand), cand.lam
                if cand.nonzero < k:
                    hi = mid
                else:
                    lo = mid
            break
        prev = fit
    best = None
    for fit in fits:
        if fit.nonzero < k and (best is None or fit.nonzero > best.nonzero):
            best = fit
    if best is None or best.nonzero == 0:
        raise ValueError(f"no penalty in the sweep keeps any features (k={k})")
    warnings.warn(f"no penalty yields exactly {k} features; "
                  f"selected {best.nonzero} instead", UserWarning)
    return _support(best), best.lam


def _support(fit: LassoFit) -> tuple[int, ...]:
    return tuple(int(j) for j in np.flatnonzero(fit.weights))


def ols_fit(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, float]:
    """Least-squares weights and offset for the given (selected) columns.

    Rank deficiency falls back to the minimum-norm solution with a warning.
    Supports zero-column X, in which case the offset is mean(y).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("X and y row counts differ")
    if X.shape[1] == 0:
        return np.zeros(0), float(y.mean())
    design = np.column_stack([np.ones(X.shape[0]), X])
    beta, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < design.shape[1]:
        warnings.warn(f"rank-deficient least squares: rank {rank} < "
                      f"{design.shape[1]} columns; using minimum-norm solution",
                      UserWarning)
    return beta[1:], float(beta[0])


@dataclass(frozen=True)
class ModelSpec:
    """A trained estimator: selected features, their weights, and an offset,
    plus enough metadata to reproduce the run."""

    stage: str
    feature_ids: tuple[str, ...]
    weights: tuple[float, ...]
    offset: float
    lam: float
    tolerances: dict = field(default_factory=dict)
    category_model_version: str = "builtin-1"
    corpus_digest: str = ""

    def __post_init__(self):
        if len(self.feature_ids) != len(self.weights):
            raise ValueError("one weight per feature required")
        if len(self.feature_ids) < 1:
            raise ValueError("a model needs at least one feature")
        if not all(np.isfinite(w) for w in self.weights) or not np.isfinite(self.offset):
            raise ValueError("non-finite model coefficients")
        for fid in self.feature_ids:
            parse_feature_id(fid)

    def to_json(self) -> str:
        doc = {
            "stage": self.stage,
            "features": list(self.feature_ids),
            "weights": list(self.weights),
            "offset": self.offset,
            "lambda": self.lam,
            "tolerances": self.tolerances,
            "category_model_version": self.category_model_version,
            "corpus_digest": self.corpus_digest,
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())


def load_model(path: str | Path) -> ModelSpec:
    doc = json.loads(Path(path).read_text())
    try:
        return ModelSpec(
            stage=doc["stage"],
            feature_ids=tuple(doc["features"]),
            weights=tuple(float(w) for w in doc["weights"]),
            offset=float(doc["offset"]),
            lam=float(doc["lambda"]),
            tolerances=dict(doc.get("tolerances", {})),
            category_model_version=doc.get("category_model_version", "builtin-1"),
            corpus_digest=doc.get("corpus_digest", ""),
        )
    except KeyError as exc:
        raise ValueError(f"{path}: missing model field {exc}") from None


def train_model(matrix: DesignMatrix, k: int, lambdas=None,
                tol: float = DEFAULT_TOL, corpus_digest: str = "",
                category_model_version: str = "builtin-1",
                segment_iterations: int = DEFAULT_SEGMENT_ITERATIONS,
                segment_smoothing: int = DEFAULT_SEGMENT_SMOOTHING) -> ModelSpec:
    """Select k features by the lasso sweep, then refit them by OLS."""
    if matrix.y is None:
        raise ValueError("training requires a response vector")
    support, lam = select_features(matrix.X, matrix.y, k, lambdas=lambdas, tol=tol)
    weights, offset = ols_fit(matrix.X[:, support], matrix.y)
    stage = matrix.stage or _stage_for_ids(matrix.feature_ids) or "custom"
    return ModelSpec(
        stage=stage,
        feature_ids=tuple(matrix.feature_ids[j] for j in support),
        weights=tuple(float(w) for w in weights),
        offset=offset,
        lam=lam,
        tolerances={
            "solver_tol": tol,
            "solver_max_iter": DEFAULT_MAX_ITER,
            "segment_iterations": segment_iterations,
            "segment_smoothing": segment_smoothing,
        },
        category_model_version=category_model_version,
        corpus_digest=corpus_digest,
    )


def apply_model(model: ModelSpec, blocks: np.ndarray) -> np.ndarray:
    """Linear score offset + X @ w for per-color feature blocks."""
    w = np.array(model.weights)
    return blocks @ w + model.offset


def estimate(model: ModelSpec, manifest: CorpusManifest, colors: ColorTable,
             category_model: CategoryModel | None = None, jobs: int = 1) -> tuple[tuple[str, ...], np.ndarray]:
    """Estimated association ratings for every (concept, color) pair.

    Evaluates only the model's features on each image, applies the weights,
    and averages scores across each concept's images. Values are returned
    raw (not clamped to [0, 1]).
    """
    specs = tuple(parse_feature_id(fid) for fid in model.feature_ids)
    records = sorted(manifest.records, key=lambda r: (r.concept, r.rank))
    if not records:
        raise ValueError("manifest contains no records")
    concepts = tuple(sorted({r.concept for r in records}))

    seg_iters = int(model.tolerances.get("segment_iterations", DEFAULT_SEGMENT_ITERATIONS))
    seg_smooth = int(model.tolerances.get("segment_smoothing", DEFAULT_SEGMENT_SMOOTHING))
    windows = {s.window for s in specs}
    centers = center_windows()
    needs_model = any(s.kind == "category" for s in specs)
    if needs_model and category_model is None:
        category_model = default_category_model()
    target_terms = None
    if needs_model:
        target_terms = np.array(
            [categorize_index(category_model, e.lab) for e in colors.entries])

    def work(record):
        img = normalize_image(record.path.read_bytes())
        masks = _image_masks(img, windows, centers, seg_iters, seg_smooth)
        block = feature_block(img, masks, specs, colors,
                              category_model=category_model,
                              target_terms=target_terms)
        return apply_model(model, block)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            scores = list(pool.map(work, records))
    else:
        scores = [work(r) for r in records]

    values = np.empty((len(concepts), len(colors)))
    for ci, concept in enumerate(concepts):
        rows = [s for s, r in zip(scores, records) if r.concept == concept]
        values[ci] = np.mean(rows, axis=0)
    return concepts, values
