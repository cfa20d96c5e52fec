"""Command-line pipeline: featurize, cv-curve, train, estimate, evaluate,
convert, and corpus management.

Every stage reads and writes plain CSV/JSON files so runs are inspectable
and resumable. Options may come from a flat key=value config file
(--config); explicit flags win on conflict. All commands are deterministic
for fixed inputs; --jobs only changes wall time, never output bytes.
"""

from __future__ import annotations

import hashlib
from pathlib import Path

import click
from click.core import ParameterSource

from . import categories, corpus, datasets, evaluation, features, modeling
from .color import Rgb8, WhitePoint, XyY, lab_to_lch, srgb_to_lab, xyy_to_lab


def read_config(path: str | Path) -> dict[str, str]:
    cfg = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise click.ClickException(f"{path}:{lineno}: expected key = value")
        cfg[key.strip()] = val.strip()
    return cfg


def _resolve(ctx, name: str, cast=None):
    """Flag if given explicitly, else config-file value, else the default."""
    value = ctx.params.get(name)
    if ctx.get_parameter_source(name) == ParameterSource.COMMANDLINE:
        return value
    cfg = ctx.obj.get("config", {})
    if name in cfg:
        raw = cfg[name]
        return cast(raw) if cast else raw
    return value


def _load_colors(spec: str) -> datasets.ColorTable:
    if spec in ("uw58", "bcp37"):
        return datasets.builtin_table(spec)
    return datasets.load_color_table(spec)


def _load_category_model(path: str | None) -> categories.CategoryModel:
    if not path:
        return categories.default_category_model()
    return categories.load_category_model(path)


def _outdir(ctx) -> Path:
    out = ctx.obj.get("output") or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _filter_concepts(manifest, concepts: str | None):
    if not concepts:
        return manifest
    wanted = [c.strip() for c in concepts.split(",") if c.strip()]
    missing = sorted(set(wanted) - set(manifest.concepts))
    if missing:
        raise ValueError(f"concepts not present in corpus: {missing}")
    records = tuple(r for r in manifest.records if r.concept in wanted)
    return corpus.CorpusManifest(records=records, extensions=manifest.extensions,
                                 skipped={c: n for c, n in manifest.skipped.items()
                                          if c in wanted})


def _fail(exc: Exception):
    raise click.ClickException(str(exc))


@click.group()
@click.option("--config", type=click.Path(exists=True, dir_okay=False),
              help="Flat key=value config file; flags win on conflict.")
@click.option("--jobs", type=int, default=1, show_default=True,
              help="Parallel workers for per-image stages.")
@click.option("--output", type=click.Path(file_okay=False), default=None,
              help="Directory for output artifacts (default: current dir).")
@click.pass_context
def main(ctx, config, jobs, output):
    """Estimate color-concept association ratings from image corpora."""
    ctx.ensure_object(dict)
    cfg = read_config(config) if config else {}
    ctx.obj["config"] = cfg
    if ctx.get_parameter_source("jobs") != ParameterSource.COMMANDLINE and "jobs" in cfg:
        jobs = int(cfg["jobs"])
    if output is None:
        output = cfg.get("output")
    ctx.obj["jobs"] = max(1, jobs)
    ctx.obj["output"] = output


@main.command()
@click.argument("corpus_root", type=click.Path())
@click.option("--colors", default="uw58", show_default=True,
              help="uw58, bcp37, or a color-table CSV path.")
@click.option("--stage", default="full", show_default=True,
              type=click.Choice(features.STAGES))
@click.option("--max-images", type=int, default=50, show_default=True)
@click.option("--concepts", default=None,
              help="Comma-separated subset of concepts to featurize.")
@click.option("--ratings", type=click.Path(), default=None,
              help="Ratings CSV; adds the response column for training.")
@click.option("--category-model", type=click.Path(), default=None)
@click.option("--seg-iterations", type=int, default=500, show_default=True)
@click.option("--seg-smoothing", type=int, default=1, show_default=True)
@click.pass_context
def featurize(ctx, corpus_root, colors, stage, max_images, concepts, ratings,
              category_model, seg_iterations, seg_smoothing):
    """Build the design matrix CSV for a corpus."""
    try:
        colors = _resolve(ctx, "colors")
        stage = _resolve(ctx, "stage")
        max_images = _resolve(ctx, "max_images", int)
        concepts = _resolve(ctx, "concepts")
        ratings = _resolve(ctx, "ratings")
        category_model = _resolve(ctx, "category_model")
        seg_iterations = _resolve(ctx, "seg_iterations", int)
        seg_smoothing = _resolve(ctx, "seg_smoothing", int)

        table = _load_colors(colors)
        manifest = _filter_concepts(
            corpus.scan_corpus(corpus_root, limit=max_images), concepts)
        ratings_table = datasets.load_ratings(ratings, table) if ratings else None
        model = _load_category_model(category_model)
        matrix = features.build_design_matrix(
            manifest, table, features.catalog(stage), category_model=model,
            ratings=ratings_table, jobs=ctx.obj["jobs"],
            segment_iterations=seg_iterations, segment_smoothing=seg_smoothing)
        outdir = _outdir(ctx)
        path = outdir / "design_matrix.csv"
        digest = matrix.save(path)
        (outdir / "design_matrix.csv.sha256").write_text(digest + "\n")
        click.echo(f"wrote {path} ({len(matrix.rows)} rows x "
                   f"{len(matrix.feature_ids)} features, sha256 {digest[:12]})")
    except (ValueError, OSError, RuntimeError) as exc:
        _fail(exc)


@main.command("cv-curve")
@click.argument("matrix_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--lambda-count", type=int, default=100, show_default=True)
@click.option("--lambda-min-ratio", type=float, default=1e-4, show_default=True)
@click.pass_context
def cv_curve(ctx, matrix_file, lambda_count, lambda_min_ratio):
    """Leave-one-concept-out MSE curve (CSV + figure) from a design matrix."""
    try:
        lambda_count = _resolve(ctx, "lambda_count", int)
        lambda_min_ratio = _resolve(ctx, "lambda_min_ratio", float)
        matrix = features.load_design_matrix(matrix_file)
        if matrix.y is None:
            raise ValueError(f"{matrix_file} has no response column; "
                             "featurize with --ratings first")
        curve = modeling.loo_cv_curve(matrix, lambda_count=lambda_count,
                                      lambda_min_ratio=lambda_min_ratio,
                                      jobs=ctx.obj["jobs"])
        outdir = _outdir(ctx)
        curve.save(outdir / "cv_curve.csv")
        from . import plots
        plots.save_cv_curve_plot(curve, outdir / "cv_curve.png")
        click.echo(f"wrote {outdir / 'cv_curve.csv'} and cv_curve.png "
                   f"({curve.n_folds} folds, {len(curve.entries)} feature counts)")
    except (ValueError, OSError, RuntimeError) as exc:
        _fail(exc)


@main.command()
@click.argument("matrix_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--k", type=int, default=4, show_default=True,
              help="Number of features to keep.")
@click.option("--lambda-count", type=int, default=100, show_default=True)
@click.option("--lambda-min-ratio", type=float, default=1e-4, show_default=True)
@click.option("--category-model", type=click.Path(), default=None)
@click.option("--seg-iterations", type=int, default=500, show_default=True)
@click.option("--seg-smoothing", type=int, default=1, show_default=True)
@click.pass_context
def train(ctx, matrix_file, k, lambda_count, lambda_min_ratio, category_model,
          seg_iterations, seg_smoothing):
    """Select k features on the penalty sweep, refit by least squares, and
    write the model JSON."""
    try:
        k = _resolve(ctx, "k", int)
        lambda_count = _resolve(ctx, "lambda_count", int)
        lambda_min_ratio = _resolve(ctx, "lambda_min_ratio", float)
        category_model = _resolve(ctx, "category_model")
        seg_iterations = _resolve(ctx, "seg_iterations", int)
        seg_smoothing = _resolve(ctx, "seg_smoothing", int)

        matrix = features.load_design_matrix(matrix_file)
        if matrix.y is None:
            raise ValueError(f"{matrix_file} has no response column; "
                             "featurize with --ratings first")
        sidecar = Path(matrix_file).with_suffix(".csv.sha256")
        if sidecar.exists():
            digest = sidecar.read_text().strip()
        else:
            digest = hashlib.sha256(Path(matrix_file).read_bytes()).hexdigest()
        grid = modeling.default_lambda_grid(matrix.X, matrix.y,
                                            count=lambda_count,
                                            min_ratio=lambda_min_ratio)
        cat = _load_category_model(category_model)
        model = modeling.train_model(matrix, k, lambdas=grid,
                                     corpus_digest=digest,
                                     category_model_version=cat.version,
                                     segment_iterations=seg_iterations,
                                     segment_smoothing=seg_smoothing)
        outdir = _outdir(ctx)
        path = outdir / "model.json"
        model.save(path)
        click.echo(f"wrote {path} ({len(model.feature_ids)} features, "
                   f"lambda {model.lam:.3g}): " + ", ".join(model.feature_ids))
    except (ValueError, OSError, RuntimeError) as exc:
        _fail(exc)


@main.command()
@click.argument("model_file", type=click.Path(exists=True, dir_okay=False))
@click.argument("corpus_root", type=click.Path())
@click.option("--colors", default="uw58", show_default=True)
@click.option("--max-images", type=int, default=50, show_default=True)
@click.option("--concepts", default=None,
              help="Comma-separated subset of concepts to estimate.")
@click.option("--category-model", type=click.Path(), default=None)
@click.pass_context
def estimate(ctx, model_file, corpus_root, colors, max_images, concepts,
             category_model):
    """Apply a trained model to a corpus; write the estimates CSV."""
    try:
        colors = _resolve(ctx, "colors")
        max_images = _resolve(ctx, "max_images", int)
        concepts = _resolve(ctx, "concepts")
        category_model = _resolve(ctx, "category_model")

        model = modeling.load_model(model_file)
        table = _load_colors(colors)
        manifest = _filter_concepts(
            corpus.scan_corpus(corpus_root, limit=max_images), concepts)
        cat = _load_category_model(category_model)
        concepts, values = modeling.estimate(model, manifest, table,
                                             category_model=cat,
                                             jobs=ctx.obj["jobs"])
        est = evaluation.estimate_matrix(concepts, table, values)
        outdir = _outdir(ctx)
        path = outdir / "estimates.csv"
        est.save(path)
        click.echo(f"wrote {path} ({len(concepts)} concepts x {len(table)} colors)")
    except (ValueError, OSError, RuntimeError) as exc:
        _fail(exc)


@main.command()
@click.argument("estimates_file", type=click.Path(exists=True, dir_okay=False))
@click.argument("ratings_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--colors", default="uw58", show_default=True)
@click.pass_context
def evaluate(ctx, estimates_file, ratings_file, colors):
    """Compare estimates against human ratings; write the report, scatter
    data, and figures."""
    try:
        colors = _resolve(ctx, "colors")
        table = _load_colors(colors)
        est = evaluation.load_estimates(estimates_file)
        ratings = datasets.load_ratings(ratings_file, table)
        report = evaluation.evaluate_model(est, ratings)
        outdir = _outdir(ctx)
        (outdir / "report.csv").write_text(report.to_csv_text())
        (outdir / "report.json").write_text(report.to_json())
        evaluation.save_scatter_data(est, ratings, outdir)
        from . import plots
        plots.save_correlation_bars(report, outdir / "report_correlations.png")
        plots.save_scatter_grid(est, ratings, outdir / "report_scatter.png")
        click.echo(f"overall r = {report.overall_r:.4f} "
                   f"(p = {report.overall_p:.3g}, n = {report.n})")
        for s in report.per_concept:
            click.echo(f"  {s.concept}: r = {s.r:.4f}, sse = {s.sse:.4f}")
    except (ValueError, OSError, RuntimeError) as exc:
        _fail(exc)


@main.command()
@click.option("--xyy", type=float, nargs=3, default=None,
              help="x y Y chromaticity/luminance triple.")
@click.option("--srgb", type=int, nargs=3, default=None,
              help="8-bit R G B triple.")
@click.option("--white-point", type=float, nargs=3, default=(0.3127, 0.3290, 100.0),
              show_default=True, help="White point for --xyy conversions.")
def convert(xyy, srgb, white_point):
    """Print Lab and Lch coordinates for one color (debugging aid)."""
    if bool(xyy) == bool(srgb):
        raise click.UsageError("give exactly one of --xyy or --srgb")
    try:
        if xyy:
            wp = WhitePoint(*white_point)
            lab = xyy_to_lab(XyY(*xyy), wp)
        else:
            lab = srgb_to_lab(Rgb8(*srgb))
    except ValueError as exc:
        raise click.UsageError(str(exc))
    lch = lab_to_lch(lab)
    click.echo(f"Lab {lab.L:.4f} {lab.a:.4f} {lab.b:.4f}")
    click.echo(f"Lch {lch.L:.4f} {lch.c:.4f} {lch.h:.4f}")


@main.group("corpus")
def corpus_group():
    """Corpus acquisition and manifest tools."""


@corpus_group.command("scan")
@click.argument("root", type=click.Path())
@click.option("--limit", type=int, default=50, show_default=True)
@click.option("--provenance", default="custom", show_default=True,
              type=click.Choice(corpus.PROVENANCE_TAGS))
@click.pass_context
def corpus_scan(ctx, root, limit, provenance):
    """Scan a corpus tree into a manifest JSON."""
    try:
        limit = _resolve(ctx, "limit", int)
        manifest = corpus.scan_corpus(root, limit=limit, provenance=provenance)
        outdir = _outdir(ctx)
        path = outdir / "manifest.json"
        manifest.save(path)
        click.echo(f"wrote {path} ({len(manifest.records)} records, "
                   f"{len(manifest.concepts)} concepts)")
    except (ValueError, OSError, RuntimeError) as exc:
        _fail(exc)


if __name__ == "__main__":
    main()
