"""Command-line front end for the full pipeline.

All subcommands are pure given their inputs, flags, and seed; outputs are
plot-ready CSV or JSON, never rendered graphics.  Exit codes: 0 success,
2 usage/config error, 3 data error, 4 numerical failure.
"""

import functools
import sys

import click
import numpy as np

from . import __version__, dataio
from .classifier import McConfig, fit, predict_latent_mean
from .errors import ConfigError, DataError, NumericalError
from .geometry import barycentric, compress
from .metrics import (area_deviation, calibration_curve, evaluate)
from .regression import GprBackend, GprConfig
from .transform import TransformConfig, gamma_config, transform_dataset


def _handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)
        except DataError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(3)
        except NumericalError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(4)
    return wrapper


@click.group()
@click.version_option(__version__)
def main():
    """Calibrated simplex-mapping classification toolkit."""


def _transform_config(gamma, alpha, beta, k_alpha, k_beta, metric) -> TransformConfig:
    if gamma is not None and (alpha is not None or beta is not None):
        raise ConfigError("--gamma and --alpha/--beta are mutually exclusive")
    if gamma is not None:
        return gamma_config(gamma, k_alpha, k_beta, metric)
    if alpha is None and beta is None:
        return gamma_config(1.0, k_alpha, k_beta, metric)
    if alpha is None or beta is None:
        raise ConfigError("--alpha and --beta must be given together")
    return TransformConfig(alpha=alpha, beta=beta, k_alpha=k_alpha,
                           k_beta=k_beta, metric=metric)


def _labels_to_indices(raw_labels, label_names):
    lookup = {str(name): i + 1 for i, name in enumerate(label_names)}
    out = np.empty(len(raw_labels), dtype=int)
    for i, lab in enumerate(raw_labels):
        if str(lab) not in lookup:
            raise DataError(f"label {lab!r} was not seen during training")
        out[i] = lookup[str(lab)]
    return out


@main.command()
@click.option("--data", required=True, type=click.Path(exists=True))
@click.option("--label-col", required=True)
@click.option("--gamma", type=float, default=None,
              help="Weighting beta=gamma, alpha=1-gamma.")
@click.option("--alpha", type=float, default=None)
@click.option("--beta", type=float, default=None)
@click.option("--k-alpha", type=int, default=1, show_default=True)
@click.option("--k-beta", type=int, default=1, show_default=True)
@click.option("--metric", default="euclidean", show_default=True,
              help="euclidean, taxicab, or plugin:NAME.")
@click.option("--nu", type=float, default=2.5, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@_handle_errors
def train(data, label_col, gamma, alpha, beta, k_alpha, k_beta, metric, nu,
          seed, out_path):
    """Fit a classifier on a labeled CSV and save the model document."""
    dataset, label_names = dataio.load_csv(data, label_col)
    cfg = _transform_config(gamma, alpha, beta, k_alpha, k_beta, metric)
    model = fit(dataset, cfg, backend=GprBackend(GprConfig(matern_nu=nu)),
                seed=seed, label_names=label_names)
    dataio.save_model(model, out_path)
    click.echo(f"trained on {dataset.size} points, {dataset.n_classes} classes "
               f"-> {out_path}")


@main.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--data", required=True, type=click.Path(exists=True))
@click.option("--label-col", default=None,
              help="Drop this column before predicting.")
@click.option("--proba", is_flag=True, help="Also write probability columns.")
@click.option("--mc-samples", type=int, default=10_000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@_handle_errors
def predict(model_path, data, label_col, proba, mc_samples, seed, out_path):
    """Predict labels (and optionally probabilities) for a CSV of points."""
    model = dataio.load_model(model_path)
    feats, _, _ = dataio.load_features(data, label_col)
    labels = model.predict(feats)
    columns = ["row", "label"]
    rows = [[i, lab] for i, lab in enumerate(labels)]
    if proba:
        probs = np.atleast_2d(model.predict_proba(
            feats, McConfig(sample_count=mc_samples, seed=seed)))
        columns += [f"p_{name}" for name in model.label_names]
        for row, pr in zip(rows, probs):
            row.extend(pr.tolist())
    dataio.write_csv(out_path, columns, rows,
                     {"seed": seed, "mc_samples": mc_samples})
    click.echo(f"predicted {len(rows)} rows -> {out_path}")


@main.command("evaluate")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--data", required=True, type=click.Path(exists=True))
@click.option("--label-col", required=True)
@click.option("--mc-samples", type=int, default=10_000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--top-k", type=int, multiple=True,
              help="Also report top-k accuracy (repeatable).")
@click.option("--out", "out_path", required=True, type=click.Path())
@_handle_errors
def evaluate_cmd(model_path, data, label_col, mc_samples, seed, top_k, out_path):
    """Score a model against labeled data and write a JSON report."""
    model = dataio.load_model(model_path)
    feats, _, raw = dataio.load_features(data, label_col)
    true_idx = _labels_to_indices(raw, model.label_names)
    pred = model.predict(feats)
    pred_idx = _labels_to_indices(pred, model.label_names)
    probs = np.atleast_2d(model.predict_proba(
        feats, McConfig(sample_count=mc_samples, seed=seed)))
    report = evaluate(true_idx, pred_idx, probs,
                      top_k=sorted(top_k) or None, n=model.n_classes)
    payload = {"kind": "evaluation-report",
               "label_names": [str(x) for x in model.label_names],
               "mc_samples": mc_samples}
    payload.update(report.to_dict())
    dataio.save_report(payload, out_path, seed=seed)
    click.echo(f"accuracy {report.accuracy:.4f}, log-loss {report.log_loss:.4f}, "
               f"proba-loss {report.proba_loss:.4f} -> {out_path}")


@main.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--data", required=True, type=click.Path(exists=True))
@click.option("--label-col", required=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@_handle_errors
def calibrate(model_path, data, label_col, out_path):
    """Binary reliability diagram data: bins and area-deviation."""
    model = dataio.load_model(model_path)
    if model.n_classes != 2:
        raise ConfigError("calibration curves are defined for binary models only")
    feats, _, raw = dataio.load_features(data, label_col)
    true_idx = _labels_to_indices(raw, model.label_names)
    probs = np.atleast_2d(model.predict_proba(feats))
    curve = calibration_curve((true_idx == 1).astype(float), probs[:, 0])
    payload = {"kind": "calibration-report",
               "positive_label": str(model.label_names[0]),
               "area_deviation": area_deviation(curve),
               "area_deviation_extent": "bin-range"}
    payload.update(curve.to_dict())
    dataio.save_report(payload, out_path)
    click.echo(f"area-deviation {payload['area_deviation']:.4f} -> {out_path}")


@main.command()
@click.option("--data", required=True, type=click.Path(exists=True))
@click.option("--label-col", required=True)
@click.option("--gamma", type=float, multiple=True)
@click.option("--k-alpha", type=int, multiple=True)
@click.option("--k-beta", type=int, multiple=True)
@click.option("--metric", multiple=True)
@click.option("--nu", type=float, multiple=True)
@click.option("--folds", type=int, default=5, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--mc-samples", type=int, default=2000, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@_handle_errors
def tune(data, label_col, gamma, k_alpha, k_beta, metric, nu, folds, seed,
         mc_samples, out_path):
    """Cross-validated grid search; writes the best configuration and all
    per-grid-point scores."""
    dataset, _ = dataio.load_csv(data, label_col)
    grid = {}
    for key, values in (("gamma", gamma), ("k_alpha", k_alpha),
                        ("k_beta", k_beta), ("metric", metric), ("nu", nu)):
        if values:
            grid[key] = list(values)
    t_cfg, g_cfg, results = dataio.grid_search_cv(
        dataset, grid, folds=folds, seed=seed, mc_samples=mc_samples)
    payload = {
        "kind": "tuning-report",
        "best": {"alpha": t_cfg.alpha, "beta": t_cfg.beta,
                 "k_alpha": t_cfg.k_alpha, "k_beta": t_cfg.k_beta,
                 "metric": t_cfg.metric, "nu": g_cfg.matern_nu},
        "folds": folds,
        "results": results,
    }
    dataio.save_report(payload, out_path, seed=seed)
    click.echo(f"best: gamma={t_cfg.beta} k_alpha={t_cfg.k_alpha} "
               f"k_beta={t_cfg.k_beta} metric={t_cfg.metric} -> {out_path}")


@main.command()
@click.option("--count", type=int, default=40, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@_handle_errors
def synth(count, seed, out_path):
    """Emit the synthetic quadrant-labeled dataset as CSV."""
    data = dataio.synth_quadrants(count, seed)
    rows = [[x1, x2, int(lab)] for (x1, x2), lab in zip(data.features, data.labels)]
    dataio.write_csv(out_path, ["x1", "x2", "label"], rows, {"seed": seed})
    click.echo(f"wrote {count} points -> {out_path}")


@main.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--data", required=True, type=click.Path(exists=True))
@click.option("--label-col", default=None)
@click.option("--use-transform", is_flag=True,
              help="Place points with the training-data transformation "
                   "instead of the regressor (labels required).")
@click.option("--out", "out_path", required=True, type=click.Path())
@_handle_errors
def viz(model_path, data, label_col, use_transform, out_path):
    """Write latent means, compressed coordinates, and barycentric
    coordinates per point: the data behind a latent-space plot."""
    model = dataio.load_model(model_path)
    g = model.geometry
    feats, _, raw = dataio.load_features(data, label_col)
    if use_transform:
        if raw is None:
            raise ConfigError("--use-transform requires --label-col")
        dataset = dataio.LabeledDataset(feats, _labels_to_indices(raw, model.label_names))
        latents = transform_dataset(dataset, model.transform_cfg, g).latents
    else:
        latents = np.atleast_2d(predict_latent_mean(model, feats))
    pred = model.predict(feats)
    columns = (["row"] + [f"latent_{j+1}" for j in range(g.dim)]
               + [f"compressed_{j+1}" for j in range(g.dim)]
               + [f"bary_{k+1}" for k in range(g.n)])
    if raw is not None:
        columns.append("true_label")
    columns.append("predicted_label")
    rows = []
    for i, z in enumerate(latents):
        w = compress(z, g)
        row = [i, *z.tolist(), *w.tolist(), *barycentric(w, g).tolist()]
        if raw is not None:
            row.append(raw[i])
        row.append(pred[i] if isinstance(pred, list) else pred)
        rows.append(row)
    dataio.write_csv(out_path, columns, rows,
                     {"source": "transform" if use_transform else "regressor"})
    click.echo(f"wrote {len(rows)} rows -> {out_path}")


if __name__ == "__main__":
    main()
