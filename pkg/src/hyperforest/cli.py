"""Command-line pipeline driver.

Subcommands: ingest, train, evaluate, rfe, predict, synth. Every command
takes --config; --seed and --out override the config without editing it.
Reports are tab-delimited files; alongside each report the matching
figure is rendered as a PNG unless plotting is disabled (config
``plots: false`` or --no-plots).

Exit codes: 0 success, 1 usage or config error, 2 data error,
3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import sys
import traceback
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, datasets, ensemble, evaluation, model_io, reports, splitting
from .config import PipelineConfig, load_config
from .errors import DataError, HyperForestError, IngestAborted
from .features import build_features
from .ingestion import (
    convert_spending,
    curate_contracts,
    label_dataset,
    load_corrupt_registry,
    parse_contracts,
)
from .rfe import run_rfe
from .synth import SynthSpec, generate_synthetic_table

# Seed streams: the split shuffle uses the config seed itself; the
# subsample dealer gets its own offset stream so the two never alias.
SUBSAMPLE_SEED_OFFSET = 101

DATASET_FILE = "features.tsv"
MODEL_FILE = "model.json"


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _load_table(cfg: PipelineConfig) -> datasets.FeatureTable:
    cfg.require("dataset")
    table = datasets.read_feature_table(cfg.dataset)
    if table.y is None:
        raise DataError(f"{cfg.dataset}: dataset has no label column")
    return table


def _split_indices(cfg: PipelineConfig, table: datasets.FeatureTable):
    return splitting.stratified_split(table.labels(), cfg.split)


def _plots_enabled(cfg: PipelineConfig, args) -> bool:
    return cfg.plots and not getattr(args, "no_plots", False)


def cmd_ingest(cfg: PipelineConfig, args) -> int:
    """Raw contracts -> validated, labeled feature table + curation report."""
    cfg.require("contracts")
    cfg.require("schema_map")
    cfg.require("registries")
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)

    field_maps, report = parse_contracts(cfg.contracts, cfg.schema_map)
    try:
        records = curate_contracts(field_maps, report, cfg.max_reject_fraction)
    except IngestAborted:
        reports.write_curation(out / "curation.tsv", report)
        raise
    if cfg.ppp_table:
        records = [convert_spending(r, cfg.ppp_table) for r in records]
    registry = load_corrupt_registry(
        [(e.path, e.source) for e in cfg.registries],
        name_column=next((e.name_column for e in cfg.registries if e.name_column), None),
    )
    labeled = label_dataset(records, registry)
    rows, schema = build_features(labeled)
    table = datasets.from_feature_rows(rows, schema)

    datasets.write_feature_table(out / DATASET_FILE, table)
    reports.write_curation(out / "curation.tsv", report)
    n_c = int((table.labels() == 0).sum())
    print(
        f"ingested {report.accepted} of {report.total_rows} rows "
        f"({report.rejected_total} rejected); {n_c} labeled C, "
        f"{table.n_rows - n_c} labeled NC"
    )
    print(f"wrote {out / DATASET_FILE} and {out / 'curation.tsv'}")
    return 0


def cmd_train(cfg: PipelineConfig, args) -> int:
    """Split, train the hyper-forest, calibrate theta, persist the model."""
    table = _load_table(cfg)
    datasets.require_trainable(table)
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)

    train_idx, cal_idx, test_idx = _split_indices(cfg, table)
    for name, idx in (
        ("train.idx", train_idx),
        ("calibration.idx", cal_idx),
        ("test.idx", test_idx),
    ):
        splitting.write_index_file(out / name, idx)

    subsamples = splitting.balanced_subsamples(
        table.labels(), train_idx, cfg.seed + SUBSAMPLE_SEED_OFFSET
    )
    model = ensemble.train_hyper_forest(
        table.X, table.labels(), table.schema, subsamples, cfg.forest, cfg.seed
    )
    model.metadata["dataset"] = {
        "n_rows": table.n_rows,
        "fingerprint": model_io.dataset_fingerprint(table.X, table.labels()),
    }

    cal_scores = ensemble.vote_fractions(model, table.X[cal_idx])
    curve = evaluation.roc_curve(cal_scores, table.labels()[cal_idx], vote_count=model.n_forests)
    calib = evaluation.select_best_threshold(curve)
    model.theta = calib.theta

    checksum = model_io.save_model(model, out / MODEL_FILE, created=_now())
    reports.write_roc(out / "roc.tsv", curve)
    if _plots_enabled(cfg, args):
        from . import plots

        plots.render_roc(out / "roc.png", curve, calib)
    print(
        f"trained {model.n_forests} forests x {cfg.forest.trees} trees; "
        f"theta = {calib.theta:.6g} (TPR {calib.tpr:.3f}, FPR {calib.fpr:.3f}, "
        f"AUC {curve.auc:.3f})"
    )
    print(f"wrote {out / MODEL_FILE} (checksum {checksum[:12]}...)")
    return 0


_SPLIT_CHOICES = ("train", "calibration", "test")


def cmd_evaluate(cfg: PipelineConfig, args) -> int:
    """Score one split with a trained model and write the report files."""
    table = _load_table(cfg)
    model_path = Path(args.model) if args.model else cfg.output_dir / MODEL_FILE
    model = model_io.load_model(model_path)
    model.require_schema(table.schema)
    if model.theta is None:
        raise DataError(f"{model_path}: model has no calibrated threshold")
    stored = model.metadata.get("dataset", {}).get("fingerprint")
    if stored and stored != model_io.dataset_fingerprint(table.X, table.labels()):
        raise DataError(
            "dataset does not match the one the model was trained on; "
            "evaluate expects the same labeled table the splits came from"
        )

    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    idx = dict(zip(_SPLIT_CHOICES, _split_indices(cfg, table)))[args.split]

    scores = ensemble.vote_fractions(model, table.X[idx])
    y = table.labels()[idx]
    pred = (scores > model.theta).astype(np.uint8)
    cm = evaluation.confusion_matrix(pred, y)
    curve = evaluation.roc_curve(scores, y, vote_count=model.n_forests)
    report = evaluation.metrics_suite(cm, auc=curve.auc)

    grid = np.arange(model.n_forests + 1) / model.n_forests
    sweep = evaluation.threshold_sweep(scores, y, grid)
    imp = ensemble.aggregate_importance(model, table.X, table.labels())
    corr_c, corr_nc = evaluation.class_correlation_matrices(
        table.X[idx], y, table.schema
    )
    numeric_names = evaluation.numeric_feature_names(table.schema)

    reports.write_metrics(out / "metrics.tsv", report, theta=model.theta)
    reports.write_confusion(out / "confusion.tsv", cm)
    reports.write_sweep(out / "sweep.tsv", sweep)
    reports.write_importance(out / "importance.tsv", imp)
    reports.write_correlation(out / "corr_C.tsv", numeric_names, corr_c)
    reports.write_correlation(out / "corr_NC.tsv", numeric_names, corr_nc)
    if _plots_enabled(cfg, args):
        from . import plots

        plots.render_confusion(out / "confusion.png", cm)
        plots.render_sweep(out / "sweep.png", sweep, model.theta)
        plots.render_importance(out / "importance.png", imp)
        plots.render_correlation(out / "corr_C.png", numeric_names, corr_c, "Correlations (C rows)")
        plots.render_correlation(out / "corr_NC.png", numeric_names, corr_nc, "Correlations (NC rows)")

    def show(v):
        return "NA" if v is None else f"{v:.4f}"

    print(
        f"{args.split} split at theta {model.theta:.6g}: "
        f"BAcc {show(report.balanced_accuracy)}, NC acc {show(report.nc_accuracy)}, "
        f"C acc {show(report.c_accuracy)}, AUC {curve.auc:.4f}"
    )
    return 0


def cmd_rfe(cfg: PipelineConfig, args) -> int:
    """Backward elimination; appends each stage to rfe.tsv as it lands."""
    table = _load_table(cfg)
    datasets.require_trainable(table)
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)

    train_idx, cal_idx, test_idx = _split_indices(cfg, table)
    subsamples = splitting.balanced_subsamples(
        table.labels(), train_idx, cfg.seed + SUBSAMPLE_SEED_OFFSET
    )

    trace_path = out / "rfe.tsv"
    with trace_path.open("w", encoding="utf-8") as fh:
        fh.write("\t".join(reports.RFE_HEADER) + "\n")
        fh.flush()

        def on_stage(stage):
            # Crash-safe: each finished stage lands on disk immediately.
            fh.write("\t".join(reports.fmt_cell(c) for c in reports.rfe_stage_row(stage)) + "\n")
            fh.flush()
            bacc = "NA" if stage.balanced_accuracy is None else f"{stage.balanced_accuracy:.4f}"
            print(
                f"stage {stage.n_features:>2} features: "
                f"BAcc {bacc}, dropping {stage.eliminated}"
            )

        trace, best_features, best_model = run_rfe(
            table, train_idx, cal_idx, test_idx, subsamples,
            cfg.forest, cfg.seed, stage_callback=on_stage,
        )

    # Rewrite in presentation order (baseline first, then ascending size).
    reports.write_rfe(trace_path, trace)
    checksum = model_io.save_model(best_model, out / "rfe_model.json", created=_now())
    if _plots_enabled(cfg, args):
        from . import plots

        plots.render_rfe(out / "rfe.png", trace)
    best = trace.best_stage()
    print(
        f"best subset ({best.n_features} features, BAcc {best.balanced_accuracy:.4f}): "
        f"{', '.join(best_features)}"
    )
    print(f"wrote {trace_path} and {out / 'rfe_model.json'} (checksum {checksum[:12]}...)")
    return 0


def cmd_predict(cfg: PipelineConfig, args) -> int:
    """Score a feature table with a trained model, preserving row order."""
    model_path = Path(args.model) if args.model else cfg.output_dir / MODEL_FILE
    model = model_io.load_model(model_path)
    if model.theta is None:
        raise DataError(f"{model_path}: model has no calibrated threshold")
    table = datasets.read_feature_table(args.input, schema=model.schema)

    probs = ensemble.vote_fractions(model, table.X)
    labels = (probs > model.theta).astype(np.uint8)
    out_path = cfg.output_dir / "predictions.tsv"
    reports.write_predictions(out_path, probs, labels)
    flagged = int((labels == 0).sum())
    print(f"scored {table.n_rows} rows at theta {model.theta:.6g}; {flagged} flagged C")
    print(f"wrote {out_path}")
    return 0


def cmd_synth(cfg: PipelineConfig, args) -> int:
    """Generate a seeded synthetic labeled feature table."""
    spec = SynthSpec(
        n_rows=args.rows,
        imbalance=args.ratio,
        n_informative=args.informative,
        n_noise=args.noise,
        seed=cfg.seed,
    )
    table, planted, noise = generate_synthetic_table(spec)
    out = cfg.output_dir
    path = out / DATASET_FILE
    datasets.write_feature_table(path, table)
    n_c = int((table.labels() == 0).sum())
    print(
        f"generated {table.n_rows} rows ({n_c} C, {table.n_rows - n_c} NC); "
        f"planted: {', '.join(planted)}; noise: {', '.join(noise)}"
    )
    print(f"wrote {path}")
    return 0


class _Parser(argparse.ArgumentParser):
    # Spec'd exit codes put usage errors at 1, not argparse's default 2.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hyperforest", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to the YAML config")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="override the output directory")
        p.set_defaults(func=func)
        return p

    add("ingest", cmd_ingest, "validate, label, and featurize raw contracts")

    p = add("train", cmd_train, "train the hyper-forest and calibrate theta")
    p.add_argument("--no-plots", action="store_true", help="skip figure rendering")

    p = add("evaluate", cmd_evaluate, "score a split and write report files")
    p.add_argument("--model", default=None, help="model file (default: <out>/model.json)")
    p.add_argument("--split", choices=_SPLIT_CHOICES, default="test")
    p.add_argument("--no-plots", action="store_true", help="skip figure rendering")

    p = add("rfe", cmd_rfe, "recursive feature elimination")
    p.add_argument("--no-plots", action="store_true", help="skip figure rendering")

    p = add("predict", cmd_predict, "score new rows with a trained model")
    p.add_argument("--model", default=None, help="model file (default: <out>/model.json)")
    p.add_argument("--input", required=True, help="feature table to score")

    p = add("synth", cmd_synth, "generate a synthetic labeled dataset")
    p.add_argument("--rows", type=int, default=9200)
    p.add_argument("--ratio", type=float, default=45.0)
    p.add_argument("--informative", type=int, default=4)
    p.add_argument("--noise", type=int, default=6)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = load_config(args.config, seed_override=args.seed, out_override=args.out)
        return args.func(cfg, args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 0
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc}", file=sys.stderr)
        return 2
    except HyperForestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except Exception:
        traceback.print_exc()
        return 3


if __name__ == "__main__":
    sys.exit(main())
