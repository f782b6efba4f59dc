"""Tab-delimited report writers.

Every file is UTF-8 with a header row and a fixed, documented column
order. Missing values (metrics with zero denominators, undefined
correlations) are written as NA. Floats are written with repr so reading
them back loses nothing.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .evaluation import ConfusionMatrix, MetricsReport, RocCurve
from .forest import ImportanceVector
from .ingestion import CurationReport
from .rfe import RfeTrace, presentation_order

NA = "NA"


def fmt_cell(value) -> str:
    if value is None:
        return NA
    if isinstance(value, float):
        if value != value:  # NaN
            return NA
        # NumPy scalars subclass float but repr as np.float64(...).
        return repr(float(value))
    return str(value)


def _write_rows(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["\t".join(header)]
    lines.extend("\t".join(fmt_cell(cell) for cell in row) for row in rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_roc(path, curve: RocCurve) -> Path:
    """Columns: theta, fpr, tpr. Sentinel rows are kept so the curve
    spans (0,0) to (1,1)."""
    rows = zip(curve.thresholds.tolist(), curve.fpr.tolist(), curve.tpr.tolist())
    return _write_rows(path, ("theta", "fpr", "tpr"), rows)


def write_metrics(path, report: MetricsReport, theta: float | None = None) -> Path:
    """Long format: metric, value."""
    rows = [
        ("accuracy", report.accuracy),
        ("balanced_accuracy", report.balanced_accuracy),
        ("nc_accuracy", report.nc_accuracy),
        ("c_accuracy", report.c_accuracy),
        ("precision", report.precision),
        ("recall", report.recall),
        ("f1", report.f1),
        ("auc", report.auc),
    ]
    if theta is not None:
        rows.append(("theta", theta))
    return _write_rows(path, ("metric", "value"), rows)


def write_confusion(path, cm: ConfusionMatrix) -> Path:
    """Counts and row-normalized shares, true class first."""
    norm = cm.row_normalized()
    rows = [
        ("NC", "NC", cm.tp, norm[0, 0]),
        ("NC", "C", cm.fn, norm[0, 1]),
        ("C", "NC", cm.fp, norm[1, 0]),
        ("C", "C", cm.tn, norm[1, 1]),
    ]
    return _write_rows(path, ("actual", "predicted", "count", "share"), rows)


def write_sweep(path, sweep_rows) -> Path:
    rows = [
        (r.theta, r.precision, r.recall, r.nc_accuracy, r.c_accuracy)
        for r in sweep_rows
    ]
    return _write_rows(
        path, ("theta", "precision", "recall", "nc_accuracy", "c_accuracy"), rows
    )


def write_importance(path, imp: ImportanceVector) -> Path:
    """Features in descending importance; ties keep schema order."""
    rows = [(name, value) for name, value in imp.ranking()]
    return _write_rows(path, ("feature", "importance"), rows)


def write_correlation(path, names, matrix) -> Path:
    """Square matrix with feature names on both axes."""
    matrix = np.asarray(matrix)
    header = ("feature", *names)
    rows = [(name, *matrix[i].tolist()) for i, name in enumerate(names)]
    return _write_rows(path, header, rows)


def write_curation(path, report: CurationReport) -> Path:
    rows = [("total_rows", report.total_rows), ("accepted", report.accepted)]
    rows.extend(
        (f"rejected:{reason}", count) for reason, count in sorted(report.rejected.items())
    )
    return _write_rows(path, ("item", "count"), rows)


RFE_HEADER = (
    "n_features",
    "balanced_accuracy",
    "nc_accuracy",
    "c_accuracy",
    "theta",
    "auc",
    "eliminated",
    "features",
)


def rfe_stage_row(stage) -> tuple:
    return (
        stage.n_features,
        stage.balanced_accuracy,
        stage.nc_accuracy,
        stage.c_accuracy,
        stage.theta,
        stage.auc,
        stage.eliminated,
        ",".join(stage.features),
    )


def write_rfe(path, trace: RfeTrace) -> Path:
    """Baseline row first, then stages from fewest features to most."""
    rows = [
        (
            0,
            trace.baseline_balanced_accuracy,
            trace.baseline_nc_accuracy,
            trace.baseline_c_accuracy,
            None,
            None,
            NA,
            "random",
        )
    ]
    rows.extend(rfe_stage_row(s) for s in presentation_order(trace))
    return _write_rows(path, RFE_HEADER, rows)


def write_predictions(path, probabilities, labels) -> Path:
    """Per input row: P(NC|x) and the label at the model's threshold."""
    rows = [
        (i, float(p), "NC" if lab else "C")
        for i, (p, lab) in enumerate(zip(probabilities, labels))
    ]
    return _write_rows(path, ("row", "p_nc", "label"), rows)
