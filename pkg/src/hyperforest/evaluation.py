"""Evaluation: ROC analysis, threshold calibration, metrics, correlations.

NC is the positive class throughout. Vote fractions live on the
quantized grid {k/T : k = 0..T}, so the ROC curve is evaluated exactly
on that grid plus sentinels just outside [0, 1]; the area under it then
equals the Mann-Whitney statistic with ties counted half.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ClassAbsent, LengthMismatch


@dataclass
class RocCurve:
    """Operating points ordered by descending threshold."""

    thresholds: np.ndarray
    fpr: np.ndarray
    tpr: np.ndarray
    auc: float

    def __len__(self) -> int:
        return self.thresholds.size


def _check_pair(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    scores = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=np.uint8)
    if scores.shape != y.shape or scores.ndim != 1:
        raise LengthMismatch("scores and labels must be 1-d and equal length")
    if not (y == 1).any() or not (y == 0).any():
        raise ClassAbsent("ROC needs rows from both classes")
    return scores, y


def roc_curve(scores, labels, vote_count: int | None = None) -> RocCurve:
    """ROC over the quantized threshold grid.

    ``vote_count`` is the ensemble size T; the grid is then
    {k/T, k = T..0} with a sentinel above 1 and below 0 so the curve
    starts at (0, 0) and ends at (1, 1). Without it the grid falls back
    to the distinct scores. TPR counts NC rows with score strictly above
    the threshold; FPR counts C rows the same way.
    """
    scores, y = _check_pair(scores, labels)
    if vote_count is not None:
        eps = 1.0 / (2.0 * vote_count)
        grid = np.concatenate(
            [[1.0 + eps], np.arange(vote_count, -1, -1) / vote_count, [-eps]]
        )
    else:
        uniq = np.unique(scores)[::-1]
        span = max(1.0, float(np.abs(uniq).max()))
        grid = np.concatenate([[uniq[0] + span], uniq, [uniq[-1] - span]])

    pos = np.sort(scores[y == 1])
    neg = np.sort(scores[y == 0])
    # Count "score > theta" via binary search on each sorted class.
    tpr = (pos.size - np.searchsorted(pos, grid, side="right")) / pos.size
    fpr = (neg.size - np.searchsorted(neg, grid, side="right")) / neg.size
    auc = float(np.trapezoid(tpr, fpr))
    return RocCurve(thresholds=grid, fpr=fpr, tpr=tpr, auc=auc)


def mann_whitney_auc(scores, labels) -> float:
    """AUC as P(score_NC > score_C) + 0.5 P(tie), computed by ranking."""
    scores, y = _check_pair(scores, labels)
    pos = np.sort(scores[y == 1])
    neg = np.sort(scores[y == 0])
    below = np.searchsorted(neg, pos, side="left")
    ties = np.searchsorted(neg, pos, side="right") - below
    wins = below.sum() + 0.5 * ties.sum()
    return float(wins / (pos.size * neg.size))


@dataclass(frozen=True)
class CalibrationResult:
    """The chosen operating point on a calibration ROC curve."""

    theta: float
    tpr: float
    fpr: float
    auc: float


def select_best_threshold(curve: RocCurve) -> CalibrationResult:
    """Pick the grid threshold closest to the ideal corner (0, 1).

    Minimizes fpr^2 + (1 - tpr)^2; ties prefer the lower FPR, then the
    higher threshold. Sentinel thresholds outside [0, 1] are excluded.
    """
    inside = (curve.thresholds >= 0.0) & (curve.thresholds <= 1.0)
    thetas = curve.thresholds[inside]
    fpr = curve.fpr[inside]
    tpr = curve.tpr[inside]
    d2 = fpr * fpr + (1.0 - tpr) * (1.0 - tpr)
    order = np.lexsort((-thetas, fpr, d2))
    best = order[0]
    return CalibrationResult(
        theta=float(thetas[best]),
        tpr=float(tpr[best]),
        fpr=float(fpr[best]),
        auc=curve.auc,
    )


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts with NC as the positive class."""

    tp: int  # NC classified NC
    fn: int  # NC classified C
    fp: int  # C classified NC
    tn: int  # C classified C

    @property
    def total(self) -> int:
        return self.tp + self.fn + self.fp + self.tn

    def row_normalized(self) -> np.ndarray:
        """Rows = true class (NC first), normalized to row sums."""
        rows = np.array([[self.tp, self.fn], [self.fp, self.tn]], dtype=np.float64)
        sums = rows.sum(axis=1, keepdims=True)
        with np.errstate(invalid="ignore"):
            out = rows / sums
        return out


def confusion_matrix(predicted, actual) -> ConfusionMatrix:
    """Tally predictions against actuals (both 1 = NC coded)."""
    pred = np.asarray(predicted, dtype=np.uint8)
    act = np.asarray(actual, dtype=np.uint8)
    if pred.shape != act.shape or pred.ndim != 1:
        raise LengthMismatch("predictions and actuals must be 1-d and equal length")
    tp = int(((pred == 1) & (act == 1)).sum())
    fn = int(((pred == 0) & (act == 1)).sum())
    fp = int(((pred == 1) & (act == 0)).sum())
    tn = int(((pred == 0) & (act == 0)).sum())
    return ConfusionMatrix(tp=tp, fn=fn, fp=fp, tn=tn)


@dataclass(frozen=True)
class MetricsReport:
    """Headline metrics; a metric whose denominator is zero is None."""

    accuracy: float | None
    balanced_accuracy: float | None
    nc_accuracy: float | None
    c_accuracy: float | None
    precision: float | None
    recall: float | None
    f1: float | None
    auc: float | None = None


def _ratio(num: int, den: int) -> float | None:
    return num / den if den else None


def metrics_suite(cm: ConfusionMatrix, auc: float | None = None) -> MetricsReport:
    """Compute the headline metrics from a confusion matrix.

    Balanced accuracy is the plain mean of the two per-class accuracies;
    any metric with a zero denominator is reported absent rather than 0.
    """
    nc_acc = _ratio(cm.tp, cm.tp + cm.fn)
    c_acc = _ratio(cm.tn, cm.tn + cm.fp)
    precision = _ratio(cm.tp, cm.tp + cm.fp)
    recall = nc_acc
    f1 = None
    if precision is not None and recall is not None and precision + recall > 0:
        f1 = 2.0 * precision * recall / (precision + recall)
    bacc = None
    if nc_acc is not None and c_acc is not None:
        bacc = (nc_acc + c_acc) / 2.0
    return MetricsReport(
        accuracy=_ratio(cm.tp + cm.tn, cm.total),
        balanced_accuracy=bacc,
        nc_accuracy=nc_acc,
        c_accuracy=c_acc,
        precision=precision,
        recall=recall,
        f1=f1,
        auc=auc,
    )


@dataclass(frozen=True)
class SweepRow:
    theta: float
    precision: float | None
    recall: float | None
    nc_accuracy: float | None
    c_accuracy: float | None


def threshold_sweep(scores, labels, grid) -> list[SweepRow]:
    """Metrics at every threshold of ``grid`` (classify NC when
    score > theta)."""
    scores, y = _check_pair(scores, labels)
    rows = []
    for theta in np.asarray(grid, dtype=np.float64):
        pred = (scores > theta).astype(np.uint8)
        m = metrics_suite(confusion_matrix(pred, y))
        rows.append(
            SweepRow(
                theta=float(theta),
                precision=m.precision,
                recall=m.recall,
                nc_accuracy=m.nc_accuracy,
                c_accuracy=m.c_accuracy,
            )
        )
    return rows


def class_correlation_matrices(X, y01, schema) -> tuple[np.ndarray, np.ndarray]:
    """Pearson correlations of numeric features within each class.

    Returns (corr_C, corr_NC). A feature with zero variance inside a
    class yields NaN in its row and column (diagonal stays 1), and
    categorical columns are excluded entirely; use
    :func:`numeric_feature_names` for the axis labels.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y01, dtype=np.uint8)
    cols = [i for i, s in enumerate(schema) if s.kind == "numeric"]
    out = []
    for cls in (0, 1):
        rows = X[np.ix_(y == cls, cols)]
        if rows.shape[0] < 2:
            raise ClassAbsent("need at least two rows per class for correlations")
        centered = rows - rows.mean(axis=0)
        sd = centered.std(axis=0)
        k = len(cols)
        corr = np.full((k, k), np.nan)
        ok = sd > 0
        if ok.any():
            z = centered[:, ok] / sd[ok]
            corr[np.ix_(ok, ok)] = (z.T @ z) / rows.shape[0]
        np.fill_diagonal(corr, 1.0)
        corr = np.clip(corr, -1.0, 1.0)
        out.append(corr)
    return out[0], out[1]


def numeric_feature_names(schema) -> tuple[str, ...]:
    return tuple(s.name for s in schema if s.kind == "numeric")
