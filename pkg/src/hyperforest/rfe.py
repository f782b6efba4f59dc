"""Recursive feature elimination over the full train/calibrate/evaluate loop.

Each stage trains a hyper-forest on the surviving features, calibrates
its threshold on the calibration split, measures test metrics, then
drops the least important feature by ensemble permutation importance.
Splits and subsamples stay fixed across stages so stages differ only in
the feature set.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .datasets import FeatureTable
from .ensemble import (
    HyperForestModel,
    aggregate_importance,
    classify_with_threshold,
    train_hyper_forest,
    vote_fractions,
)
from .errors import ConfigError
from .evaluation import confusion_matrix, metrics_suite, roc_curve, select_best_threshold
from .forest import ForestParams


@dataclass(frozen=True)
class RfeStage:
    """One elimination round, recorded before the feature is dropped."""

    n_features: int
    features: tuple[str, ...]
    eliminated: str
    theta: float
    auc: float
    nc_accuracy: float | None
    c_accuracy: float | None
    balanced_accuracy: float | None


@dataclass
class RfeTrace:
    """All stages plus the class-prior baseline for the report."""

    stages: list[RfeStage] = field(default_factory=list)
    baseline_nc_accuracy: float = 0.0
    baseline_c_accuracy: float = 0.0
    baseline_balanced_accuracy: float = 0.5

    def best_stage(self) -> RfeStage:
        """Highest balanced accuracy; ties go to the smaller feature set."""
        best = None
        for stage in self.stages:
            if stage.balanced_accuracy is None:
                continue
            if (
                best is None
                or stage.balanced_accuracy > best.balanced_accuracy
                or (
                    stage.balanced_accuracy == best.balanced_accuracy
                    and stage.n_features < best.n_features
                )
            ):
                best = stage
        if best is None:
            raise ConfigError("no stage produced a defined balanced accuracy")
        return best


def _least_important(names, values) -> str:
    """Name of the feature to drop: minimal importance, ties broken
    toward the later schema position so earlier columns survive."""
    values = np.asarray(values)
    worst = values.min()
    for i in range(len(names) - 1, -1, -1):
        if values[i] == worst:
            return names[i]
    raise AssertionError("unreachable")


def run_rfe(table: FeatureTable, train_idx, cal_idx, test_idx, subsamples,
            params: ForestParams, seed: int, stage_callback=None):
    """Run the elimination loop down to a single feature.

    Returns ``(trace, best_features, best_model)`` where ``best_model``
    is the already-trained, already-calibrated model of the best stage
    (re-training it with the same seed would rebuild it identically).
    ``stage_callback``, when given, receives each :class:`RfeStage` as
    soon as it is complete so callers can persist progress crash-safely.
    """
    y = table.labels()
    train_idx = np.asarray(train_idx, dtype=np.int64)
    cal_idx = np.asarray(cal_idx, dtype=np.int64)
    test_idx = np.asarray(test_idx, dtype=np.int64)

    y_full = y
    prior_nc = float((y_full == 1).mean())
    trace = RfeTrace(
        baseline_nc_accuracy=prior_nc,
        baseline_c_accuracy=1.0 - prior_nc,
        baseline_balanced_accuracy=0.5,
    )

    remaining = list(table.schema.names)
    best_stage = None
    best_model = None
    while remaining:
        sub = table.subset_columns(remaining)
        model = train_hyper_forest(
            sub.X, y, sub.schema, subsamples, params, seed
        )
        cal_scores = vote_fractions(model, sub.X[cal_idx])
        curve = roc_curve(cal_scores, y[cal_idx], vote_count=model.n_forests)
        calib = select_best_threshold(curve)
        model.theta = calib.theta

        pred = classify_with_threshold(model, sub.X[test_idx])
        report = metrics_suite(confusion_matrix(pred, y[test_idx]))

        if len(remaining) > 1:
            imp = aggregate_importance(model, sub.X, y)
            eliminated = _least_important(imp.names, imp.values)
        else:
            eliminated = remaining[0]

        stage = RfeStage(
            n_features=len(remaining),
            features=tuple(remaining),
            eliminated=eliminated,
            theta=calib.theta,
            auc=curve.auc,
            nc_accuracy=report.nc_accuracy,
            c_accuracy=report.c_accuracy,
            balanced_accuracy=report.balanced_accuracy,
        )
        trace.stages.append(stage)
        if stage_callback is not None:
            stage_callback(stage)

        if stage.balanced_accuracy is not None and (
            best_stage is None
            or stage.balanced_accuracy > best_stage.balanced_accuracy
            or (
                stage.balanced_accuracy == best_stage.balanced_accuracy
                and stage.n_features < best_stage.n_features
            )
        ):
            best_stage = stage
            best_model = model

        remaining.remove(eliminated)

    if best_stage is None or best_model is None:
        raise ConfigError("elimination produced no usable stage")
    return trace, list(best_stage.features), best_model


def presentation_order(trace: RfeTrace) -> list[RfeStage]:
    """Stages from fewest features to most, the order reports print."""
    return sorted(trace.stages, key=lambda s: s.n_features)
