"""The hyper-forest: one forest per balanced subsample, voting together.

Each member forest sees every minority (C) training row and one chunk of
the majority (NC) rows, so the ensemble as a whole has read the entire
training set while each member trains on a balanced sample. The ensemble
scores a row by the fraction of member forests whose majority vote is
NC, and classifies it NC when that fraction strictly exceeds the
calibrated threshold.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import LengthMismatch, SchemaMismatch, ThresholdUnset
from .forest import ForestModel, ForestParams, ImportanceVector, permutation_importance, predict_forest_labels, train_forest
from .records import FeatureSchema, Label

# Spread between member-forest base seeds; large enough that per-tree
# seeds (base + tree index) never collide across forests.
FOREST_SEED_STRIDE = 1_000_003


@dataclass
class HyperForestModel:
    """Voting ensemble of per-subsample forests plus calibration state."""

    schema: FeatureSchema
    params: ForestParams
    seed: int
    forests: list[ForestModel] = field(default_factory=list)
    subsample_rows: list[np.ndarray] = field(default_factory=list)
    theta: float | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def n_forests(self) -> int:
        return len(self.forests)

    def require_schema(self, schema: FeatureSchema) -> None:
        if schema != self.schema:
            raise SchemaMismatch(
                "dataset schema does not match the schema the model was trained on"
            )


def forest_seed(base_seed: int, forest_index: int) -> int:
    return base_seed + FOREST_SEED_STRIDE * forest_index


def train_hyper_forest(X, y01, schema: FeatureSchema, subsamples,
                       params: ForestParams, seed: int) -> HyperForestModel:
    """Train one forest per balanced subsample.

    ``subsamples`` is the list of :class:`~hyperforest.splitting.BalancedSubsample`
    produced from the training split. Member forest i trains on its
    subsample's rows with base seed ``seed + i * FOREST_SEED_STRIDE``.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y01 = np.asarray(y01, dtype=np.uint8)
    model = HyperForestModel(schema=schema, params=params, seed=seed)
    for i, sub in enumerate(subsamples):
        rows = sub.row_indices
        forest = train_forest(
            X[rows], y01[rows], schema, params, forest_seed(seed, i)
        )
        model.forests.append(forest)
        model.subsample_rows.append(rows)
    model.metadata = {
        "n_forests": model.n_forests,
        "trees_per_forest": params.trees,
        "subsample_size": int(subsamples[0].row_indices.size) if subsamples else 0,
    }
    return model


@dataclass(frozen=True)
class VoteTally:
    """Votes for NC out of the total member count."""

    nc_votes: int
    total: int

    @property
    def probability(self) -> float:
        return self.nc_votes / self.total


def ensemble_votes(model: HyperForestModel, X) -> np.ndarray:
    """Per row, how many member forests vote NC."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    votes = np.zeros(X.shape[0], dtype=np.int64)
    for forest in model.forests:
        votes += predict_forest_labels(forest, X)
    return votes


def vote_fractions(model: HyperForestModel, X) -> np.ndarray:
    """P(NC | x) as the fraction of member forests voting NC."""
    return ensemble_votes(model, X) / model.n_forests


def vote_probability(model: HyperForestModel, x_row) -> VoteTally:
    """Tally the member votes for a single row."""
    x = np.asarray(x_row, dtype=np.float64).reshape(1, -1)
    nc = int(ensemble_votes(model, x)[0])
    return VoteTally(nc_votes=nc, total=model.n_forests)


def classify_with_threshold(model: HyperForestModel, X, theta: float | None = None) -> np.ndarray:
    """Label rows NC (1) when the vote fraction strictly exceeds theta.

    Without an explicit ``theta`` the model's calibrated threshold is
    used; asking before calibration is an error.
    """
    if theta is None:
        theta = model.theta
    if theta is None:
        raise ThresholdUnset("no calibrated threshold on the model and none given")
    return (vote_fractions(model, X) > theta).astype(np.uint8)


def classify_labels(model: HyperForestModel, X, theta: float | None = None) -> list[Label]:
    return [Label.NC if v else Label.C for v in classify_with_threshold(model, X, theta)]


def aggregate_importance(model: HyperForestModel, X, y01) -> ImportanceVector:
    """Ensemble importance: the member importances averaged.

    Each member forest's permutation importance is computed on its own
    training subsample (out-of-bag within each tree), then averaged
    across members with equal weight.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y01 = np.asarray(y01, dtype=np.uint8)
    if X.shape[0] != y01.size:
        raise LengthMismatch("matrix and labels disagree on row count")
    totals = np.zeros(len(model.schema), dtype=np.float64)
    used = skipped = 0
    for forest, rows in zip(model.forests, model.subsample_rows):
        imp = permutation_importance(forest, X[rows], y01[rows])
        totals += imp.values
        used += imp.trees_used
        skipped += imp.trees_skipped
    return ImportanceVector(
        names=model.schema.names,
        values=totals / model.n_forests,
        trees_used=used,
        trees_skipped=skipped,
    )
