"""CART trees, bagged forests, permutation importance."""

import numpy as np
import pytest

from hyperforest.errors import ConfigError, EmptyNode, NoOobRows
from hyperforest.forest import (
    ForestModel,
    ForestParams,
    Tree,
    find_best_split,
    forest_votes,
    gini_impurity,
    grow_tree,
    permutation_importance,
    predict_forest_labels,
    predict_forest_proba,
    schema_arrays,
    train_forest,
    tree_apply,
)
from hyperforest.records import FeatureSchema, FeatureSpec
from oracles import grow_tree as oracle_grow
from oracles import predict as oracle_predict


def numeric_schema(p):
    return FeatureSchema(tuple(FeatureSpec(f"x{j}", "numeric") for j in range(p)))


def mixed_schema():
    return FeatureSchema(
        (
            FeatureSpec("lv", "categorical", ("A", "B", "C", "D")),
            FeatureSpec("x", "numeric"),
        )
    )


# ---------------------------------------------------------------- gini

def test_gini_values():
    assert gini_impurity([3, 1]) == pytest.approx(0.375)
    assert gini_impurity([4, 0]) == 0.0
    assert gini_impurity([2, 2]) == pytest.approx(0.5)


def test_gini_empty_node():
    with pytest.raises(EmptyNode):
        gini_impurity([0, 0])


# ---------------------------------------------------------------- params

def test_params_resolved_mtry():
    assert ForestParams().resolved_mtry(19) == 4
    assert ForestParams().resolved_mtry(4) == 2
    assert ForestParams().resolved_mtry(1) == 1
    assert ForestParams(features_per_split=7).resolved_mtry(19) == 7
    assert ForestParams(features_per_split=30).resolved_mtry(19) == 19


def test_params_validation():
    with pytest.raises(ConfigError):
        ForestParams(trees=0)
    with pytest.raises(ConfigError):
        ForestParams(min_node_size=0)
    with pytest.raises(ConfigError):
        ForestParams(features_per_split=0)


def test_schema_arrays():
    kinds, n_levels = schema_arrays(mixed_schema())
    assert kinds.tolist() == [1, 0]
    assert n_levels.tolist() == [4, 0]


# ---------------------------------------------------------------- splits

def _split(X, y, kinds, n_levels, **kw):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.uint8)
    feats = np.arange(X.shape[1])
    return find_best_split(
        X,
        y,
        None,
        feats,
        np.asarray(kinds, dtype=np.uint8),
        np.asarray(n_levels, dtype=np.int64),
        **kw,
    )


def test_numeric_split_at_midpoint():
    rule = _split([[2.0], [3.0], [7.0], [8.0]], [0, 0, 1, 1], [0], [0])
    assert rule.kind == "numeric"
    assert rule.feature == 0
    assert rule.threshold == 5.0
    assert rule.decrease == pytest.approx(0.5)
    assert (rule.n_left, rule.n_right) == (2, 2)


def test_categorical_split_isolates_pure_level():
    # Level A all C; levels B and C all NC.
    rule = _split([[0.0], [0.0], [1.0], [2.0]], [0, 0, 1, 1], [1], [3])
    assert rule.kind == "categorical"
    assert rule.left_levels == (0,)
    assert rule.decrease == pytest.approx(0.5)


def test_split_none_on_pure_node():
    assert _split([[1.0], [2.0]], [1, 1], [0], [0]) is None
    assert _split([[1.0], [2.0]], [0, 0], [0], [0]) is None


def test_split_none_on_constant_features():
    assert _split([[5.0], [5.0], [5.0]], [0, 1, 1], [0], [0]) is None


def test_split_none_when_node_too_small():
    assert (
        _split([[1.0], [2.0], [3.0], [4.0]], [0, 0, 1, 1], [0], [0], min_node_size=3)
        is None
    )


def test_split_ties_break_to_lower_feature():
    # Both columns separate perfectly; feature 0 must win.
    X = [[1.0, 10.0], [2.0, 20.0], [7.0, 70.0], [9.0, 90.0]]
    rule = _split(X, [0, 0, 1, 1], [0, 0], [0, 0])
    assert rule.feature == 0


def test_split_respects_min_node_size():
    X = [[float(i)] for i in range(6)]
    rule = _split(X, [0, 1, 1, 1, 1, 1], [0], [0], min_node_size=2)
    assert rule is not None
    assert min(rule.n_left, rule.n_right) >= 2


def test_exhaustive_matches_ordering_trick():
    # For binary Gini the NC-proportion ordering is exactly optimal, so
    # both searches must land on the same impurity decrease.
    rng = np.random.default_rng(33)
    for _ in range(50):
        n = int(rng.integers(4, 20))
        n_lev = int(rng.integers(2, 6))
        X = rng.integers(0, n_lev, (n, 1)).astype(np.float64)
        y = rng.integers(0, 2, n).astype(np.uint8)
        a = _split(X, y, [1], [n_lev], exhaustive=False)
        b = _split(X, y, [1], [n_lev], exhaustive=True)
        if a is None or b is None:
            assert a is None and b is None
            continue
        # Distinct optimal partitions can tie; the achieved decrease
        # must still agree exactly.
        assert a.decrease == b.decrease


# ---------------------------------------------------------------- trees

def _grow(X, y, kinds, n_levels, seed=0, **params):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.uint8)
    p = ForestParams(trees=1, features_per_split=X.shape[1], **params)
    return grow_tree(
        X,
        y,
        np.asarray(kinds, dtype=np.uint8),
        np.asarray(n_levels, dtype=np.int64),
        p,
        np.random.default_rng(seed),
    )


def test_tree_fits_separable_data():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((40, 2))
    y = (X[:, 0] + X[:, 1] > 0).astype(np.uint8)
    tree = _grow(X, y, [0, 0], [0, 0])
    assert np.array_equal(tree_apply(tree, X), y)


def test_tree_on_identical_rows_is_single_majority_leaf():
    X = np.ones((5, 2))
    y = np.array([0, 0, 0, 1, 1], dtype=np.uint8)
    tree = _grow(X, y, [0, 0], [0, 0])
    assert tree.n_nodes == 1
    assert tree_apply(tree, X).tolist() == [0] * 5


def test_leaf_tie_goes_to_nc():
    X = np.ones((4, 1))
    y = np.array([0, 0, 1, 1], dtype=np.uint8)
    tree = _grow(X, y, [0], [0])
    assert tree.n_nodes == 1
    assert tree_apply(tree, X).tolist() == [1] * 4


def test_tree_counts_track_training_rows():
    rng = np.random.default_rng(5)
    X = rng.standard_normal((30, 2))
    y = rng.integers(0, 2, 30).astype(np.uint8)
    tree = _grow(X, y, [0, 0], [0, 0])
    assert tree.count_c[0] + tree.count_nc[0] == 30
    assert tree.count_nc[0] == int(y.sum())


def test_unseen_level_routes_to_heavier_child():
    # Level 0 (3 C rows) vs level 1 (2 NC rows): left child is heavier.
    X = np.array([[0.0]] * 3 + [[1.0]] * 2)
    y = np.array([0, 0, 0, 1, 1], dtype=np.uint8)
    tree = _grow(X, y, [1], [4])
    assert tree.n_nodes == 3
    out = tree_apply(tree, np.array([[-1.0], [2.0], [3.0]]))
    assert out.tolist() == [0, 0, 0]  # heavier child is the C side
    # Observed levels still route normally.
    assert tree_apply(tree, np.array([[0.0], [1.0]])).tolist() == [0, 1]


def test_tree_matches_oracle_on_small_datasets():
    rng = np.random.default_rng(44)
    for trial in range(25):
        n = int(rng.integers(2, 9))
        p = int(rng.integers(1, 4))
        kinds = [int(rng.integers(0, 2)) for _ in range(p)]
        n_levels = [4 if k else 0 for k in kinds]
        cols = []
        for k in kinds:
            if k:
                cols.append(rng.integers(0, 4, n).astype(np.float64))
            else:
                cols.append(rng.integers(0, 5, n).astype(np.float64))
        X = np.column_stack(cols)
        y = rng.integers(0, 2, n).astype(np.uint8)
        tree = _grow(X, y, kinds, n_levels, seed=trial, exhaustive_categorical=True)
        onode = oracle_grow([[int(v) for v in row] for row in X], y.tolist(), kinds)
        grid = np.array(
            np.meshgrid(*[np.arange(4 if k else 5) for k in kinds])
        ).reshape(p, -1).T.astype(np.float64)
        got = tree_apply(tree, grid)
        want = [oracle_predict(onode, row) for row in grid.tolist()]
        assert got.tolist() == want, f"trial {trial}"


# ---------------------------------------------------------------- forests

def _toy_problem(n=300, seed=7):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, 3))
    y = (X[:, 0] > 0.2).astype(np.uint8)
    return X, y


def test_forest_trains_and_predicts():
    X, y = _toy_problem()
    model = train_forest(X, y, numeric_schema(3), ForestParams(trees=25), seed=5)
    assert model.n_trees == 25
    acc = float((predict_forest_labels(model, X) == y).mean())
    assert acc > 0.95


def test_forest_oob_fraction_near_e_inverse():
    X, y = _toy_problem(n=500)
    model = train_forest(X, y, numeric_schema(3), ForestParams(trees=40), seed=1)
    fractions = [len(oob) / 500 for oob in model.oob]
    assert abs(np.mean(fractions) - 0.368) < 0.03


def test_forest_deterministic_given_seed():
    X, y = _toy_problem(n=150)
    a = train_forest(X, y, numeric_schema(3), ForestParams(trees=10), seed=9)
    b = train_forest(X, y, numeric_schema(3), ForestParams(trees=10), seed=9)
    assert np.array_equal(forest_votes(a, X), forest_votes(b, X))
    for ta, tb in zip(a.trees, b.trees):
        assert np.array_equal(ta.feature, tb.feature)
        assert np.array_equal(ta.threshold, tb.threshold)
    c = train_forest(X, y, numeric_schema(3), ForestParams(trees=10), seed=10)
    assert not np.array_equal(forest_votes(a, X), forest_votes(c, X))


def test_forest_proba_is_vote_fraction():
    X, y = _toy_problem(n=100)
    model = train_forest(X, y, numeric_schema(3), ForestParams(trees=8), seed=3)
    votes = forest_votes(model, X)
    assert np.array_equal(predict_forest_proba(model, X), votes / 8)


def _leaf_tree(label):
    z = lambda dt: np.zeros(1, dtype=dt)
    return Tree(
        feature=np.array([-1], dtype=np.int32),
        threshold=np.zeros(1),
        is_categorical=z(bool),
        left_mask=z(np.uint64),
        obs_mask=z(np.uint64),
        heavy_left=z(bool),
        left=np.array([-1], dtype=np.int32),
        right=np.array([-1], dtype=np.int32),
        leaf_label=np.array([label], dtype=np.uint8),
        count_c=np.ones(1, dtype=np.int64),
        count_nc=np.ones(1, dtype=np.int64),
    )


def test_forest_vote_tie_goes_to_nc():
    model = ForestModel(
        schema=numeric_schema(1),
        params=ForestParams(trees=2),
        seed=0,
        trees=[_leaf_tree(0), _leaf_tree(1)],
        oob=[np.array([], dtype=np.int64)] * 2,
        n_train=2,
    )
    X = np.zeros((3, 1))
    assert forest_votes(model, X).tolist() == [1, 1, 1]
    assert predict_forest_labels(model, X).tolist() == [1, 1, 1]


# ---------------------------------------------------------------- importance

def _importance_problem(n=400, seed=12):
    rng = np.random.default_rng(seed)
    X = np.column_stack(
        [
            rng.standard_normal(n),  # informative
            rng.standard_normal(n),  # noise
            np.full(n, 3.25),  # constant
        ]
    )
    y = (X[:, 0] > 0).astype(np.uint8)
    return X, y


def test_importance_orders_planted_above_noise():
    X, y = _importance_problem()
    model = train_forest(X, y, numeric_schema(3), ForestParams(trees=40), seed=2)
    imp = permutation_importance(model, X, y)
    assert imp.names == ("x0", "x1", "x2")
    assert imp.values[0] > imp.values[1]
    assert imp.values[0] > 0.2
    assert abs(imp.values[1]) < 0.02


def test_importance_constant_feature_exactly_zero():
    X, y = _importance_problem()
    model = train_forest(X, y, numeric_schema(3), ForestParams(trees=30), seed=4)
    imp = permutation_importance(model, X, y)
    assert imp.values[2] == 0.0
    assert imp.trees_used == 30
    assert imp.trees_skipped == 0


def test_importance_sole_informative_tracks_oob_accuracy():
    # Shuffling the only informative column sends accuracy to chance, so
    # its importance is close to OOB accuracy minus one half.
    rng = np.random.default_rng(9)
    n = 500
    X = rng.standard_normal((n, 1))
    y = (X[:, 0] > 0).astype(np.uint8)
    model = train_forest(X, y, numeric_schema(1), ForestParams(trees=50), seed=6)
    imp = permutation_importance(model, X, y)
    oob_acc = []
    for tree, oob in zip(model.trees, model.oob):
        if len(oob):
            oob_acc.append(float((tree_apply(tree, X[oob]) == y[oob]).mean()))
    assert imp.values[0] == pytest.approx(np.mean(oob_acc) - 0.5, abs=0.05)


def test_importance_ranking_sorted():
    X, y = _importance_problem()
    model = train_forest(X, y, numeric_schema(3), ForestParams(trees=20), seed=8)
    ranking = permutation_importance(model, X, y).ranking()
    values = [v for _, v in ranking]
    assert values == sorted(values, reverse=True)
    assert ranking[0][0] == "x0"


def test_importance_deterministic():
    X, y = _importance_problem(n=200)
    model = train_forest(X, y, numeric_schema(3), ForestParams(trees=15), seed=3)
    a = permutation_importance(model, X, y)
    b = permutation_importance(model, X, y)
    assert np.array_equal(a.values, b.values)


def test_importance_requires_oob_rows():
    model = ForestModel(
        schema=numeric_schema(1),
        params=ForestParams(trees=1),
        seed=0,
        trees=[_leaf_tree(1)],
        oob=[np.array([], dtype=np.int64)],
        n_train=4,
    )
    with pytest.raises(NoOobRows):
        permutation_importance(model, np.zeros((4, 1)), np.ones(4, dtype=np.uint8))
