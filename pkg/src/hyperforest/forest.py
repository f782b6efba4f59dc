"""Classification trees and random forests grown from scratch.

Trees are unpruned CART: Gini impurity, numeric splits at midpoints of
consecutive distinct sorted values, categorical splits on subsets of
levels found by ordering levels by their NC proportion. Split scores are
compared with exact integer arithmetic so that equal-quality splits
always break ties the same way (lower feature index, then lower
threshold or cut position), no matter the floating-point noise of the
vectorized search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, EmptyNode, NoOobRows
from .records import FeatureSchema

EXHAUSTIVE_LEVEL_CAP = 16


def gini_impurity(counts) -> float:
    """Gini impurity 1 - sum((n_k / n)^2) of a class-count vector."""
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum()
    if total <= 0:
        raise EmptyNode("impurity of an empty node is undefined")
    frac = counts / total
    return float(1.0 - np.dot(frac, frac))


@dataclass(frozen=True)
class ForestParams:
    """Knobs for growing one forest."""

    trees: int = 500
    features_per_split: int | None = None  # None: floor(sqrt(p))
    min_node_size: int = 1
    exhaustive_categorical: bool = False

    def __post_init__(self):
        if self.trees < 1:
            raise ConfigError("a forest needs at least one tree")
        if self.min_node_size < 1:
            raise ConfigError("min_node_size must be at least 1")
        if self.features_per_split is not None and self.features_per_split < 1:
            raise ConfigError("features_per_split must be at least 1")

    def resolved_mtry(self, n_features: int) -> int:
        m = self.features_per_split or max(1, math.isqrt(n_features))
        return min(m, n_features)


@dataclass(frozen=True)
class SplitRule:
    """One chosen split: a feature plus either a threshold or a level subset."""

    feature: int
    kind: str  # "numeric" | "categorical"
    threshold: float | None
    left_levels: tuple[int, ...] | None
    decrease: float
    n_left: int
    n_right: int


def schema_arrays(schema: FeatureSchema):
    """Per-column kind flags (1 = categorical) and level counts."""
    kinds = np.array(
        [1 if s.kind == "categorical" else 0 for s in schema], dtype=np.uint8
    )
    n_levels = np.array(
        [len(s.levels) if s.kind == "categorical" else 0 for s in schema],
        dtype=np.int64,
    )
    return kinds, n_levels


class _Candidate:
    """A split candidate carrying the exact score num/den for tie-breaking."""

    __slots__ = ("num", "den", "feature", "key", "kind", "threshold", "left_levels", "n_left")

    def __init__(self, num, den, feature, key, kind, threshold, left_levels, n_left):
        self.num = num
        self.den = den
        self.feature = feature
        self.key = key
        self.kind = kind
        self.threshold = threshold
        self.left_levels = left_levels
        self.n_left = n_left

    def beats(self, other: "_Candidate") -> bool:
        lhs = self.num * other.den
        rhs = other.num * self.den
        if lhs != rhs:
            return lhs > rhs
        if self.feature != other.feature:
            return self.feature < other.feature
        return self.key < other.key


def _numeric_scores(cols, y01, mns):
    """Score every admissible cut of every column in one pass.

    Returns (scores, cut_info) where scores is a (cuts, m) float matrix
    with -inf at non-boundaries, or (None, None) when no cut can satisfy
    the min-node-size constraint.
    """
    n, m = cols.shape
    if n < 2 * mns:
        return None, None
    order = np.argsort(cols, axis=0, kind="stable")
    sv = np.take_along_axis(cols, order, axis=0)
    sy = y01[order]
    cum = np.cumsum(sy, axis=0, dtype=np.int64)
    total_nc = cum[-1]

    lo, hi = mns, n - mns  # admissible n1 range, inclusive
    sl = slice(lo - 1, hi)  # cut index i corresponds to n1 = i + 1
    boundary = sv[lo - 1 : hi] < sv[lo : hi + 1]

    n1 = np.arange(lo, hi + 1, dtype=np.float64)[:, None]
    nc1 = cum[sl].astype(np.float64)
    c1 = n1 - nc1
    nc2 = total_nc.astype(np.float64) - nc1
    n2 = n - n1
    c2 = n2 - nc2
    with np.errstate(invalid="ignore"):
        score = (c1 * c1 + nc1 * nc1) / n1 + (c2 * c2 + nc2 * nc2) / n2
    score[~boundary] = -np.inf
    return score, (sv, cum, lo)


def _numeric_candidates(score, cut_info, feats, n, total_nc, band_floor):
    sv, cum, lo = cut_info
    rows, cols_idx = np.nonzero(score >= band_floor)
    out = []
    for r, cidx in zip(rows.tolist(), cols_idx.tolist()):
        i = lo - 1 + r  # position in the sorted column
        n1 = i + 1
        nc1 = int(cum[i, cidx])
        c1 = n1 - nc1
        n2 = n - n1
        nc2 = int(total_nc[cidx]) - nc1
        c2 = n2 - nc2
        num = (c1 * c1 + nc1 * nc1) * n2 + (c2 * c2 + nc2 * nc2) * n1
        den = n1 * n2
        thr = (float(sv[i, cidx]) + float(sv[i + 1, cidx])) / 2.0
        out.append(
            _Candidate(num, den, int(feats[cidx]), thr, "numeric", thr, None, n1)
        )
    return out


def _categorical_scan(col, y01, n_lev, mns):
    """Order levels by NC proportion and score every prefix cut.

    Returns (scores, ordered_levels, cnt, ncc, present) or None when the
    column cannot split.
    """
    lv = col.astype(np.int64)
    cnt = np.bincount(lv, minlength=n_lev)
    ncc = np.bincount(lv, weights=y01, minlength=n_lev).astype(np.int64)
    present = np.flatnonzero(cnt)
    if present.size < 2:
        return None
    prop = ncc[present] / cnt[present]
    order = np.lexsort((present, prop))
    ordered = present[order]
    cn = np.cumsum(cnt[ordered])[:-1]
    cnc = np.cumsum(ncc[ordered])[:-1]

    n = int(cnt.sum())
    n1 = cn.astype(np.float64)
    nc1 = cnc.astype(np.float64)
    c1 = n1 - nc1
    n2 = n - n1
    nc2 = float(ncc.sum()) - nc1
    c2 = n2 - nc2
    with np.errstate(invalid="ignore", divide="ignore"):
        score = (c1 * c1 + nc1 * nc1) / n1 + (c2 * c2 + nc2 * nc2) / n2
    admissible = (cn >= mns) & ((n - cn) >= mns)
    score[~admissible] = -np.inf
    return score, ordered, cnt, ncc, cn, cnc


def _categorical_candidates(scan, feat, n, band_floor):
    score, ordered, cnt, ncc, cn, cnc = scan
    out = []
    for j in np.flatnonzero(score >= band_floor).tolist():
        n1 = int(cn[j])
        nc1 = int(cnc[j])
        c1 = n1 - nc1
        n2 = n - n1
        nc2 = int(ncc.sum()) - nc1
        c2 = n2 - nc2
        num = (c1 * c1 + nc1 * nc1) * n2 + (c2 * c2 + nc2 * nc2) * n1
        den = n1 * n2
        left = tuple(sorted(int(v) for v in ordered[: j + 1]))
        out.append(_Candidate(num, den, int(feat), j, "categorical", None, left, n1))
    return out


def _exhaustive_candidates(col, y01, n_lev, mns, feat):
    """Score every proper bipartition of the observed levels exactly.

    Intended for validating the ordering heuristic at small level
    counts; the first observed level is pinned to the left side to skip
    mirror-image duplicates.
    """
    lv = col.astype(np.int64)
    cnt = np.bincount(lv, minlength=n_lev)
    ncc = np.bincount(lv, weights=y01, minlength=n_lev).astype(np.int64)
    present = np.flatnonzero(cnt)
    K = present.size
    if K < 2:
        return []
    if K > EXHAUSTIVE_LEVEL_CAP:
        raise ConfigError(
            f"exhaustive categorical search is capped at {EXHAUSTIVE_LEVEL_CAP} "
            f"observed levels, node has {K}"
        )
    n = int(cnt.sum())
    total_nc = int(ncc.sum())
    cnts = cnt[present].tolist()
    nccs = ncc[present].tolist()
    out = []
    # Odd masks over K bits, minus all-ones: every proper bipartition
    # with present[0] pinned to the left side.
    for bits in range(1, (1 << K) - 1, 2):
        n1 = nc1 = 0
        b = bits
        i = 0
        while b:
            if b & 1:
                n1 += cnts[i]
                nc1 += nccs[i]
            b >>= 1
            i += 1
        n2 = n - n1
        if n1 < mns or n2 < mns:
            continue
        c1 = n1 - nc1
        nc2 = total_nc - nc1
        c2 = n2 - nc2
        num = (c1 * c1 + nc1 * nc1) * n2 + (c2 * c2 + nc2 * nc2) * n1
        den = n1 * n2
        left = tuple(int(present[i]) for i in range(K) if (bits >> i) & 1)
        out.append(_Candidate(num, den, int(feat), bits, "categorical", None, left, n1))
    return out


def find_best_split(X, y01, rows, feats, kinds, n_levels, min_node_size=1,
                    exhaustive=False) -> SplitRule | None:
    """Best Gini split of a node over the sampled features, or None.

    The vectorized float search narrows the field; every candidate
    within a hair of the float maximum is then re-scored with exact
    integers, so the winner (and the positivity of its impurity
    decrease) never depends on rounding. Ties break toward the lower
    feature index, then the lower threshold or cut position.
    """
    rows = np.arange(X.shape[0]) if rows is None else np.asarray(rows)
    feats = np.asarray(feats, dtype=np.int64)
    n = rows.size
    yk = y01[rows]
    nc_p = int(yk.sum())
    c_p = n - nc_p
    if n < 2 * min_node_size or nc_p == 0 or c_p == 0:
        return None

    num_feats = feats[kinds[feats] == 0]
    cat_feats = feats[kinds[feats] == 1]

    score_sources = []
    best_float = -np.inf
    num_score = cut_info = None
    if num_feats.size:
        cols = X[np.ix_(rows, num_feats)]
        num_score, cut_info = _numeric_scores(cols, yk, min_node_size)
        if num_score is not None and num_score.size:
            m = float(num_score.max())
            best_float = max(best_float, m)
    cat_scans = []
    if not exhaustive:
        for f in cat_feats.tolist():
            scan = _categorical_scan(X[rows, f], yk, int(n_levels[f]), min_node_size)
            cat_scans.append((f, scan))
            if scan is not None and scan[0].size:
                best_float = max(best_float, float(scan[0].max()))

    candidates: list[_Candidate] = []
    if exhaustive:
        for f in cat_feats.tolist():
            candidates.extend(
                _exhaustive_candidates(X[rows, f], yk, int(n_levels[f]), min_node_size, f)
            )
        if candidates:
            best_float = max(
                best_float, max(c.num / c.den for c in candidates)
            )

    if best_float == -np.inf and not candidates:
        return None
    band_floor = best_float - 1e-10 * max(1.0, abs(best_float))

    if num_score is not None:
        total_nc = cut_info[1][-1]
        candidates.extend(
            _numeric_candidates(num_score, cut_info, num_feats, n, total_nc, band_floor)
        )
    for f, scan in cat_scans:
        if scan is not None:
            candidates.extend(_categorical_candidates(scan, f, n, band_floor))

    if not candidates:
        return None
    best = candidates[0]
    for cand in candidates[1:]:
        if cand.beats(best):
            best = cand

    # Accept only a strictly positive impurity decrease, checked exactly:
    # score > (c_p^2 + nc_p^2) / n  <=>  num * n > parent_num * den.
    parent_num = c_p * c_p + nc_p * nc_p
    if best.num * n <= parent_num * best.den:
        return None

    decrease = (best.num / best.den - parent_num / n) / n
    return SplitRule(
        feature=best.feature,
        kind=best.kind,
        threshold=best.threshold,
        left_levels=best.left_levels,
        decrease=float(decrease),
        n_left=best.n_left,
        n_right=n - best.n_left,
    )


@dataclass
class Tree:
    """One grown tree in columnar form (index -1 marks 'leaf' links)."""

    feature: np.ndarray  # int32, -1 at leaves
    threshold: np.ndarray  # float64
    is_categorical: np.ndarray  # bool
    left_mask: np.ndarray  # uint64 bitmask of levels routed left
    obs_mask: np.ndarray  # uint64 bitmask of levels observed at the node
    heavy_left: np.ndarray  # bool, heavier child is the left one
    left: np.ndarray  # int32 child ids
    right: np.ndarray
    leaf_label: np.ndarray  # uint8, 1 = NC
    count_c: np.ndarray  # int64 training rows per node
    count_nc: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    def features_used(self) -> np.ndarray:
        internal = self.feature[self.feature >= 0]
        return np.unique(internal)


class _TreeBuilder:
    def __init__(self):
        self.feature = []
        self.threshold = []
        self.is_categorical = []
        self.left_mask = []
        self.obs_mask = []
        self.heavy_left = []
        self.left = []
        self.right = []
        self.leaf_label = []
        self.count_c = []
        self.count_nc = []

    def add(self, parent, is_right) -> int:
        node = len(self.feature)
        self.feature.append(-1)
        self.threshold.append(0.0)  # only read at numeric internal nodes
        self.is_categorical.append(False)
        self.left_mask.append(0)
        self.obs_mask.append(0)
        self.heavy_left.append(True)
        self.left.append(-1)
        self.right.append(-1)
        self.leaf_label.append(0)
        self.count_c.append(0)
        self.count_nc.append(0)
        if parent >= 0:
            if is_right:
                self.right[parent] = node
            else:
                self.left[parent] = node
        return node

    def freeze(self) -> Tree:
        return Tree(
            feature=np.array(self.feature, dtype=np.int32),
            threshold=np.array(self.threshold, dtype=np.float64),
            is_categorical=np.array(self.is_categorical, dtype=bool),
            left_mask=np.array(self.left_mask, dtype=np.uint64),
            obs_mask=np.array(self.obs_mask, dtype=np.uint64),
            heavy_left=np.array(self.heavy_left, dtype=bool),
            left=np.array(self.left, dtype=np.int32),
            right=np.array(self.right, dtype=np.int32),
            leaf_label=np.array(self.leaf_label, dtype=np.uint8),
            count_c=np.array(self.count_c, dtype=np.int64),
            count_nc=np.array(self.count_nc, dtype=np.int64),
        )


def _levels_mask(levels) -> int:
    mask = 0
    for lv in levels:
        mask |= 1 << int(lv)
    return mask


def grow_tree(X, y01, kinds, n_levels, params: ForestParams, rng) -> Tree:
    """Grow one unpruned tree on (X, y01).

    Nodes split while a strictly positive Gini decrease exists among the
    sampled features; leaves take the majority label with ties going to
    NC. The caller passes bootstrap rows already gathered.
    """
    n, p = X.shape
    if n == 0:
        raise EmptyNode("cannot grow a tree on zero rows")
    m = params.resolved_mtry(p)
    mns = params.min_node_size
    b = _TreeBuilder()
    stack = [(np.arange(n, dtype=np.int64), -1, False)]
    while stack:
        rows, parent, is_right = stack.pop()
        node = b.add(parent, is_right)
        yk = y01[rows]
        nc = int(yk.sum())
        c = rows.size - nc
        b.count_c[node] = c
        b.count_nc[node] = nc

        rule = None
        if nc and c and rows.size >= 2 * mns:
            feats = rng.permutation(p)[:m]
            rule = find_best_split(
                X, y01, rows, feats, kinds, n_levels,
                min_node_size=mns,
                exhaustive=params.exhaustive_categorical,
            )
        if rule is None:
            b.leaf_label[node] = 1 if nc >= c else 0
            continue

        col = X[rows, rule.feature]
        if rule.kind == "numeric":
            go_left = col <= rule.threshold
            b.threshold[node] = rule.threshold
        else:
            mask = _levels_mask(rule.left_levels)
            lv = col.astype(np.int64)
            go_left = (np.uint64(mask) >> lv.astype(np.uint64)) & np.uint64(1) > 0
            b.is_categorical[node] = True
            b.left_mask[node] = mask
            b.obs_mask[node] = _levels_mask(np.unique(lv))
        b.feature[node] = rule.feature
        left_rows = rows[go_left]
        right_rows = rows[~go_left]
        if left_rows.size == 0 or right_rows.size == 0:
            raise EmptyNode("split produced an empty child")
        b.heavy_left[node] = left_rows.size >= right_rows.size
        stack.append((right_rows, node, True))
        stack.append((left_rows, node, False))
    return b.freeze()


def tree_apply(tree: Tree, X) -> np.ndarray:
    """Label every row of X with the tree (1 = NC)."""
    n = X.shape[0]
    out = np.zeros(n, dtype=np.uint8)
    if n == 0:
        return out
    stack = [(0, np.arange(n, dtype=np.int64))]
    while stack:
        node, idx = stack.pop()
        f = tree.feature[node]
        if f < 0:
            out[idx] = tree.leaf_label[node]
            continue
        col = X[idx, f]
        if tree.is_categorical[node]:
            lv = col.astype(np.int64)
            known = (lv >= 0) & (lv < 64)
            shifted = np.where(known, lv, 0).astype(np.uint64)
            observed = known & (((tree.obs_mask[node] >> shifted) & np.uint64(1)) > 0)
            in_left = ((tree.left_mask[node] >> shifted) & np.uint64(1)) > 0
            go_left = np.where(observed, in_left, tree.heavy_left[node])
        else:
            go_left = col <= tree.threshold[node]
        left_idx = idx[go_left]
        right_idx = idx[~go_left]
        if left_idx.size:
            stack.append((int(tree.left[node]), left_idx))
        if right_idx.size:
            stack.append((int(tree.right[node]), right_idx))
    return out


@dataclass
class ForestModel:
    """A bagged ensemble of trees plus everything needed to reproduce it."""

    schema: FeatureSchema
    params: ForestParams
    seed: int
    trees: list = field(default_factory=list)
    oob: list = field(default_factory=list)  # per-tree OOB row positions
    n_train: int = 0

    @property
    def n_trees(self) -> int:
        return len(self.trees)


def train_forest(X, y01, schema: FeatureSchema, params: ForestParams, seed: int) -> ForestModel:
    """Train a forest of bootstrap trees.

    Tree t draws its bootstrap and feature samples from a generator
    seeded with ``seed + t``, so any tree can be regrown independently
    and the whole forest is reproducible row for row.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y01 = np.asarray(y01, dtype=np.uint8)
    n = X.shape[0]
    if n == 0:
        raise EmptyNode("cannot train on an empty dataset")
    kinds, n_levels = schema_arrays(schema)
    model = ForestModel(schema=schema, params=params, seed=seed, n_train=n)
    all_rows = np.arange(n, dtype=np.int64)
    for t in range(params.trees):
        rng = np.random.default_rng(seed + t)
        boot = rng.integers(0, n, size=n)
        oob = np.setdiff1d(all_rows, boot)
        tree = grow_tree(X[boot], y01[boot], kinds, n_levels, params, rng)
        model.trees.append(tree)
        model.oob.append(oob)
    return model


def forest_votes(model: ForestModel, X) -> np.ndarray:
    """Count of trees voting NC for each row."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    votes = np.zeros(X.shape[0], dtype=np.int64)
    for tree in model.trees:
        votes += tree_apply(tree, X)
    return votes


def predict_forest_proba(model: ForestModel, X) -> np.ndarray:
    """Fraction of trees voting NC, per row."""
    return forest_votes(model, X) / model.n_trees


def predict_forest_labels(model: ForestModel, X) -> np.ndarray:
    """Majority-vote labels (1 = NC); an exact tie goes to NC."""
    return (2 * forest_votes(model, X) >= model.n_trees).astype(np.uint8)


@dataclass
class ImportanceVector:
    """Mean decrease in out-of-bag accuracy per feature."""

    names: tuple[str, ...]
    values: np.ndarray
    trees_used: int
    trees_skipped: int

    def ranking(self) -> list[tuple[str, float]]:
        order = np.argsort(-self.values, kind="stable")
        return [(self.names[i], float(self.values[i])) for i in order]


def permutation_importance(model: ForestModel, X, y01) -> ImportanceVector:
    """Permutation importance over each tree's out-of-bag rows.

    For every tree and every feature the tree actually uses, the feature
    column is shuffled among the OOB rows and the drop in OOB accuracy
    recorded; drops are averaged over trees. Features a tree never
    touches contribute an exact zero for that tree, so constant columns
    score exactly zero overall. Trees with no OOB rows are skipped (and
    counted); if every tree is skipped the importance is undefined.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y01 = np.asarray(y01, dtype=np.uint8)
    p = X.shape[1]
    totals = np.zeros(p, dtype=np.float64)
    used_trees = 0
    skipped = 0
    for t, tree in enumerate(model.trees):
        oob = model.oob[t]
        if oob.size == 0:
            skipped += 1
            continue
        used_trees += 1
        Xo = X[oob]
        yo = y01[oob]
        used = tree.features_used()
        if used.size == 0:
            continue
        rng = np.random.default_rng(np.random.SeedSequence((model.seed, 0x504D, t)))
        blocks = [Xo]
        for f in used.tolist():
            perm = rng.permutation(oob.size)
            Xp = Xo.copy()
            Xp[:, f] = Xo[perm, f]
            blocks.append(Xp)
        stacked = np.concatenate(blocks, axis=0)
        pred = tree_apply(tree, stacked).reshape(len(blocks), oob.size)
        accs = (pred == yo).mean(axis=1)
        totals[used] += accs[0] - accs[1:]
    if used_trees == 0:
        raise NoOobRows("every tree had an empty out-of-bag set")
    return ImportanceVector(
        names=model.schema.names,
        values=totals / used_trees,
        trees_used=used_trees,
        trees_skipped=skipped,
    )
