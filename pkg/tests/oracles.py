"""Independent brute-force oracles the test suite compares the library to.

Everything here trades speed for certainty: scores are exact Fractions,
searches enumerate every candidate, and aggregates are recomputed per
row in O(n^2). Nothing imports the library's own split search or ROC
code, so agreement between the two is evidence, not tautology.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction


def node_score(c1, nc1, n1, c2, nc2, n2) -> Fraction:
    """Split quality as an exact Fraction: sum of (c^2 + nc^2) / n over
    the two children. Maximizing this minimizes the weighted Gini."""
    return Fraction(c1 * c1 + nc1 * nc1, n1) + Fraction(c2 * c2 + nc2 * nc2, n2)


def gini(counts) -> Fraction:
    total = sum(counts)
    return 1 - sum(Fraction(int(k), total) ** 2 for k in counts)


@dataclass
class Candidate:
    score: Fraction
    feature: int
    kind: str  # "numeric" | "categorical"
    key: object  # Fraction threshold for numeric, int bitmask for categorical
    threshold: Fraction | None
    left_levels: frozenset | None


def _numeric_candidates(values, y, feature, mns):
    n = len(values)
    order = sorted(range(n), key=lambda i: values[i])
    out = []
    for cut in range(n - 1):
        a, b = values[order[cut]], values[order[cut + 1]]
        if a == b:
            continue
        n1 = cut + 1
        if n1 < mns or n - n1 < mns:
            continue
        nc1 = sum(int(y[order[i]]) for i in range(n1))
        c1 = n1 - nc1
        nc2 = sum(int(y[i]) for i in range(n)) - nc1
        c2 = (n - n1) - nc2
        thr = (Fraction(a) + Fraction(b)) / 2
        out.append(
            Candidate(
                score=node_score(c1, nc1, n1, c2, nc2, n - n1),
                feature=feature,
                kind="numeric",
                key=thr,
                threshold=thr,
                left_levels=None,
            )
        )
    return out


def _categorical_candidates(values, y, feature, mns):
    n = len(values)
    present = sorted({int(v) for v in values})
    K = len(present)
    if K < 2:
        return []
    out = []
    # Odd bitmasks short of all-ones: every proper bipartition with the
    # lowest observed level pinned left.
    for bits in range(1, (1 << K) - 1, 2):
        left = frozenset(present[i] for i in range(K) if (bits >> i) & 1)
        n1 = sum(1 for v in values if int(v) in left)
        if n1 < mns or n - n1 < mns:
            continue
        nc1 = sum(int(y[i]) for i in range(n) if int(values[i]) in left)
        c1 = n1 - nc1
        nc2 = sum(int(y[i]) for i in range(n)) - nc1
        c2 = (n - n1) - nc2
        out.append(
            Candidate(
                score=node_score(c1, nc1, n1, c2, nc2, n - n1),
                feature=feature,
                kind="categorical",
                key=bits,
                threshold=None,
                left_levels=left,
            )
        )
    return out


def best_split(X, y, rows, kinds, mns=1) -> Candidate | None:
    """Exhaustive best split of a node, with the library's tie order:
    highest exact score, then lowest feature index, then lowest key.

    Only a strictly positive impurity decrease is accepted.
    """
    n = len(rows)
    nc_p = sum(int(y[r]) for r in rows)
    c_p = n - nc_p
    if n < 2 * mns or nc_p == 0 or c_p == 0:
        return None

    best = None
    p = len(X[rows[0]])
    for f in range(p):
        values = [X[r][f] for r in rows]
        yk = [y[r] for r in rows]
        if kinds[f]:
            cands = _categorical_candidates(values, yk, f, mns)
        else:
            cands = _numeric_candidates(values, yk, f, mns)
        for cand in cands:
            if (
                best is None
                or cand.score > best.score
                or (cand.score == best.score and cand.feature < best.feature)
                or (
                    cand.score == best.score
                    and cand.feature == best.feature
                    and cand.key < best.key
                )
            ):
                best = cand
    if best is None:
        return None
    if best.score <= Fraction(c_p * c_p + nc_p * nc_p, n):
        return None
    return best


@dataclass
class OracleNode:
    label: int | None = None
    split: Candidate | None = None
    left: "OracleNode | None" = None
    right: "OracleNode | None" = None
    observed: frozenset | None = None  # categorical levels seen at the node
    heavy_left: bool | None = None  # larger child is the left one


def grow_tree(X, y, kinds, mns=1) -> OracleNode:
    """Grow the greedy-Gini tree by pure enumeration."""

    def rec(rows):
        nc = sum(int(y[r]) for r in rows)
        c = len(rows) - nc
        leaf = OracleNode(label=1 if nc >= c else 0)
        if nc == 0 or c == 0 or len(rows) < 2 * mns:
            return leaf
        cand = best_split(X, y, rows, kinds, mns)
        if cand is None:
            return leaf
        if cand.kind == "numeric":
            goes_left = lambda r: Fraction(X[r][cand.feature]) <= cand.threshold
        else:
            goes_left = lambda r: int(X[r][cand.feature]) in cand.left_levels
        left_rows = [r for r in rows if goes_left(r)]
        right_rows = [r for r in rows if not goes_left(r)]
        node = OracleNode(split=cand)
        if cand.kind == "categorical":
            node.observed = frozenset(int(X[r][cand.feature]) for r in rows)
        node.heavy_left = len(left_rows) >= len(right_rows)
        node.left = rec(left_rows)
        node.right = rec(right_rows)
        return node

    return rec(list(range(len(X))))


def predict(node: OracleNode, x) -> int:
    while node.label is None:
        cand = node.split
        if cand.kind == "numeric":
            go_left = Fraction(x[cand.feature]) <= cand.threshold
        else:
            # A level never observed at the node follows the heavier child.
            v = int(x[cand.feature])
            if v in cand.left_levels:
                go_left = True
            elif v in node.observed:
                go_left = False
            else:
                go_left = node.heavy_left
        node = node.left if go_left else node.right
    return node.label


def mann_whitney(scores, labels) -> Fraction:
    """AUC as the exact pairwise win rate with ties counted half."""
    pos = [Fraction(s) for s, lab in zip(scores, labels) if lab == 1]
    neg = [Fraction(s) for s, lab in zip(scores, labels) if lab == 0]
    wins = Fraction(0)
    for a in pos:
        for b in neg:
            if a > b:
                wins += 1
            elif a == b:
                wins += Fraction(1, 2)
    return wins / (len(pos) * len(neg))


def round_half_away(value: Fraction) -> int:
    """Round-half-away-from-zero for non-negative exact ratios."""
    whole = value.numerator // value.denominator
    frac = value - whole
    return whole + (1 if frac >= Fraction(1, 2) else 0)


def naive_pair_features(records):
    """Per record, recompute every pair-year aggregate and buyer-year
    maximum by scanning the whole record list from scratch.

    Returns one tuple per record: (T.Cont, T.Spending, T.AD,
    ActiveWeeks, T.Cont.Max, T.Spending.Max). Spending sums follow input
    order so float accumulation matches the grouped computation exactly.
    """
    out = []
    for rec in records:
        same_pair = [
            r
            for r in records
            if r.buyer_id == rec.buyer_id
            and r.supplier_id == rec.supplier_id
            and r.year == rec.year
        ]
        t_cont = len(same_pair)
        t_spending = 0.0
        for r in same_pair:
            t_spending += r.spending
        t_ad = sum(1 for r in same_pair if r.procedure_type == "AD")
        active = len({r.beginning_week for r in same_pair})

        suppliers = []
        for r in records:
            if r.buyer_id == rec.buyer_id and r.year == rec.year:
                if r.supplier_id not in suppliers:
                    suppliers.append(r.supplier_id)
        max_cont = 0
        max_spending = 0.0
        for sup in suppliers:
            grp = [
                r
                for r in records
                if r.buyer_id == rec.buyer_id
                and r.supplier_id == sup
                and r.year == rec.year
            ]
            spend = 0.0
            for r in grp:
                spend += r.spending
            max_cont = max(max_cont, len(grp))
            max_spending = max(max_spending, spend)
        out.append((t_cont, t_spending, t_ad, active, max_cont, max_spending))
    return out
