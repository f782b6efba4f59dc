"""Stratified train/calibration/test splits and balanced subsampling.

The split preserves the C:NC mix of the full dataset in each part via
largest-remainder apportionment per class. Balanced subsamples then
carve the training NC rows into chunks matched 1:1 against all training
C rows, so every NC row is seen by at least one forest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ClassAbsent, ConfigError, ImbalanceInverted

LABEL_NC = 1
LABEL_C = 0


@dataclass(frozen=True)
class SplitSpec:
    """Fractions for the three-way split plus the shuffle seed."""

    train: float = 0.5
    calibration: float = 0.2
    test: float = 0.3
    seed: int = 0

    def __post_init__(self):
        for name in ("train", "calibration", "test"):
            frac = getattr(self, name)
            if not 0.0 < frac < 1.0:
                raise ConfigError(f"split fraction {name}={frac} outside (0, 1)")
        if abs(self.train + self.calibration + self.test - 1.0) > 1e-9:
            raise ConfigError("split fractions must sum to 1")


def largest_remainder_counts(total: int, fractions) -> list[int]:
    """Apportion ``total`` into integer counts proportional to
    ``fractions`` using the largest-remainder method.

    Ties on remainders break toward earlier positions, so the result is
    deterministic.
    """
    quotas = [total * f for f in fractions]
    counts = [math.floor(q) for q in quotas]
    shortfall = total - sum(counts)
    order = sorted(
        range(len(fractions)), key=lambda i: (-(quotas[i] - counts[i]), i)
    )
    for i in order[:shortfall]:
        counts[i] += 1
    return counts


def stratified_split(labels, spec: SplitSpec):
    """Split row indices into (train, calibration, test), stratified.

    Each class is shuffled with its own deterministic generator stream
    and apportioned by largest remainder, so both parts reproduce the
    overall class mix as closely as integers allow. Returned index
    arrays are sorted ascending.
    """
    y = np.asarray(labels, dtype=np.uint8)
    if y.ndim != 1:
        raise ClassAbsent("labels must be one-dimensional")
    fractions = (spec.train, spec.calibration, spec.test)
    rng = np.random.default_rng(spec.seed)
    parts = [[], [], []]
    for cls in (LABEL_C, LABEL_NC):
        rows = np.flatnonzero(y == cls)
        if rows.size == 0:
            raise ClassAbsent(f"class {'NC' if cls else 'C'} has no rows")
        shuffled = rng.permutation(rows)
        counts = largest_remainder_counts(rows.size, fractions)
        start = 0
        for part, count in zip(parts, counts):
            part.append(shuffled[start : start + count])
            start += count
    return tuple(
        np.sort(np.concatenate(chunks)).astype(np.int64) for chunks in parts
    )


@dataclass(frozen=True)
class BalancedSubsample:
    """Row indices of one balanced training subsample."""

    c_rows: np.ndarray
    nc_rows: np.ndarray

    @property
    def row_indices(self) -> np.ndarray:
        """All rows of the subsample in canonical (sorted) order."""
        return np.sort(np.concatenate([self.c_rows, self.nc_rows]))

    def __len__(self) -> int:
        return self.c_rows.size + self.nc_rows.size


def subsample_count(n_c: int, n_nc: int) -> int:
    """Number of balanced subsamples: ceil(|NC| / |C|).

    Rounding up is what lets every NC row land in at least one chunk
    while each chunk stays exactly |C| rows.
    """
    if n_c <= 0 or n_nc <= 0:
        raise ClassAbsent("both classes must be present")
    if n_c > n_nc:
        raise ImbalanceInverted(f"|C|={n_c} exceeds |NC|={n_nc}")
    return -(-n_nc // n_c)


def balanced_subsamples(labels, train_idx, seed: int) -> list[BalancedSubsample]:
    """Partition training NC rows into balanced chunks against all C rows.

    The NC pool is shuffled once; consecutive disjoint chunks of size
    |C| are dealt out, and the final short chunk is topped up without
    replacement from rows already dealt to earlier chunks. Every NC row
    therefore appears in at least one and at most two subsamples, and
    each subsample holds exactly |C| rows of each class.
    """
    y = np.asarray(labels, dtype=np.uint8)
    train_idx = np.asarray(train_idx, dtype=np.int64)
    c_rows = train_idx[y[train_idx] == LABEL_C]
    nc_rows = train_idx[y[train_idx] == LABEL_NC]
    n_c, n_nc = c_rows.size, nc_rows.size
    count = subsample_count(n_c, n_nc)

    rng = np.random.default_rng(seed)
    pool = rng.permutation(nc_rows)
    c_sorted = np.sort(c_rows)

    subsamples = []
    for s in range(count):
        chunk = pool[s * n_c : (s + 1) * n_c]
        deficit = n_c - chunk.size
        if deficit:
            # Final chunk: borrow from rows already dealt, never duplicating
            # within this chunk.
            used = pool[: s * n_c]
            topup = rng.choice(used, size=deficit, replace=False)
            chunk = np.concatenate([chunk, topup])
        subsamples.append(
            BalancedSubsample(c_rows=c_sorted, nc_rows=np.sort(chunk))
        )
    return subsamples


def write_index_file(path, idx) -> None:
    """Persist an index set as line-delimited integers."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(f"{int(i)}\n" for i in idx), encoding="utf-8")


def read_index_file(path) -> np.ndarray:
    text = Path(path).read_text(encoding="utf-8")
    values = [int(line) for line in text.split() if line]
    return np.array(values, dtype=np.int64)
