"""Labeled feature tables: in-memory matrix form and TSV persistence.

A feature table is a float64 matrix (categoricals stored as level
indices), an optional label vector (1 = NC, 0 = C), and the schema that
gives the columns meaning. Tables round-trip through a TSV file plus a
JSON schema sidecar.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError
from .records import FeatureSchema, Label

LABEL_COLUMN = "label"


@dataclass
class FeatureTable:
    """Encoded feature matrix with optional labels."""

    schema: FeatureSchema
    X: np.ndarray
    y: np.ndarray | None = None  # uint8, 1 = NC, 0 = C

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        if self.X.ndim != 2:
            raise DataError("feature matrix must be two-dimensional")
        if self.X.shape[1] != len(self.schema):
            raise DataError(
                f"matrix has {self.X.shape[1]} columns, schema has {len(self.schema)}"
            )
        if self.y is not None:
            self.y = np.asarray(self.y, dtype=np.uint8)
            if self.y.shape != (self.X.shape[0],):
                raise DataError("label vector length does not match matrix")

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def labels(self) -> np.ndarray:
        if self.y is None:
            raise DataError("table has no labels")
        return self.y

    def subset_columns(self, names) -> "FeatureTable":
        """A view-like table keeping only ``names``, in schema order."""
        sub = self.schema.subset(names)
        cols = self.schema.column_indices(sub.names)
        return FeatureTable(schema=sub, X=self.X[:, cols], y=self.y)

    def take_rows(self, idx) -> "FeatureTable":
        idx = np.asarray(idx, dtype=np.int64)
        y = self.y[idx] if self.y is not None else None
        return FeatureTable(schema=self.schema, X=self.X[idx], y=y)


def labels_to_codes(labels) -> np.ndarray:
    """Map Label (or 'C'/'NC' strings) to the internal 1 = NC coding."""
    return np.array([1 if Label(lab) is Label.NC else 0 for lab in labels], dtype=np.uint8)


def codes_to_labels(codes) -> list[Label]:
    return [Label.NC if c else Label.C for c in codes]


def from_feature_rows(rows, schema: FeatureSchema) -> FeatureTable:
    """Encode FeatureRow objects (raw cell values) into a table."""
    n, p = len(rows), len(schema)
    X = np.empty((n, p), dtype=np.float64)
    for i, row in enumerate(rows):
        for j, spec in enumerate(schema):
            X[i, j] = spec.encode(row.values[j])
    y = labels_to_codes(row.label for row in rows)
    return FeatureTable(schema=schema, X=X, y=y)


def schema_sidecar_path(table_path) -> Path:
    table_path = Path(table_path)
    return table_path.with_name(table_path.stem + ".schema.json")


def _format_cell(spec, code: float) -> str:
    if spec.kind == "categorical":
        level = spec.decode(code)
        return level if level is not None else ""
    return repr(float(code))


def write_feature_table(path, table: FeatureTable) -> None:
    """Write a table as TSV with a JSON schema sidecar.

    Categorical cells are written as level strings, numeric cells with
    full float64 precision so a read back is bit-exact.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = list(table.schema.names)
    if table.y is not None:
        header.append(LABEL_COLUMN)
    lines = ["\t".join(header)]
    for i in range(table.n_rows):
        cells = [
            _format_cell(spec, table.X[i, j]) for j, spec in enumerate(table.schema)
        ]
        if table.y is not None:
            cells.append(Label.NC.value if table.y[i] else Label.C.value)
        lines.append("\t".join(cells))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    sidecar = schema_sidecar_path(path)
    sidecar.write_text(
        json.dumps(table.schema.to_json(), indent=2) + "\n", encoding="utf-8"
    )


def read_feature_table(path, schema: FeatureSchema | None = None) -> FeatureTable:
    """Read a TSV feature table, taking the schema from the sidecar
    unless one is passed explicitly."""
    path = Path(path)
    if schema is None:
        sidecar = schema_sidecar_path(path)
        if not sidecar.exists():
            raise DataError(f"no schema sidecar next to {path}")
        schema = FeatureSchema.from_json(json.loads(sidecar.read_text(encoding="utf-8")))

    with path.open("r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        expected = list(schema.names)
        has_labels = header == expected + [LABEL_COLUMN]
        if not has_labels and header != expected:
            raise DataError(f"{path}: header does not match schema")
        X_rows = []
        labels = []
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            cells = line.split("\t")
            if len(cells) != len(header):
                raise DataError(f"{path}:{lineno}: expected {len(header)} cells")
            try:
                row = [spec.encode(cells[j]) for j, spec in enumerate(schema)]
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
            X_rows.append(row)
            if has_labels:
                labels.append(cells[-1])
    X = np.array(X_rows, dtype=np.float64).reshape(len(X_rows), len(schema))
    y = None
    if has_labels:
        try:
            y = labels_to_codes(labels)
        except ValueError as exc:
            raise DataError(f"{path}: bad label: {exc}") from None
    return FeatureTable(schema=schema, X=X, y=y)


def require_trainable(table: FeatureTable) -> None:
    """Check that every categorical cell holds a known level.

    Unknown levels encode as -1, which prediction tolerates but training
    must not see.
    """
    for j, spec in enumerate(table.schema):
        if spec.kind != "categorical":
            continue
        col = table.X[:, j]
        if col.min(initial=0.0) < 0:
            raise DataError(f"column {spec.name!r} has levels outside the schema")
