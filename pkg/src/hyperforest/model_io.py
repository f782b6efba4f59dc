"""Versioned model persistence with integrity checking.

A model file is a JSON document: format tag, format version, optional
creation timestamp, a sha256 checksum, and the payload. The checksum is
computed over the canonical serialization of the payload alone, so two
runs that build the same model produce the same checksum even though
their timestamps differ.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .ensemble import HyperForestModel
from .errors import ChecksumFailure, DataError
from .forest import ForestModel, ForestParams, Tree
from .records import FeatureSchema

FORMAT_TAG = "hyperforest-model"
FORMAT_VERSION = 1


def canonical_json(payload) -> str:
    """The byte-stable serialization the checksum is taken over."""
    return json.dumps(
        payload, sort_keys=True, separators=(",", ":"), allow_nan=False
    )


def payload_checksum(payload) -> str:
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()


def dataset_fingerprint(X, y01=None) -> str:
    """Digest of the exact matrix (and labels) a model was trained on."""
    h = hashlib.sha256()
    X = np.ascontiguousarray(X, dtype=np.float64)
    h.update(str(X.shape).encode())
    h.update(X.tobytes())
    if y01 is not None:
        h.update(np.asarray(y01, dtype=np.uint8).tobytes())
    return h.hexdigest()


def _tree_to_json(tree: Tree) -> dict:
    return {
        "feature": tree.feature.tolist(),
        "threshold": tree.threshold.tolist(),
        "categorical": tree.is_categorical.astype(np.uint8).tolist(),
        "left_mask": [int(v) for v in tree.left_mask],
        "obs_mask": [int(v) for v in tree.obs_mask],
        "heavy_left": tree.heavy_left.astype(np.uint8).tolist(),
        "left": tree.left.tolist(),
        "right": tree.right.tolist(),
        "leaf_label": tree.leaf_label.tolist(),
        "count_c": tree.count_c.tolist(),
        "count_nc": tree.count_nc.tolist(),
    }


def _tree_from_json(data) -> Tree:
    return Tree(
        feature=np.array(data["feature"], dtype=np.int32),
        threshold=np.array(data["threshold"], dtype=np.float64),
        is_categorical=np.array(data["categorical"], dtype=bool),
        left_mask=np.array([int(v) for v in data["left_mask"]], dtype=np.uint64),
        obs_mask=np.array([int(v) for v in data["obs_mask"]], dtype=np.uint64),
        heavy_left=np.array(data["heavy_left"], dtype=bool),
        left=np.array(data["left"], dtype=np.int32),
        right=np.array(data["right"], dtype=np.int32),
        leaf_label=np.array(data["leaf_label"], dtype=np.uint8),
        count_c=np.array(data["count_c"], dtype=np.int64),
        count_nc=np.array(data["count_nc"], dtype=np.int64),
    )


def _forest_to_json(forest: ForestModel) -> dict:
    return {
        "seed": forest.seed,
        "n_train": forest.n_train,
        "oob": [o.tolist() for o in forest.oob],
        "trees": [_tree_to_json(t) for t in forest.trees],
    }


def _forest_from_json(data, schema: FeatureSchema, params: ForestParams) -> ForestModel:
    return ForestModel(
        schema=schema,
        params=params,
        seed=int(data["seed"]),
        trees=[_tree_from_json(t) for t in data["trees"]],
        oob=[np.array(o, dtype=np.int64) for o in data["oob"]],
        n_train=int(data["n_train"]),
    )


def model_payload(model: HyperForestModel) -> dict:
    params = model.params
    return {
        "schema": model.schema.to_json(),
        "params": {
            "trees": params.trees,
            "features_per_split": params.features_per_split,
            "min_node_size": params.min_node_size,
            "exhaustive_categorical": params.exhaustive_categorical,
        },
        "seed": model.seed,
        "theta": model.theta,
        "metadata": model.metadata,
        "subsample_rows": [r.tolist() for r in model.subsample_rows],
        "forests": [_forest_to_json(f) for f in model.forests],
    }


def save_model(model: HyperForestModel, path, created: str | None = None) -> str:
    """Write the model file; returns the payload checksum.

    ``created`` (an ISO timestamp) is stored outside the checksummed
    payload so reruns with the same inputs keep the same checksum.
    """
    payload = model_payload(model)
    checksum = payload_checksum(payload)
    doc = {
        "format": FORMAT_TAG,
        "version": FORMAT_VERSION,
        "created": created,
        "checksum": checksum,
        "payload": payload,
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        json.dump(doc, fh, separators=(",", ":"), allow_nan=False)
        fh.write("\n")
    return checksum


def load_model(path) -> HyperForestModel:
    """Read a model file, verifying format, version, and checksum."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_TAG:
        raise DataError(f"{path}: not a {FORMAT_TAG} file")
    if doc.get("version") != FORMAT_VERSION:
        raise DataError(
            f"{path}: unsupported format version {doc.get('version')!r} "
            f"(expected {FORMAT_VERSION})"
        )
    payload = doc.get("payload")
    if payload is None or "checksum" not in doc:
        raise DataError(f"{path}: missing payload or checksum")
    actual = payload_checksum(payload)
    if actual != doc["checksum"]:
        raise ChecksumFailure(
            f"{path}: checksum mismatch (stored {doc['checksum'][:12]}..., "
            f"recomputed {actual[:12]}...)"
        )

    schema = FeatureSchema.from_json(payload["schema"])
    raw_params = payload["params"]
    params = ForestParams(
        trees=int(raw_params["trees"]),
        features_per_split=(
            None
            if raw_params["features_per_split"] is None
            else int(raw_params["features_per_split"])
        ),
        min_node_size=int(raw_params["min_node_size"]),
        exhaustive_categorical=bool(raw_params["exhaustive_categorical"]),
    )
    model = HyperForestModel(
        schema=schema,
        params=params,
        seed=int(payload["seed"]),
        forests=[_forest_from_json(f, schema, params) for f in payload["forests"]],
        subsample_rows=[np.array(r, dtype=np.int64) for r in payload["subsample_rows"]],
        theta=None if payload["theta"] is None else float(payload["theta"]),
        metadata=dict(payload["metadata"]),
    )
    return model
