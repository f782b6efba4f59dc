"""Imbalance-aware ensemble-of-forests toolkit for procurement risk scoring."""

__version__ = "0.1.0"

from .records import ContractRecord, FeatureSchema, FeatureSpec, Label, normalize_string

__all__ = [
    "ContractRecord",
    "FeatureSchema",
    "FeatureSpec",
    "Label",
    "normalize_string",
    "__version__",
]
