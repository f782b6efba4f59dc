"""Contract records, categorical domains, and feature schemas.

A raw procurement row becomes a :class:`ContractRecord` after validation.
Buyer and supplier names are normalized so that the same entity spelled
with different accents, casing, or punctuation collapses to one key.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass
from datetime import date
from enum import Enum

from .errors import RecordRejected

GOVERNMENT_ORDERS = ("APF", "GE", "GM")
PROCEDURE_CHARACTERS = ("N", "I", "ITLC")
CONTRACT_TYPES = ("OP", "S", "ADQ", "AR", "SLAOP")
PROCEDURE_TYPES = ("AD", "LP", "I3P")
SUPPLIER_SIZES = ("MIC", "PEQ", "MED", "NOM", "NA")

MIN_WEEK = 1
MAX_WEEK = 53

# Canonical field order; validation reports the first offending field
# in this order.
FIELD_ORDER = (
    "buyer_id",
    "supplier_id",
    "government_order",
    "procedure_character",
    "contract_type",
    "procedure_type",
    "supplier_size",
    "start_date",
    "beginning_week",
    "ending_week",
    "spending",
)


class Label(str, Enum):
    """Contract class: C (flagged supplier) or NC (everything else)."""

    C = "C"
    NC = "NC"

    def __str__(self) -> str:  # pragma: no cover - trivial
        return self.value


def normalize_string(raw: str) -> str:
    """Collapse an entity name to a canonical comparison key.

    Decomposes Unicode, drops combining marks, uppercases, deletes
    everything but ASCII letters, digits, and whitespace, then collapses
    whitespace runs, so "Acmé, S.A." and "ACME SA" meet at "ACME SA".
    The result of applying the function twice equals applying it once.
    """
    decomposed = unicodedata.normalize("NFKD", raw)
    stripped = "".join(c for c in decomposed if not unicodedata.combining(c))
    upper = stripped.upper()
    kept = "".join(c for c in upper if (c.isascii() and c.isalnum()) or c.isspace())
    return " ".join(kept.split())


@dataclass(frozen=True)
class ContractRecord:
    """One validated procurement contract."""

    buyer_id: str
    supplier_id: str
    government_order: str
    procedure_character: str
    contract_type: str
    procedure_type: str
    supplier_size: str
    start_date: date
    beginning_week: int
    ending_week: int
    spending: float

    @property
    def year(self) -> int:
        return self.start_date.year


def _require(fields, name):
    value = fields.get(name)
    if value is None or str(value).strip() == "":
        raise RecordRejected("missing_field", name)
    return str(value).strip()


def _parse_week(fields, name) -> int:
    text = _require(fields, name)
    try:
        week = int(text)
    except ValueError:
        raise RecordRejected("bad_week", name, text) from None
    if not MIN_WEEK <= week <= MAX_WEEK:
        raise RecordRejected("bad_week", name, text)
    return week


def _parse_categorical(fields, name, domain) -> str:
    text = _require(fields, name).upper()
    if text not in domain:
        raise RecordRejected("bad_categorical_code", name, text)
    return text


def validate_record(fields: dict) -> ContractRecord:
    """Build a :class:`ContractRecord` from a canonical field map.

    Raises :class:`RecordRejected` naming the first offending field in
    canonical field order. Categorical codes are case-folded before the
    domain check; entity names are normalized and must be non-empty
    afterwards.
    """
    buyer = normalize_string(_require(fields, "buyer_id"))
    if not buyer:
        raise RecordRejected("empty_after_normalization", "buyer_id")
    supplier = normalize_string(_require(fields, "supplier_id"))
    if not supplier:
        raise RecordRejected("empty_after_normalization", "supplier_id")

    go = _parse_categorical(fields, "government_order", GOVERNMENT_ORDERS)
    pc = _parse_categorical(fields, "procedure_character", PROCEDURE_CHARACTERS)
    ct = _parse_categorical(fields, "contract_type", CONTRACT_TYPES)
    pt = _parse_categorical(fields, "procedure_type", PROCEDURE_TYPES)
    size = _parse_categorical(fields, "supplier_size", SUPPLIER_SIZES)

    date_text = _require(fields, "start_date")
    try:
        start = date.fromisoformat(date_text)
    except ValueError:
        raise RecordRejected("bad_date", "start_date", date_text) from None

    beginning = _parse_week(fields, "beginning_week")
    ending = _parse_week(fields, "ending_week")

    spending_text = _require(fields, "spending")
    try:
        spending = float(spending_text)
    except ValueError:
        raise RecordRejected("bad_spending", "spending", spending_text) from None
    if spending != spending or spending in (float("inf"), float("-inf")):
        raise RecordRejected("bad_spending", "spending", spending_text)
    if spending < 0.0:
        raise RecordRejected("negative_spending", "spending", spending_text)

    return ContractRecord(
        buyer_id=buyer,
        supplier_id=supplier,
        government_order=go,
        procedure_character=pc,
        contract_type=ct,
        procedure_type=pt,
        supplier_size=size,
        start_date=start,
        beginning_week=beginning,
        ending_week=ending,
        spending=spending,
    )


MAX_CATEGORICAL_LEVELS = 64


@dataclass(frozen=True)
class FeatureSpec:
    """One feature column: a name plus its kind and, if categorical,
    the ordered tuple of admissible levels."""

    name: str
    kind: str  # "numeric" or "categorical"
    levels: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.kind not in ("numeric", "categorical"):
            raise ValueError(f"unknown feature kind: {self.kind!r}")
        if self.kind == "categorical":
            if not self.levels:
                raise ValueError(f"categorical feature {self.name!r} needs levels")
            if len(self.levels) > MAX_CATEGORICAL_LEVELS:
                raise ValueError(
                    f"{self.name!r} has {len(self.levels)} levels; "
                    f"limit is {MAX_CATEGORICAL_LEVELS}"
                )
            if len(set(self.levels)) != len(self.levels):
                raise ValueError(f"{self.name!r} has duplicate levels")
        elif self.levels is not None:
            raise ValueError(f"numeric feature {self.name!r} cannot have levels")

    def encode(self, value) -> float:
        """Encode one cell as a float64 matrix entry.

        Categorical values map to their level index; an unseen level maps
        to -1.0 so prediction can route it to the heavier child.
        """
        if self.kind == "numeric":
            return float(value)
        try:
            return float(self.levels.index(str(value)))
        except ValueError:
            return -1.0

    def decode(self, code: float):
        if self.kind == "numeric":
            return code
        idx = int(code)
        if 0 <= idx < len(self.levels):
            return self.levels[idx]
        return None


class FeatureSchema:
    """Ordered collection of feature specs; the contract between
    datasets, models, and reports."""

    def __init__(self, specs):
        specs = tuple(specs)
        names = [s.name for s in specs]
        if len(set(names)) != len(names):
            raise ValueError("duplicate feature names in schema")
        self.specs = specs
        self._index = {s.name: i for i, s in enumerate(specs)}

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.specs)

    def __len__(self) -> int:
        return len(self.specs)

    def __iter__(self):
        return iter(self.specs)

    def __getitem__(self, key):
        if isinstance(key, str):
            return self.specs[self._index[key]]
        return self.specs[key]

    def __eq__(self, other) -> bool:
        return isinstance(other, FeatureSchema) and self.specs == other.specs

    def __hash__(self) -> int:
        return hash(self.specs)

    def index(self, name: str) -> int:
        return self._index[name]

    def subset(self, names) -> "FeatureSchema":
        """A new schema keeping only ``names``, in this schema's order."""
        keep = set(names)
        missing = keep - set(self.names)
        if missing:
            raise KeyError(f"unknown features: {sorted(missing)}")
        return FeatureSchema(s for s in self.specs if s.name in keep)

    def column_indices(self, names) -> list[int]:
        return [self._index[n] for n in names]

    def to_json(self) -> list[dict]:
        out = []
        for s in self.specs:
            entry = {"name": s.name, "kind": s.kind}
            if s.kind == "categorical":
                entry["levels"] = list(s.levels)
            out.append(entry)
        return out

    @classmethod
    def from_json(cls, data) -> "FeatureSchema":
        specs = []
        for entry in data:
            levels = entry.get("levels")
            specs.append(
                FeatureSpec(
                    name=entry["name"],
                    kind=entry["kind"],
                    levels=tuple(levels) if levels is not None else None,
                )
            )
        return cls(specs)
