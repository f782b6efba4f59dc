"""Feature engineering: pair-year aggregates, buyer maxima, risk ratios.

Each contract row is framed by the relationship between its buyer and
supplier within the contract's calendar year. Aggregates over that
pair-year, and maxima over all suppliers of the buyer-year, feed four
derived risk factors (RAD, Fav, CPW, SPW).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import DegenerateBuyer, MissingAggregate
from .records import (
    CONTRACT_TYPES,
    GOVERNMENT_ORDERS,
    PROCEDURE_CHARACTERS,
    PROCEDURE_TYPES,
    SUPPLIER_SIZES,
    ContractRecord,
    FeatureSchema,
    FeatureSpec,
    Label,
)

# Weight of contract-count share versus spending share in Fav.
FAV_CONTRACT_WEIGHT = 0.33
FAV_SPENDING_WEIGHT = 0.66

WEEKS_PER_YEAR = 53


@dataclass(frozen=True)
class PairKey:
    buyer: str
    supplier: str
    year: int


@dataclass
class PairAggregate:
    """Totals for one buyer-supplier pair within one year."""

    contracts: int = 0
    spending: float = 0.0
    direct_awards: int = 0
    weeks: set = field(default_factory=set)

    @property
    def active_weeks(self) -> int:
        return len(self.weeks)


@dataclass(frozen=True)
class BuyerMaxima:
    """Largest pair totals among all suppliers of one buyer-year."""

    max_contracts: int
    max_spending: float


def compute_pair_aggregates(records) -> dict[PairKey, PairAggregate]:
    """Aggregate contracts, spending, direct awards, and active weeks
    per buyer-supplier-year."""
    pairs: dict[PairKey, PairAggregate] = {}
    for rec in records:
        key = PairKey(rec.buyer_id, rec.supplier_id, rec.year)
        agg = pairs.get(key)
        if agg is None:
            agg = pairs[key] = PairAggregate()
        agg.contracts += 1
        agg.spending += rec.spending
        if rec.procedure_type == "AD":
            agg.direct_awards += 1
        agg.weeks.add(rec.beginning_week)
    return pairs


def compute_buyer_maxima(pairs: dict[PairKey, PairAggregate]) -> dict[tuple[str, int], BuyerMaxima]:
    """Per buyer-year, the maximum pair contract count and pair spending."""
    out: dict[tuple[str, int], BuyerMaxima] = {}
    for key, agg in pairs.items():
        bucket = (key.buyer, key.year)
        prev = out.get(bucket)
        if prev is None:
            out[bucket] = BuyerMaxima(agg.contracts, agg.spending)
        else:
            out[bucket] = BuyerMaxima(
                max(prev.max_contracts, agg.contracts),
                max(prev.max_spending, agg.spending),
            )
    return out


def compute_risk_factors(agg: PairAggregate, maxima: BuyerMaxima):
    """Derive (RAD, Fav, CPW, SPW) for one pair-year.

    RAD is the share of the pair's contracts awarded directly. Fav mixes
    the pair's share of the buyer's largest contract count and largest
    spending. CPW and SPW are contracts and spending per active week.
    """
    if agg.contracts < 1 or agg.active_weeks < 1:
        raise MissingAggregate("pair aggregate has no contracts")
    if maxima.max_contracts < 1 or maxima.max_spending <= 0.0:
        raise DegenerateBuyer(
            f"buyer-year maxima degenerate (contracts={maxima.max_contracts}, "
            f"spending={maxima.max_spending})"
        )
    rad = agg.direct_awards / agg.contracts
    fav = (
        FAV_CONTRACT_WEIGHT * (agg.contracts / maxima.max_contracts)
        + FAV_SPENDING_WEIGHT * (agg.spending / maxima.max_spending)
    )
    cpw = agg.contracts / agg.active_weeks
    spw = agg.spending / agg.active_weeks
    return rad, fav, cpw, spw


def duration_weeks(beginning: int, ending: int) -> int:
    """Contract duration in weeks, wrapping across the year boundary.

    An ending week earlier than the beginning week means the contract
    runs into the next year.
    """
    if ending >= beginning:
        return ending - beginning
    return ending + WEEKS_PER_YEAR - beginning


FEATURE_NAMES = (
    "GO",
    "PC",
    "CT",
    "PT",
    "S",
    "BeginningWeek",
    "EndingWeek",
    "EBWeeks",
    "Spending",
    "T.Cont",
    "T.Spending",
    "T.AD",
    "ActiveWeeks",
    "T.Cont.Max",
    "T.Spending.Max",
    "RAD",
    "Fav",
    "CPW",
    "SPW",
)


def contract_feature_schema() -> FeatureSchema:
    """The fixed 19-column schema produced by feature assembly."""
    return FeatureSchema(
        [
            FeatureSpec("GO", "categorical", GOVERNMENT_ORDERS),
            FeatureSpec("PC", "categorical", PROCEDURE_CHARACTERS),
            FeatureSpec("CT", "categorical", CONTRACT_TYPES),
            FeatureSpec("PT", "categorical", PROCEDURE_TYPES),
            FeatureSpec("S", "categorical", SUPPLIER_SIZES),
            FeatureSpec("BeginningWeek", "numeric"),
            FeatureSpec("EndingWeek", "numeric"),
            FeatureSpec("EBWeeks", "numeric"),
            FeatureSpec("Spending", "numeric"),
            FeatureSpec("T.Cont", "numeric"),
            FeatureSpec("T.Spending", "numeric"),
            FeatureSpec("T.AD", "numeric"),
            FeatureSpec("ActiveWeeks", "numeric"),
            FeatureSpec("T.Cont.Max", "numeric"),
            FeatureSpec("T.Spending.Max", "numeric"),
            FeatureSpec("RAD", "numeric"),
            FeatureSpec("Fav", "numeric"),
            FeatureSpec("CPW", "numeric"),
            FeatureSpec("SPW", "numeric"),
        ]
    )


@dataclass(frozen=True)
class FeatureRow:
    """One engineered row: raw cell values in schema order plus a label.

    Categorical cells hold the level string, numeric cells a float; the
    dataset layer encodes them into the numeric matrix.
    """

    values: tuple
    label: Label


def assemble_features(labeled_records, pairs, buyers) -> tuple[list[FeatureRow], FeatureSchema]:
    """Join each labeled contract with its aggregates into feature rows.

    ``pairs`` and ``buyers`` must have been computed over the same
    record set; output order matches input order.
    """
    schema = contract_feature_schema()
    rows: list[FeatureRow] = []
    for rec, label in labeled_records:
        key = PairKey(rec.buyer_id, rec.supplier_id, rec.year)
        agg = pairs.get(key)
        mx = buyers.get((rec.buyer_id, rec.year))
        if agg is None or mx is None:
            raise MissingAggregate(f"no aggregate for {key}")
        rad, fav, cpw, spw = compute_risk_factors(agg, mx)
        values = (
            rec.government_order,
            rec.procedure_character,
            rec.contract_type,
            rec.procedure_type,
            rec.supplier_size,
            float(rec.beginning_week),
            float(rec.ending_week),
            float(duration_weeks(rec.beginning_week, rec.ending_week)),
            rec.spending,
            float(agg.contracts),
            agg.spending,
            float(agg.direct_awards),
            float(agg.active_weeks),
            float(mx.max_contracts),
            mx.max_spending,
            rad,
            fav,
            cpw,
            spw,
        )
        rows.append(FeatureRow(values=values, label=label))
    return rows, schema


def build_features(labeled_records) -> tuple[list[FeatureRow], FeatureSchema]:
    """One-stop assembly: compute both aggregate maps, then join.

    Labels play no part in aggregation; they ride along to the rows.
    """
    records = [rec for rec, _ in labeled_records]
    pairs = compute_pair_aggregates(records)
    buyers = compute_buyer_maxima(pairs)
    return assemble_features(labeled_records, pairs, buyers)
