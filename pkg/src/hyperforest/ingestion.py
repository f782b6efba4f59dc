"""Reading raw contract exports, validating rows, and labeling.

The pipeline is: parse delimited text into canonical field maps, validate
each map into a :class:`~hyperforest.records.ContractRecord`, optionally
convert spending into constant purchasing-power terms, then label each
record by matching its supplier against a registry of flagged names.
"""

from __future__ import annotations

import csv
import dataclasses
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .errors import (
    IngestAborted,
    MissingYearFactor,
    ParseError,
    RecordRejected,
    UnreadableHeader,
)
from .records import FIELD_ORDER, ContractRecord, Label, normalize_string, validate_record

log = logging.getLogger(__name__)


@dataclass
class CurationReport:
    """Tallies from one ingestion run.

    Invariant: ``accepted + sum(rejected.values()) == total_rows``.
    """

    total_rows: int = 0
    accepted: int = 0
    rejected: dict[str, int] = field(default_factory=dict)

    def reject(self, reason: str) -> None:
        self.rejected[reason] = self.rejected.get(reason, 0) + 1

    @property
    def rejected_total(self) -> int:
        return sum(self.rejected.values())

    def check(self) -> None:
        if self.accepted + self.rejected_total != self.total_rows:
            raise AssertionError("curation tallies do not add up")


def _sniff_delimiter(header_line: str) -> str:
    if "\t" in header_line:
        return "\t"
    if "," in header_line:
        return ","
    raise ParseError("line 1: cannot detect delimiter (no tab or comma in header)")


def parse_contracts(path, column_map: dict[str, str]):
    """Parse a delimited export into canonical field maps.

    ``column_map`` maps canonical field names to column names in the
    file. The delimiter (tab or comma) is detected from the header line.
    Structurally malformed rows are counted, not fatal. Returns
    ``(field_maps, report)`` with the report's rejection tallies primed;
    validation rejections are added later by :func:`curate_contracts`.
    """
    path = Path(path)
    unknown = set(column_map) - set(FIELD_ORDER)
    if unknown:
        raise ParseError(f"column map names unknown fields: {sorted(unknown)}")
    missing = set(FIELD_ORDER) - set(column_map)
    if missing:
        raise ParseError(f"column map is missing fields: {sorted(missing)}")

    report = CurationReport()
    maps: list[dict[str, str]] = []
    with path.open("r", encoding="utf-8", newline="") as fh:
        header_line = fh.readline()
        if not header_line.strip():
            raise UnreadableHeader(f"{path}: file has no header line")
        delim = _sniff_delimiter(header_line)
        header = next(csv.reader([header_line], delimiter=delim))
        positions = {}
        for canonical, column in column_map.items():
            try:
                positions[canonical] = header.index(column)
            except ValueError:
                raise UnreadableHeader(f"{path}: column {column!r} not in header") from None

        width = len(header)
        for lineno, row in enumerate(csv.reader(fh, delimiter=delim), start=2):
            if not row:
                continue  # blank line, not a row
            report.total_rows += 1
            if len(row) != width:
                report.reject("parse_error")
                log.warning("%s:%d: expected %d fields, got %d", path, lineno, width, len(row))
                continue
            maps.append({name: row[pos] for name, pos in positions.items()})
    return maps, report


def curate_contracts(field_maps, report: CurationReport, max_reject_fraction: float = 0.25):
    """Validate field maps into records, tallying rejections by reason.

    Aborts with :class:`IngestAborted` when more than ``max_reject_fraction``
    of all rows (parse failures included) were rejected.
    """
    records: list[ContractRecord] = []
    for fields in field_maps:
        try:
            records.append(validate_record(fields))
        except RecordRejected as exc:
            report.reject(f"{exc.reason}:{exc.field}")
    report.accepted = len(records)
    report.check()
    if report.total_rows and report.rejected_total > max_reject_fraction * report.total_rows:
        raise IngestAborted(
            f"rejected {report.rejected_total} of {report.total_rows} rows "
            f"(limit is {max_reject_fraction:.0%})"
        )
    return records


def convert_spending(record: ContractRecord, ppp_table: dict[int, float]) -> ContractRecord:
    """Restate a contract's spending in constant purchasing-power terms.

    ``ppp_table`` maps contract year to a multiplier. An empty table is
    the identity conversion; a non-empty table missing the record's year
    raises :class:`MissingYearFactor`.
    """
    if not ppp_table:
        return record
    year = record.year
    if year not in ppp_table:
        raise MissingYearFactor(f"no conversion factor for year {year}")
    return dataclasses.replace(record, spending=record.spending * ppp_table[year])


@dataclass
class CorruptRegistry:
    """Normalized supplier names flagged by one or more sources.

    ``sources`` maps each normalized name to the tags of the registries
    that listed it.
    """

    sources: dict[str, frozenset[str]] = field(default_factory=dict)

    def __contains__(self, name: str) -> bool:
        return normalize_string(name) in self.sources

    def __len__(self) -> int:
        return len(self.sources)

    def tags(self, name: str) -> frozenset[str]:
        return self.sources.get(normalize_string(name), frozenset())


def load_corrupt_registry(entries, name_column: str | None = None) -> CorruptRegistry:
    """Load flagged-supplier files into one merged registry.

    ``entries`` is a sequence of ``(path, source_tag)`` pairs. Each file
    is either one name per line (the default) or, when ``name_column``
    is given and present in the file's header, a delimited file from
    which that column is taken. Names are normalized before merging, so
    duplicates across sources collapse into one entry with both tags.
    An empty registry is allowed but logged loudly.
    """
    merged: dict[str, set[str]] = {}
    for path, tag in entries:
        path = Path(path)
        with path.open("r", encoding="utf-8", newline="") as fh:
            first = fh.readline()
            if not first:
                log.warning("registry %s is empty", path)
                continue
            names: list[str] = []
            delimited = False
            if name_column is not None:
                try:
                    delim = _sniff_delimiter(first)
                    header = next(csv.reader([first], delimiter=delim))
                    delimited = name_column in header
                except ParseError:
                    delimited = False
            if delimited:
                pos = header.index(name_column)
                for row in csv.reader(fh, delimiter=delim):
                    if len(row) > pos:
                        names.append(row[pos])
            else:
                names.append(first)
                names.extend(fh)
            for raw in names:
                key = normalize_string(raw)
                if key:
                    merged.setdefault(key, set()).add(tag)
    if not merged:
        log.warning("corrupt-supplier registry is empty; every contract will label NC")
    return CorruptRegistry({k: frozenset(v) for k, v in merged.items()})


def label_dataset(records, registry: CorruptRegistry):
    """Label each record C when its supplier is in the registry, else NC.

    Supplier names are already normalized on the record, so membership
    is a plain dictionary lookup.
    """
    labeled = []
    for rec in records:
        lab = Label.C if rec.supplier_id in registry.sources else Label.NC
        labeled.append((rec, lab))
    return labeled
