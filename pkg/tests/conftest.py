"""Shared factories for the test suite."""

from __future__ import annotations

from datetime import date

import pytest

from hyperforest.records import ContractRecord, validate_record

VALID_FIELDS = {
    "buyer_id": "Secretaria de Salud",
    "supplier_id": "Acme SA",
    "government_order": "APF",
    "procedure_character": "N",
    "contract_type": "ADQ",
    "procedure_type": "AD",
    "supplier_size": "MIC",
    "start_date": "2015-03-02",
    "beginning_week": "10",
    "ending_week": "14",
    "spending": "1000.0",
}


def field_map(**overrides) -> dict:
    """A raw field map that validates cleanly unless overridden."""
    fields = dict(VALID_FIELDS)
    fields.update(overrides)
    return fields


def make_record(**overrides) -> ContractRecord:
    """A validated record; overrides apply to the raw fields."""
    return validate_record(field_map(**overrides))


@pytest.fixture
def valid_fields() -> dict:
    return field_map()
