"""Contract records: normalization, validation, feature schemas."""

import pytest

from conftest import field_map, make_record
from hyperforest.errors import RecordRejected
from hyperforest.records import (
    FIELD_ORDER,
    MAX_CATEGORICAL_LEVELS,
    FeatureSchema,
    FeatureSpec,
    Label,
    normalize_string,
)


def test_normalize_accents_case_and_spacing():
    assert normalize_string("  Pemex   Exploración ") == "PEMEX EXPLORACION"


def test_normalize_empty_is_fixed_point():
    assert normalize_string("") == ""


def test_normalize_already_normal_is_fixed_point():
    assert normalize_string("ABC") == "ABC"


def test_normalize_strips_punctuation_without_splitting():
    assert normalize_string("Acmé, S.A.") == "ACME SA"
    assert normalize_string("ACME SA") == "ACME SA"


def test_normalize_idempotent():
    samples = [
        "  Pemex   Exploración ",
        "Acmé, S.A.",
        "ß & Söhne GmbH",
        "A\tB\nC",
        "--",
        "1234-A",
    ]
    for raw in samples:
        once = normalize_string(raw)
        assert normalize_string(once) == once


def test_normalize_output_alphabet():
    out = normalize_string("Ærøskøbing ¤ 99% Ltd.")
    assert all(c == " " or (c.isascii() and c.isalnum()) for c in out)
    assert "  " not in out
    assert out == out.strip()


def test_validate_accepts_valid_row(valid_fields):
    rec = make_record()
    assert rec.buyer_id == "SECRETARIA DE SALUD"
    assert rec.supplier_id == "ACME SA"
    assert rec.year == 2015
    assert rec.beginning_week == 10
    assert rec.ending_week == 14
    assert rec.spending == 1000.0


def test_validate_missing_supplier():
    with pytest.raises(RecordRejected) as exc:
        make_record(supplier_id="")
    assert exc.value.reason == "missing_field"
    assert exc.value.field == "supplier_id"


def test_validate_negative_spending():
    with pytest.raises(RecordRejected) as exc:
        make_record(spending="-5")
    assert exc.value.reason == "negative_spending"
    assert exc.value.field == "spending"


def test_validate_unparsable_spending():
    with pytest.raises(RecordRejected) as exc:
        make_record(spending="lots")
    assert exc.value.reason == "bad_spending"


def test_validate_nonfinite_spending():
    with pytest.raises(RecordRejected) as exc:
        make_record(spending="nan")
    assert exc.value.reason == "bad_spending"
    with pytest.raises(RecordRejected):
        make_record(spending="inf")


def test_validate_zero_spending_is_fine():
    assert make_record(spending="0").spending == 0.0


def test_validate_week_bounds():
    assert make_record(beginning_week="1").beginning_week == 1
    assert make_record(ending_week="53").ending_week == 53
    for bad in ("0", "54", "-3", "ten"):
        with pytest.raises(RecordRejected) as exc:
            make_record(beginning_week=bad)
        assert exc.value.reason == "bad_week"


def test_validate_bad_categorical_code():
    with pytest.raises(RecordRejected) as exc:
        make_record(procedure_type="XX")
    assert exc.value.reason == "bad_categorical_code"
    assert exc.value.field == "procedure_type"


def test_validate_categorical_case_folds():
    assert make_record(procedure_type="ad").procedure_type == "AD"


def test_validate_bad_date():
    with pytest.raises(RecordRejected) as exc:
        make_record(start_date="2015-13-40")
    assert exc.value.reason == "bad_date"


def test_validate_name_empty_after_normalization():
    with pytest.raises(RecordRejected) as exc:
        make_record(buyer_id="¤¤¤")
    assert exc.value.reason == "empty_after_normalization"
    assert exc.value.field == "buyer_id"


def test_validate_reports_first_offending_field_in_canonical_order():
    # Both buyer_id and spending are bad; buyer_id comes first.
    with pytest.raises(RecordRejected) as exc:
        make_record(buyer_id="", spending="-1")
    assert exc.value.field == "buyer_id"
    assert tuple(FIELD_ORDER[:2]) == ("buyer_id", "supplier_id")


def test_label_values():
    assert Label.C.value == "C"
    assert Label.NC.value == "NC"
    assert set(Label) == {Label.C, Label.NC}


def test_feature_spec_numeric_encode():
    spec = FeatureSpec("x", "numeric")
    assert spec.encode("2.5") == 2.5
    assert spec.decode(2.5) == 2.5


def test_feature_spec_categorical_encode_decode():
    spec = FeatureSpec("go", "categorical", ("APF", "GE", "GM"))
    assert spec.encode("APF") == 0.0
    assert spec.encode("GM") == 2.0
    assert spec.decode(1.0) == "GE"


def test_feature_spec_unseen_level_encodes_negative():
    spec = FeatureSpec("go", "categorical", ("APF", "GE"))
    assert spec.encode("OTHER") == -1.0
    assert spec.decode(-1.0) is None


def test_feature_spec_rejects_bad_kind_and_levels():
    with pytest.raises(ValueError):
        FeatureSpec("x", "ordinal")
    with pytest.raises(ValueError):
        FeatureSpec("x", "categorical")
    with pytest.raises(ValueError):
        FeatureSpec("x", "numeric", ("A",))
    with pytest.raises(ValueError):
        FeatureSpec("x", "categorical", ("A", "A"))


def test_feature_spec_level_cap():
    levels = tuple(f"L{i}" for i in range(MAX_CATEGORICAL_LEVELS + 1))
    with pytest.raises(ValueError):
        FeatureSpec("x", "categorical", levels)
    FeatureSpec("x", "categorical", levels[:-1])  # at the cap is fine


def test_schema_order_index_and_subset():
    schema = FeatureSchema(
        [
            FeatureSpec("a", "numeric"),
            FeatureSpec("b", "categorical", ("X", "Y")),
            FeatureSpec("c", "numeric"),
        ]
    )
    assert schema.names == ("a", "b", "c")
    assert schema.index("b") == 1
    assert schema["b"].kind == "categorical"
    sub = schema.subset(["c", "a"])
    assert sub.names == ("a", "c")  # subset keeps schema order
    assert schema.column_indices(sub.names) == [0, 2]
    with pytest.raises(KeyError):
        schema.subset(["nope"])


def test_schema_rejects_duplicate_names():
    with pytest.raises(ValueError):
        FeatureSchema([FeatureSpec("a", "numeric"), FeatureSpec("a", "numeric")])


def test_schema_json_round_trip():
    schema = FeatureSchema(
        [
            FeatureSpec("a", "numeric"),
            FeatureSpec("b", "categorical", ("X", "Y", "Z")),
        ]
    )
    again = FeatureSchema.from_json(schema.to_json())
    assert again == schema
    assert hash(again) == hash(schema)
    assert again.names == ("a", "b")
