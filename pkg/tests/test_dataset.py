"""Ingestion, vote merging, pooling, and scaling tests."""

import math
import textwrap

import numpy as np
import pytest

from comfortlearn.dataset import (
    CANONICAL_COLUMNS,
    FEATURE_SETS,
    GENDER_CODES,
    SHARED_SOURCE_FEATURES,
    XA,
    XB,
    XC,
    ClimateZone,
    ColumnMapping,
    ComfortRecord,
    DatasetError,
    FeatureSet,
    SensationClass,
    Standardizer,
    Ventilation,
    assemble_matrix,
    canonical_mapping,
    enrich_climate,
    filter_pool,
    fit_standardizer,
    labels_for,
    load_city_zones,
    load_dataset,
    load_mapping,
    merge_classes,
    records_to_csv,
    summarize_dataset,
)


def make_record(vote=0.0, **overrides):
    base = dict(
        raw_vote=vote, city="x", dataset_id="t", ventilation=Ventilation.HVAC,
        indoor_at=22.0, indoor_rh=60.0, indoor_av=0.1, indoor_mrt=22.0,
        outdoor_at=15.0, outdoor_rh=50.0, clo=0.5, met=1.2,
        age=30.0, gender="female",
    )
    base.update(overrides)
    return ComfortRecord(**base)


# ---------------------------------------------------------------------------
# Vote merging
# ---------------------------------------------------------------------------

def test_merge_rounds_half_away_from_zero_and_folds_extremes():
    # Worked by hand: round half away from zero, then clamp +-3 onto +-2.
    cases = [(-3.0, -2), (-2.5, -2), (-1.5, -2), (-0.5, -1),
             (0.5, 1), (1.49, 1), (2.5, 2), (3.0, 2)]
    for vote, expected in cases:
        assert int(merge_classes(vote)) == expected, vote


def test_merge_keeps_neutral_interior():
    assert merge_classes(0.0) is SensationClass.NEUTRAL
    assert merge_classes(0.49) is SensationClass.NEUTRAL
    assert merge_classes(-0.49) is SensationClass.NEUTRAL


def test_merge_rejects_out_of_scale_votes():
    for bad in (3.01, -3.5, math.nan, math.inf):
        with pytest.raises(ValueError):
            merge_classes(bad)


def test_labels_for_matches_elementwise_merge():
    records = [make_record(vote=v) for v in (-2.6, -1.0, 0.2, 1.5, 3.0)]
    np.testing.assert_array_equal(labels_for(records), [-3 + 1, -1, 0, 2, 2])


# ---------------------------------------------------------------------------
# Mappings and zone tables
# ---------------------------------------------------------------------------

def test_load_mapping_parses_sections_and_decoders(tmp_path):
    text = textwrap.dedent("""\
        [dataset]
        id = survey_x

        [columns]
        raw_vote = ASH
        city = CITY
        indoor_at = TAAV
        gender = SEX
        ventilation = COOL

        [gender_values]
        1 = male
        2 = female

        [ventilation_values]
        1 = HVAC
        0 = NV
        """)
    path = tmp_path / "x.mapping"
    path.write_text(text)
    mapping = load_mapping(path)
    assert mapping.dataset_id == "survey_x"
    assert mapping.columns["raw_vote"] == "ASH"
    assert mapping.gender_values == {"1": "male", "2": "female"}
    assert mapping.ventilation_values == {"1": "HVAC", "0": "NV"}


def test_mapping_rejects_unknown_canonical_field():
    with pytest.raises(DatasetError):
        ColumnMapping(dataset_id="t", columns={"shoe_size": "SHOE"})


def test_canonical_mapping_covers_every_output_column_except_id():
    mapping = canonical_mapping("anything")
    assert "dataset_id" not in mapping.columns
    assert set(mapping.columns) == set(CANONICAL_COLUMNS) - {"dataset_id"}


def test_load_city_zones_case_insensitive_with_comments(tmp_path):
    path = tmp_path / "zones.txt"
    path.write_text("# comment line\nSydney = C\n\nDarwin = A\n")
    table = load_city_zones(path)
    assert table["sydney"] is ClimateZone.TEMPERATE
    assert table["darwin"] is ClimateZone.TROPICAL


def test_load_city_zones_rejects_bad_group(tmp_path):
    path = tmp_path / "zones.txt"
    path.write_text("Sydney = Q\n")
    with pytest.raises(DatasetError):
        load_city_zones(path)


# ---------------------------------------------------------------------------
# CSV loading
# ---------------------------------------------------------------------------

HEADER = ",".join(CANONICAL_COLUMNS)


def write_csv(tmp_path, rows, header=HEADER):
    path = tmp_path / "survey.csv"
    path.write_text(header + "\n" + "\n".join(rows) + "\n")
    return path


def row(vote="0.0", at="22.0", met="1.2"):
    return f"t,x,C,HVAC,{vote},{at},60.0,0.1,22.0,15.0,50.0,0.5,{met},30.0,female"


def test_load_counts_drop_reasons(tmp_path):
    path = write_csv(tmp_path, [
        row(),                 # clean
        row(vote=""),          # no vote
        row(at="60.0"),        # indoor_at outside envelope
        row(met="0.2"),        # met outside envelope
        row(vote="not-a-number"),
    ])
    result = load_dataset(path, canonical_mapping("t"))
    assert len(result.records) == 1
    assert result.dropped == 4
    assert result.drop_reasons == {
        "missing_vote": 2, "range:indoor_at": 1, "range:met": 1}


def test_load_preserves_row_order_and_is_deterministic(tmp_path):
    path = write_csv(tmp_path, [row(vote="-1.0"), row(vote="0.0"), row(vote="2.0")])
    first = load_dataset(path, canonical_mapping("t"))
    second = load_dataset(path, canonical_mapping("t"))
    assert [r.raw_vote for r in first.records] == [-1.0, 0.0, 2.0]
    assert first.records == second.records


def test_load_rejects_structurally_broken_headers(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,,b\n1,2,3\n")
    with pytest.raises(DatasetError):
        load_dataset(path, ColumnMapping("t", {"raw_vote": "a"}))
    path.write_text("a,a,b\n1,2,3\n")
    with pytest.raises(DatasetError):
        load_dataset(path, ColumnMapping("t", {"raw_vote": "a"}))
    path.write_text("a,b\n1,2\n")
    with pytest.raises(DatasetError):
        load_dataset(path, ColumnMapping("t", {"raw_vote": "missing_col"}))


def test_load_tolerates_bom_and_blank_lines(tmp_path):
    path = tmp_path / "bom.csv"
    path.write_bytes(b"\xef\xbb\xbf" + (HEADER + "\n" + row() + "\n\n" + row() + "\n").encode())
    result = load_dataset(path, canonical_mapping("t"))
    assert len(result.records) == 2
    assert result.dropped == 0


def test_load_decodes_tokens_through_mapping(tmp_path):
    path = tmp_path / "coded.csv"
    path.write_text("V,S,M\n1.0,2,1\n0.0,1,0\n0.5,,\n")
    mapping = ColumnMapping(
        dataset_id="coded",
        columns={"raw_vote": "V", "gender": "S", "ventilation": "M"},
        gender_values={"1": "male", "2": "female"},
        ventilation_values={"1": "HVAC", "0": "NV"},
    )
    result = load_dataset(path, mapping)
    assert [r.gender for r in result.records] == ["female", "male", "other"]
    assert [r.ventilation for r in result.records] == [
        Ventilation.HVAC, Ventilation.NV, Ventilation.UNKNOWN]


def test_round_trip_through_canonical_csv(tmp_path):
    originals = [
        make_record(vote=-1.5, age=26.0),
        make_record(vote=2.0, clo=None, climate_zone=ClimateZone.DRY),
        make_record(vote=0.5, gender="other", ventilation=Ventilation.NV),
    ]
    path = tmp_path / "canonical.csv"
    records_to_csv(originals, path)
    reloaded = load_dataset(path, canonical_mapping("t")).records
    assert len(reloaded) == 3
    for a, b in zip(originals, reloaded):
        assert a.raw_vote == b.raw_vote
        assert a.clo == b.clo
        assert a.gender == b.gender
        assert a.ventilation == b.ventilation
        assert a.climate_zone == b.climate_zone


def test_round_trip_survives_numpy_scalars(tmp_path):
    # Regression: repr of a numpy float64 is "np.float64(...)" on current
    # numpy, which silently reloads as a missing value. The writer must
    # coerce to builtin floats.
    rec = make_record(vote=float(np.float64(1.0)), indoor_at=np.float64(21.75))
    path = tmp_path / "np.csv"
    records_to_csv([rec], path)
    text = path.read_text()
    assert "np.float64" not in text
    reloaded = load_dataset(path, canonical_mapping("t")).records
    assert reloaded[0].indoor_at == 21.75


def test_written_csv_is_byte_deterministic(tmp_path):
    records = [make_record(vote=v) for v in (-1.0, 0.0, 1.0)]
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    records_to_csv(records, p1)
    records_to_csv(records, p2)
    assert p1.read_bytes() == p2.read_bytes()


# ---------------------------------------------------------------------------
# Zone enrichment and pool filtering
# ---------------------------------------------------------------------------

def test_enrich_treats_table_as_authoritative():
    table = {"sydney": ClimateZone.TEMPERATE, "darwin": ClimateZone.TROPICAL}
    records = [
        make_record(city="SYDNEY", climate_zone=None),
        make_record(city="darwin", climate_zone=ClimateZone.DRY),  # corrected
        make_record(city="atlantis", climate_zone=None),           # not in table
    ]
    out = enrich_climate(records, table)
    assert out[0].climate_zone is ClimateZone.TEMPERATE
    assert out[1].climate_zone is ClimateZone.TROPICAL
    assert out[2].climate_zone is None
    assert len(out) == 3  # unknown cities are kept, not dropped


def test_filter_pool_predicates():
    records = [
        make_record(ventilation=Ventilation.HVAC, climate_zone=ClimateZone.TROPICAL),
        make_record(ventilation=Ventilation.NV, climate_zone=ClimateZone.TROPICAL),
        make_record(ventilation=Ventilation.HVAC, climate_zone=None),
        make_record(ventilation=Ventilation.HVAC, climate_zone=ClimateZone.DRY),
    ]
    assert len(filter_pool(records, ventilation=Ventilation.HVAC)) == 3
    tropical = filter_pool(records, ventilation=Ventilation.HVAC,
                           climate_zone=ClimateZone.TROPICAL)
    assert tropical == [records[0]]
    either = filter_pool(records, climate_zone={ClimateZone.TROPICAL, ClimateZone.DRY})
    assert len(either) == 3  # unzoned record never matches a zone predicate


# ---------------------------------------------------------------------------
# Feature sets, matrices, scaling
# ---------------------------------------------------------------------------

def test_feature_set_sizes_and_nesting():
    assert len(XA.members) == 6
    assert len(XB.members) == 8
    assert len(XC.members) == 10
    assert len(SHARED_SOURCE_FEATURES.members) == 8
    assert set(XA.members) < set(XB.members) < set(XC.members)
    # the shared set swaps the two lab-measured factors for outdoor weather
    assert "clo" not in SHARED_SOURCE_FEATURES.members
    assert "met" not in SHARED_SOURCE_FEATURES.members
    assert set(FEATURE_SETS) == {"Xa", "Xb", "Xc", "shared8"}


def test_feature_set_rejects_unknown_and_duplicate_members():
    with pytest.raises(ValueError):
        FeatureSet("bad", ("indoor_at", "shoe_size"))
    with pytest.raises(ValueError):
        FeatureSet("dup", ("indoor_at", "indoor_at"))


def test_assemble_matrix_skips_incomplete_records():
    records = [
        make_record(vote=1.0),
        make_record(vote=0.0, clo=None),  # lacks an Xa member
        make_record(vote=-1.0),
    ]
    X, y, kept = assemble_matrix(records, XA)
    assert X.shape == (2, 6)
    assert kept == [0, 2]
    np.testing.assert_array_equal(y, [1, -1])
    # but the shared set ignores clo, so all three qualify there
    X2, _, kept2 = assemble_matrix(records, SHARED_SOURCE_FEATURES)
    assert kept2 == [0, 1, 2]
    assert X2.shape == (3, 8)


def test_gender_encoded_as_numeric_feature():
    records = [make_record(gender=g) for g in ("male", "female", "other")]
    X, _, _ = assemble_matrix(records, XB)
    col = XB.members.index("gender")
    assert list(X[:, col]) == [GENDER_CODES["male"], GENDER_CODES["female"],
                               GENDER_CODES["other"]]


def test_standardizer_centers_training_data():
    rng = np.random.default_rng(0)
    X = rng.normal(5.0, 3.0, size=(200, 4))
    std = Standardizer.from_matrix(X, XA)  # feature_set only labels it here
    Z = std.transform(X)
    np.testing.assert_allclose(Z.mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(Z.std(axis=0), 1.0, atol=1e-12)
    np.testing.assert_allclose(std.inverse(Z), X, atol=1e-12)


def test_standardizer_keeps_constant_columns_finite():
    X = np.column_stack([np.ones(10), np.arange(10.0)])
    std = Standardizer.from_matrix(X, XA)
    Z = std.transform(X)
    assert np.all(np.isfinite(Z))
    np.testing.assert_array_equal(Z[:, 0], 0.0)


def test_standardizer_rejects_column_mismatch():
    X = np.ones((5, 3))
    std = Standardizer.from_matrix(X, XA)
    with pytest.raises(ValueError):
        std.transform(np.ones((5, 4)))


def test_fit_standardizer_names_the_absent_feature():
    records = [make_record(clo=None), make_record(clo=None)]
    with pytest.raises(ValueError, match="clo"):
        fit_standardizer(records, XA)
    with pytest.raises(ValueError):
        fit_standardizer([], XA)


# ---------------------------------------------------------------------------
# Summaries
# ---------------------------------------------------------------------------

def test_summary_counts_and_quartiles():
    records = [make_record(vote=v, indoor_at=at) for v, at in
               [(-2.0, 18.0), (-1.0, 20.0), (0.0, 22.0), (0.0, 23.0), (2.0, 28.0)]]
    summary = summarize_dataset(records)
    assert summary.class_counts == {-2: 1, -1: 1, 0: 2, 1: 0, 2: 1}
    stats = summary.feature_stats["indoor_at"]
    assert stats["min"] == 18.0 and stats["max"] == 28.0
    assert stats["median"] == 22.0
    assert summary.class_indoor_at[0]["count"] == 2.0
    assert 1 not in summary.class_indoor_at  # no rows, no entry


def test_summary_write_is_deterministic(tmp_path):
    records = [make_record(vote=v) for v in (-1.0, 0.0, 1.0)]
    summary = summarize_dataset(records)
    d1, d2 = tmp_path / "a", tmp_path / "b"
    summary.write(d1)
    summary.write(d2)
    for name in ("class_counts.csv", "feature_stats.csv",
                 "class_indoor_at_quartiles.csv"):
        assert (d1 / name).read_bytes() == (d2 / name).read_bytes()
