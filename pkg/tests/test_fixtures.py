"""Shipped-data checks: fixture freeze, zone table, pooled-corpus counts."""

from collections import Counter

from comfortlearn.dataset import (
    ClimateZone,
    Ventilation,
    filter_pool,
    load_city_zones,
    load_mapping,
)
from comfortlearn.fixtures import (
    ZONE_CITY_POOLS,
    data_path,
    validate_fixtures,
    zone_pool_records,
)


def test_every_shipped_fixture_matches_its_frozen_expectation():
    report = validate_fixtures()
    assert report.ok, "\n" + str(report)


def test_fixture_report_is_readable():
    report = validate_fixtures()
    text = str(report)
    assert "PASS" in text
    assert len(report.checks) >= 6  # five cases plus the zone-table check


def test_zone_city_pools_shape():
    assert set(ZONE_CITY_POOLS) == {
        ClimateZone.TROPICAL, ClimateZone.DRY,
        ClimateZone.TEMPERATE, ClimateZone.CONTINENTAL}
    cities, total = ZONE_CITY_POOLS[ClimateZone.TROPICAL]
    assert len(cities) == 5 and total == 3826
    cities, total = ZONE_CITY_POOLS[ClimateZone.DRY]
    assert len(cities) == 6 and total == 3290
    cities, total = ZONE_CITY_POOLS[ClimateZone.TEMPERATE]
    assert len(cities) == 12 and total == 3512
    cities, total = ZONE_CITY_POOLS[ClimateZone.CONTINENTAL]
    assert len(cities) == 3 and total == 2808


def test_zone_pool_records_reproduce_published_pool_sizes():
    records = zone_pool_records()
    for zone, (_, expected_total) in ZONE_CITY_POOLS.items():
        pool = filter_pool(records, ventilation=Ventilation.HVAC,
                           climate_zone=zone)
        assert len(pool) == expected_total, zone
    zoned_hvac = filter_pool(
        records, ventilation=Ventilation.HVAC,
        climate_zone=set(ZONE_CITY_POOLS))
    assert len(zoned_hvac) == 3826 + 3290 + 3512 + 2808
    # the corpus also carries NV rows and unzoned rows as filter distractors
    all_hvac = filter_pool(records, ventilation=Ventilation.HVAC)
    assert len(all_hvac) > len(zoned_hvac)


def test_zone_pool_city_totals_spread_evenly():
    records = zone_pool_records()
    for zone, (cities, total) in ZONE_CITY_POOLS.items():
        counts = Counter(
            r.city for r in filter_pool(records, ventilation=Ventilation.HVAC,
                                        climate_zone=zone))
        assert sum(counts.values()) == total
        assert set(counts) == set(cities)
        assert max(counts.values()) - min(counts.values()) <= 1


def test_shipped_zone_table_covers_every_pooled_city():
    table = load_city_zones(data_path("city_zones.txt"))
    for zone, (cities, _) in ZONE_CITY_POOLS.items():
        for city in cities:
            assert table.get(city.lower()) is zone, city


def test_shipped_mappings_parse():
    mapping_dir = data_path("mappings")
    names = sorted(p.name for p in mapping_dir.glob("*.mapping"))
    assert len(names) >= 3
    for name in names:
        mapping = load_mapping(mapping_dir / name)
        assert "raw_vote" in mapping.columns, name
