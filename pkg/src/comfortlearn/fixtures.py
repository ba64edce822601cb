"""Packaged data files and their self-check.

The package ships three kinds of static data under ``data/``: the
city -> Köppen-group table, column-mapping templates for the public
survey datasets, and tiny hand-built fixture CSVs, each paired with its
expected canonical output under ``data/fixtures/expected/``.
:func:`validate_fixtures` re-ingests every fixture and reports
field-level differences against those expectations, so any edit to the
ingestion path or the data files shows up as a named cell, not a vague
checksum failure.

:func:`zone_pool_records` builds the structural stand-in for the pooled
multi-city corpus: the exact per-zone conditioned row counts, plus rows
a pool filter must reject. It is generated, not checked in, because the
full pool is thirteen thousand rows.
"""

from __future__ import annotations

import csv
import io
import tempfile
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .dataset import (
    ClimateZone,
    ComfortRecord,
    Ventilation,
    canonical_mapping,
    enrich_climate,
    load_city_zones,
    load_dataset,
    load_mapping,
    records_to_csv,
)

__all__ = [
    "ZONE_CITY_POOLS",
    "FixtureCheck",
    "FixtureReport",
    "data_path",
    "validate_fixtures",
    "zone_pool_records",
]

#: Köppen grouping of the 26 pooled survey cities, with the number of
#: mechanically conditioned responses each group contributes to the pool.
ZONE_CITY_POOLS: dict[ClimateZone, tuple[tuple[str, ...], int]] = {
    ClimateZone.TROPICAL: (
        ("Townsville", "Jakarta", "Darwin", "Bankok", "Singapore"),
        3826,
    ),
    ClimateZone.DRY: (
        ("Honolulu", "Kalgoorlie-Boulder", "Karachi", "Quettar", "Multan", "Peshawar"),
        3290,
    ),
    ClimateZone.TEMPERATE: (
        ("Brisbane", "Melbourne", "Athens", "South Wales", "Sydney",
         "San Francisco", "Merseyside", "San Ramon", "Antioch", "Auburn",
         "Oxford", "Saidu"),
        3512,
    ),
    ClimateZone.CONTINENTAL: (
        ("Ottawa", "Montreal", "Grand Rapids"),
        2808,
    ),
}


def data_path(*parts: str) -> Path:
    """Path of a packaged data file (zone table, mappings, fixtures)."""
    return Path(str(resources.files(__package__))) / "data" / Path(*parts)


def zone_pool_records() -> list[ComfortRecord]:
    """Deterministic corpus with the pooled per-zone conditioned row counts.

    Each zone's total is spread over its cities; a remainder of r puts one
    extra row in each of the first r cities. Every city additionally gets
    one naturally ventilated row, and the list ends with conditioned rows
    in a city of no known zone. A conditioning-plus-zone filter must
    exclude all of those for the per-zone counts to come out exact.
    """
    records: list[ComfortRecord] = []
    votes = (-2.0, -1.0, 0.0, 1.0, 2.0)
    for zone, (cities, total) in ZONE_CITY_POOLS.items():
        base, extra = divmod(total, len(cities))
        for i, city in enumerate(cities):
            for j in range(base + (1 if i < extra else 0)):
                records.append(ComfortRecord(
                    raw_vote=votes[j % len(votes)], city=city,
                    climate_zone=zone, ventilation=Ventilation.HVAC))
        for city in cities:
            records.append(ComfortRecord(
                raw_vote=0.0, city=city,
                climate_zone=zone, ventilation=Ventilation.NV))
    for _ in range(7):
        records.append(ComfortRecord(
            raw_vote=1.0, city="Atlantis", ventilation=Ventilation.HVAC))
    return records


# ---------------------------------------------------------------------------
# Fixture validation
# ---------------------------------------------------------------------------

#: fixture stem -> (mapping file under data/mappings or None for the
#: canonical form, whether to run the city->zone enrichment afterwards)
_CASES: tuple[tuple[str, str | None, bool], ...] = (
    ("basic_mixed", None, False),
    ("null_votes", None, False),
    ("out_of_range", None, False),
    ("renamed_columns", "renamed_columns.mapping", False),
    ("zone_cities", None, True),
)


@dataclass
class FixtureCheck:
    name: str
    ok: bool
    differences: list[str]


@dataclass
class FixtureReport:
    """Pass/fail per fixture, with field-level differences on failure."""

    checks: list[FixtureCheck]

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def __str__(self) -> str:
        lines = []
        for c in self.checks:
            lines.append(f"{'PASS' if c.ok else 'FAIL'} {c.name}")
            lines.extend(f"  {d}" for d in c.differences)
        return "\n".join(lines)


def _diff_tables(got_text: str, want_text: str, label: str) -> list[str]:
    """Cell-by-cell CSV comparison, naming the column of each mismatch."""
    got = list(csv.reader(io.StringIO(got_text)))
    want = list(csv.reader(io.StringIO(want_text)))
    diffs = []
    if len(got) != len(want):
        diffs.append(f"{label}: produced {len(got)} rows, expected {len(want)}")
    header = want[0] if want else []
    for r, (grow, wrow) in enumerate(zip(got, want)):
        for c in range(max(len(grow), len(wrow))):
            g = grow[c] if c < len(grow) else "<absent>"
            w = wrow[c] if c < len(wrow) else "<absent>"
            if g != w:
                col = header[c] if r > 0 and c < len(header) else f"column {c}"
                where = "header" if r == 0 else f"row {r}"
                diffs.append(f"{label} {where}, {col}: got {g!r}, expected {w!r}")
    return diffs


def _canonical_text(records) -> str:
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "canonical.csv"
        records_to_csv(records, path)
        return path.read_text(encoding="utf-8")


def _drops_text(drop_reasons) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["reason", "count"])
    for reason, count in sorted(drop_reasons.items()):
        w.writerow([reason, count])
    return buf.getvalue()


def _check_fixture(name: str, mapping_file: str | None, enrich: bool) -> FixtureCheck:
    mapping = (load_mapping(data_path("mappings", mapping_file))
               if mapping_file else canonical_mapping(name))
    result = load_dataset(data_path("fixtures", f"{name}.csv"), mapping)
    records = result.records
    if enrich:
        records = enrich_climate(records, load_city_zones(data_path("city_zones.txt")))

    expected_dir = data_path("fixtures", "expected")
    diffs = _diff_tables(
        _canonical_text(records),
        (expected_dir / f"{name}.canonical.csv").read_text(encoding="utf-8"),
        "canonical")
    diffs += _diff_tables(
        _drops_text(result.drop_reasons),
        (expected_dir / f"{name}.drops.csv").read_text(encoding="utf-8"),
        "drops")
    return FixtureCheck(name=name, ok=not diffs, differences=diffs)


def _check_zone_table() -> FixtureCheck:
    """Every pooled city must resolve in the shipped zone table, to the
    zone its group says."""
    table = load_city_zones(data_path("city_zones.txt"))
    diffs = []
    for zone, (cities, _) in ZONE_CITY_POOLS.items():
        for city in cities:
            found = table.get(city.lower())
            if found is None:
                diffs.append(f"{city}: missing from the zone table")
            elif found is not zone:
                diffs.append(f"{city}: zone {found.value}, expected {zone.value}")
    return FixtureCheck(name="zone_table_coverage", ok=not diffs, differences=diffs)


def validate_fixtures() -> FixtureReport:
    """Re-ingest every fixture and diff against its expected outputs."""
    checks = []
    for name, mapping_file, enrich in _CASES:
        try:
            checks.append(_check_fixture(name, mapping_file, enrich))
        except Exception as exc:  # a broken fixture should fail, not crash
            checks.append(FixtureCheck(name=name, ok=False,
                                       differences=[f"load failed: {exc}"]))
    checks.append(_check_zone_table())
    return FixtureReport(checks=checks)
