"""Survey ingestion and preparation: canonical records, class merging,
standardization, climate enrichment, pool filtering and dataset summaries.

Raw survey exports arrive as CSV files with dataset-specific column names.
A :class:`ColumnMapping` translates one export format into the canonical
:class:`ComfortRecord` form; everything downstream works on canonical
records only.
"""

from __future__ import annotations

import configparser
import csv
import logging
import math
from collections import Counter
from dataclasses import dataclass, fields, replace
from enum import Enum, IntEnum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

logger = logging.getLogger(__name__)


class DatasetError(Exception):
    """Raised for unreadable files, malformed headers or bad mappings."""


class SensationClass(IntEnum):
    """Thermal sensation on the merged five-point scale (cold side negative)."""

    COLD_OR_COOL = -2
    SLIGHTLY_COOL = -1
    NEUTRAL = 0
    SLIGHTLY_WARM = 1
    WARM_OR_HOT = 2


#: Fixed class order used for one-hot encoding, confusion matrices and reports.
CLASS_VALUES: tuple[int, ...] = (-2, -1, 0, 1, 2)


class ClimateZone(Enum):
    """Main Köppen group (first letter only)."""

    TROPICAL = "A"
    DRY = "B"
    TEMPERATE = "C"
    CONTINENTAL = "D"
    POLAR = "E"


class Ventilation(Enum):
    HVAC = "HVAC"
    NV = "NV"
    MIXED = "mixed"
    UNKNOWN = "unknown"


#: Canonical numeric feature fields, in serialization order.
NUMERIC_FEATURES: tuple[str, ...] = (
    "indoor_at",
    "indoor_rh",
    "indoor_av",
    "indoor_mrt",
    "outdoor_at",
    "outdoor_rh",
    "clo",
    "met",
    "age",
)

#: All model features; "gender" is categorical and gets encoded numerically.
ALL_FEATURES: tuple[str, ...] = NUMERIC_FEATURES + ("gender",)

#: Physical range envelopes; values outside these drop the whole row at ingest.
RANGE_LIMITS: dict[str, tuple[float, float]] = {
    "indoor_at": (0.0, 50.0),
    "indoor_rh": (0.0, 100.0),
    "indoor_av": (0.0, 5.0),
    "clo": (0.0, 4.0),
    "met": (0.5, 10.0),
}

GENDER_CODES: dict[str, float] = {"male": 0.0, "female": 1.0, "other": 0.5}


@dataclass(frozen=True)
class ComfortRecord:
    """One survey response in canonical form.

    Optional measurements are ``None`` when the source file does not carry
    them; design-matrix assembly drops records missing a required feature.
    """

    raw_vote: float
    city: str = ""
    dataset_id: str = ""
    ventilation: Ventilation = Ventilation.UNKNOWN
    climate_zone: ClimateZone | None = None
    indoor_at: float | None = None
    indoor_rh: float | None = None
    indoor_av: float | None = None
    indoor_mrt: float | None = None
    outdoor_at: float | None = None
    outdoor_rh: float | None = None
    clo: float | None = None
    met: float | None = None
    age: float | None = None
    gender: str = "other"

    def feature_value(self, name: str) -> float | None:
        """Numeric value of a model feature, encoding gender as 0/1/0.5."""
        if name == "gender":
            return GENDER_CODES.get(self.gender, 0.5)
        return getattr(self, name)

    def violations(self) -> list[str]:
        """Range-invariant violations for this record (empty when clean)."""
        problems = []
        if not (math.isfinite(self.raw_vote) and -3.0 <= self.raw_vote <= 3.0):
            problems.append(f"raw_vote={self.raw_vote!r} outside [-3, 3]")
        for name, (lo, hi) in RANGE_LIMITS.items():
            value = getattr(self, name)
            if value is not None and not (lo <= value <= hi):
                problems.append(f"{name}={value!r} outside [{lo}, {hi}]")
        return problems


@dataclass(frozen=True)
class FeatureSet:
    """Named, ordered subset of model features."""

    tag: str
    members: tuple[str, ...]

    def __post_init__(self):
        unknown = [m for m in self.members if m not in ALL_FEATURES]
        if unknown:
            raise ValueError(f"unknown features {unknown}")
        if len(set(self.members)) != len(self.members):
            raise ValueError("duplicate feature names")


#: The six heat-balance factors.
XA = FeatureSet("Xa", ("indoor_at", "indoor_av", "indoor_rh", "indoor_mrt", "clo", "met"))
#: Xa plus the two background-survey personal factors.
XB = FeatureSet("Xb", XA.members + ("age", "gender"))
#: Xb plus the two outdoor weather factors: the full ten-feature set.
XC = FeatureSet("Xc", XB.members + ("outdoor_at", "outdoor_rh"))
#: The eight features the pooled multi-city sources share with the target.
SHARED_SOURCE_FEATURES = FeatureSet(
    "shared8",
    (
        "indoor_at",
        "indoor_rh",
        "indoor_av",
        "indoor_mrt",
        "outdoor_at",
        "outdoor_rh",
        "age",
        "gender",
    ),
)

FEATURE_SETS: dict[str, FeatureSet] = {fs.tag: fs for fs in (XA, XB, XC, SHARED_SOURCE_FEATURES)}


def merge_classes(raw_vote: float) -> SensationClass:
    """Map a raw sensation vote to the merged five-point scale.

    Continuous votes are rounded to the nearest integer (half away from
    zero), then the scale extremes are folded in: +3 -> +2 and -3 -> -2.
    """
    if not (math.isfinite(raw_vote) and -3.0 <= raw_vote <= 3.0):
        raise ValueError(f"raw vote {raw_vote!r} outside [-3, 3]")
    if raw_vote >= 0:
        rounded = math.floor(raw_vote + 0.5)
    else:
        rounded = math.ceil(raw_vote - 0.5)
    return SensationClass(max(-2, min(2, rounded)))


def labels_for(records: Sequence[ComfortRecord]) -> np.ndarray:
    """Merged class values for a record sequence, as an int array."""
    return np.array([int(merge_classes(r.raw_vote)) for r in records], dtype=np.int64)


# ---------------------------------------------------------------------------
# Column mappings and ingestion
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ColumnMapping:
    """Translation from one CSV export format to canonical record fields.

    ``columns`` maps canonical field name -> source column name. Canonical
    fields without an entry stay absent. ``gender_values`` and
    ``ventilation_values`` decode source tokens (matched case-insensitively).
    """

    dataset_id: str
    columns: Mapping[str, str]
    gender_values: Mapping[str, str] = None  # type: ignore[assignment]
    ventilation_values: Mapping[str, str] = None  # type: ignore[assignment]

    def __post_init__(self):
        object.__setattr__(self, "gender_values", dict(self.gender_values or {}))
        object.__setattr__(self, "ventilation_values", dict(self.ventilation_values or {}))
        known = set(ALL_FEATURES) | {"raw_vote", "city", "ventilation", "climate_zone", "dataset_id"}
        unknown = sorted(set(self.columns) - known)
        if unknown:
            raise DatasetError(f"mapping references unknown canonical fields: {unknown}")


#: Canonical CSV column order (ingest output; accepted back via canonical_mapping).
CANONICAL_COLUMNS: tuple[str, ...] = (
    "dataset_id",
    "city",
    "climate_zone",
    "ventilation",
    "raw_vote",
) + NUMERIC_FEATURES + ("gender",)


def canonical_mapping(dataset_id: str = "canonical") -> ColumnMapping:
    """Identity mapping for CSVs already in canonical column form."""
    columns = {name: name for name in CANONICAL_COLUMNS if name != "dataset_id"}
    return ColumnMapping(dataset_id=dataset_id, columns=columns)


def load_mapping(path: str | Path) -> ColumnMapping:
    """Parse a column-mapping config file.

    Format: INI-style sections ``[dataset]`` (key ``id``), ``[columns]``
    (canonical field = source column), and optional ``[gender_values]`` /
    ``[ventilation_values]`` token decoders.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such mapping file: {path}")
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # column names are case-sensitive
    parser.read(path, encoding="utf-8")
    if "columns" not in parser:
        raise DatasetError(f"{path}: mapping file lacks a [columns] section")
    dataset_id = parser.get("dataset", "id", fallback=path.stem)
    return ColumnMapping(
        dataset_id=dataset_id,
        columns=dict(parser["columns"]),
        gender_values={k.lower(): v for k, v in parser["gender_values"].items()}
        if "gender_values" in parser
        else {},
        ventilation_values={k.lower(): v for k, v in parser["ventilation_values"].items()}
        if "ventilation_values" in parser
        else {},
    )


def load_city_zones(path: str | Path) -> dict[str, ClimateZone]:
    """Parse a city -> Köppen main group table (``City = A..E`` lines)."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such city-zone table: {path}")
    table: dict[str, ClimateZone] = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DatasetError(f"{path}:{lineno}: expected 'City = Zone', got {raw!r}")
        city, _, letter = line.partition("=")
        letter = letter.split("#", 1)[0].strip().upper()
        try:
            zone = ClimateZone(letter)
        except ValueError:
            raise DatasetError(f"{path}:{lineno}: unknown zone letter {letter!r}") from None
        table[city.strip().lower()] = zone
    return table


@dataclass
class LoadResult:
    """Records plus bookkeeping about rows dropped during cleaning."""

    records: list[ComfortRecord]
    dropped: int
    drop_reasons: Counter


def _parse_float(cell: str) -> float | None:
    cell = cell.strip()
    if not cell or cell.lower() in ("na", "nan", "null", "none"):
        return None
    try:
        value = float(cell)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


_VENTILATION_ALIASES = {v.value.lower(): v for v in Ventilation}


def _parse_ventilation(token: str, mapping: ColumnMapping) -> Ventilation:
    token = token.strip()
    decoded = mapping.ventilation_values.get(token.lower(), token)
    return _VENTILATION_ALIASES.get(str(decoded).strip().lower(), Ventilation.UNKNOWN)


def _parse_gender(token: str, mapping: ColumnMapping) -> str:
    token = token.strip()
    decoded = str(mapping.gender_values.get(token.lower(), token)).strip().lower()
    return decoded if decoded in GENDER_CODES else "other"


def _parse_zone(token: str) -> ClimateZone | None:
    token = token.strip().upper()
    try:
        return ClimateZone(token)
    except ValueError:
        return None


def load_dataset(
    csv_path: str | Path,
    mapping: ColumnMapping,
    dataset_id: str | None = None,
) -> LoadResult:
    """Load one survey CSV into canonical records.

    Rows without a usable vote or with any value outside its range envelope
    are dropped and counted per reason. Row order is preserved, so the same
    file and mapping always produce the identical record list.
    """
    csv_path = Path(csv_path)
    if not csv_path.exists():
        raise FileNotFoundError(f"no such survey file: {csv_path}")
    dataset_id = dataset_id or mapping.dataset_id

    with open(csv_path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{csv_path}: empty file (no header row)") from None
        header = [h.strip() for h in header]
        if any(not h for h in header):
            raise DatasetError(f"{csv_path}: header has empty column names")
        if len(set(header)) != len(header):
            raise DatasetError(f"{csv_path}: header has duplicate column names")
        missing = sorted(set(mapping.columns.values()) - set(header))
        if missing:
            raise DatasetError(f"{csv_path}: mapping references absent columns {missing}")
        col_index = {field: header.index(col) for field, col in mapping.columns.items()}

        records: list[ComfortRecord] = []
        reasons: Counter = Counter()
        for row in reader:
            if not any(cell.strip() for cell in row):
                continue  # blank line

            def cell(field: str) -> str:
                idx = col_index.get(field)
                return row[idx] if idx is not None and idx < len(row) else ""

            vote = _parse_float(cell("raw_vote"))
            if vote is None:
                reasons["missing_vote"] += 1
                continue

            values: dict[str, float | None] = {
                name: _parse_float(cell(name)) for name in NUMERIC_FEATURES
            }
            record = ComfortRecord(
                raw_vote=vote,
                city=cell("city").strip(),
                dataset_id=dataset_id,
                ventilation=_parse_ventilation(cell("ventilation"), mapping),
                climate_zone=_parse_zone(cell("climate_zone")),
                gender=_parse_gender(cell("gender"), mapping),
                **values,
            )
            problems = record.violations()
            if problems:
                reasons["range:" + problems[0].split("=", 1)[0]] += 1
                continue
            records.append(record)

    dropped = sum(reasons.values())
    if dropped:
        logger.info("%s: kept %d rows, dropped %d (%s)",
                    csv_path.name, len(records), dropped, dict(reasons))
    return LoadResult(records=records, dropped=dropped, drop_reasons=reasons)


def records_to_csv(records: Iterable[ComfortRecord], path: str | Path) -> None:
    """Write records as a canonical CSV (deterministic byte-for-byte)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CANONICAL_COLUMNS)
        for r in records:
            # repr of a builtin float is the shortest exact form; numpy
            # scalars repr as np.float64(...), so coerce first
            row = [r.dataset_id, r.city,
                   r.climate_zone.value if r.climate_zone else "",
                   r.ventilation.value, repr(float(r.raw_vote))]
            for name in NUMERIC_FEATURES:
                value = getattr(r, name)
                row.append("" if value is None else repr(float(value)))
            row.append(r.gender)
            writer.writerow(row)


# ---------------------------------------------------------------------------
# Climate enrichment and pool filtering
# ---------------------------------------------------------------------------

def enrich_climate(
    records: Sequence[ComfortRecord],
    city_zone_table: Mapping[str, ClimateZone],
) -> list[ComfortRecord]:
    """Attach main Köppen groups by city lookup (case-insensitive).

    Unknown cities keep their record (zone left as-is) and are reported in
    one warning; nothing is dropped here.
    """
    table = {city.strip().lower(): zone for city, zone in city_zone_table.items()}
    out: list[ComfortRecord] = []
    unknown: Counter = Counter()
    for r in records:
        zone = table.get(r.city.strip().lower())
        if zone is not None:
            out.append(replace(r, climate_zone=zone))
        else:
            if r.city.strip() and r.climate_zone is None:
                unknown[r.city] += 1
            out.append(r)
    if unknown:
        logger.warning("%d records from %d cities not in the zone table: %s",
                       sum(unknown.values()), len(unknown),
                       ", ".join(sorted(unknown)))
    return out


def filter_pool(
    records: Sequence[ComfortRecord],
    ventilation: Ventilation | None = None,
    climate_zone: ClimateZone | Iterable[ClimateZone] | None = None,
) -> list[ComfortRecord]:
    """Records matching every supplied predicate, original order preserved.

    ``climate_zone`` accepts a single zone or a collection of zones; records
    without an assigned zone never match a zone predicate.
    """
    zones: frozenset[ClimateZone] | None
    if climate_zone is None:
        zones = None
    elif isinstance(climate_zone, ClimateZone):
        zones = frozenset((climate_zone,))
    else:
        zones = frozenset(climate_zone)
    out = []
    for r in records:
        if ventilation is not None and r.ventilation is not ventilation:
            continue
        if zones is not None and (r.climate_zone is None or r.climate_zone not in zones):
            continue
        out.append(r)
    return out


# ---------------------------------------------------------------------------
# Design matrices and standardization
# ---------------------------------------------------------------------------

def assemble_matrix(
    records: Sequence[ComfortRecord],
    feature_set: FeatureSet,
) -> tuple[np.ndarray, np.ndarray, list[int]]:
    """Build the design matrix for a feature set.

    Returns ``(X, y, kept)`` where ``kept`` holds the indices of records that
    have every member feature; records missing any member are skipped.
    """
    rows, labels, kept = [], [], []
    for i, r in enumerate(records):
        values = [r.feature_value(name) for name in feature_set.members]
        if any(v is None for v in values):
            continue
        rows.append(values)
        labels.append(int(merge_classes(r.raw_vote)))
        kept.append(i)
    X = np.array(rows, dtype=np.float64).reshape(len(rows), len(feature_set.members))
    y = np.array(labels, dtype=np.int64)
    return X, y, kept


@dataclass
class Standardizer:
    """Per-feature affine scaler fitted on a training partition only.

    Zero-variance columns keep a unit scale so constant features map to 0
    instead of blowing up; small target folds can have constant clo/gender.
    """

    feature_set: FeatureSet
    means: np.ndarray
    stds: np.ndarray

    @classmethod
    def from_matrix(cls, X: np.ndarray, feature_set: FeatureSet) -> "Standardizer":
        if X.size == 0:
            raise ValueError("cannot fit a standardizer on an empty matrix")
        means = X.mean(axis=0)
        stds = X.std(axis=0)
        stds = np.where(stds > 0.0, stds, 1.0)
        return cls(feature_set=feature_set, means=means, stds=stds)

    def transform(self, X: np.ndarray) -> np.ndarray:
        if X.shape[1] != self.means.shape[0]:
            raise ValueError(f"matrix has {X.shape[1]} columns, standardizer expects "
                             f"{self.means.shape[0]}")
        return (X - self.means) / self.stds

    def inverse(self, X: np.ndarray) -> np.ndarray:
        return X * self.stds + self.means


def fit_standardizer(records: Sequence[ComfortRecord], feature_set: FeatureSet) -> Standardizer:
    """Fit feature means/scales on (training) records.

    Raises if the record list is empty or some member feature is absent from
    every record.
    """
    if not records:
        raise ValueError("no records to fit on")
    X, _, kept = assemble_matrix(records, feature_set)
    if not kept:
        # pinpoint which feature kills every record, for the error message
        for name in feature_set.members:
            if all(r.feature_value(name) is None for r in records):
                raise ValueError(f"feature {name!r} is absent from every record")
        raise ValueError("no record carries the complete feature set "
                         f"{feature_set.tag}")
    return Standardizer.from_matrix(X, feature_set)


def apply_standardizer(
    standardizer: Standardizer, records: Sequence[ComfortRecord]
) -> np.ndarray:
    """Standardized design matrix for the records that carry the feature set."""
    X, _, _ = assemble_matrix(records, standardizer.feature_set)
    return standardizer.transform(X)


# ---------------------------------------------------------------------------
# Summaries
# ---------------------------------------------------------------------------

@dataclass
class DatasetSummary:
    """Distribution report: class counts, feature stats, per-class boxplot data."""

    class_counts: dict[int, int]
    feature_stats: dict[str, dict[str, float]]
    class_indoor_at: dict[int, dict[str, float]]

    def write(self, out_dir: str | Path) -> list[Path]:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        paths = []

        path = out_dir / "class_counts.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["sensation_class", "count"])
            for value in CLASS_VALUES:
                w.writerow([value, self.class_counts.get(value, 0)])
        paths.append(path)

        path = out_dir / "feature_stats.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["feature", "count", "min", "q1", "median", "q3", "max", "mean"])
            for name, stats in self.feature_stats.items():
                w.writerow([name, int(stats["count"])]
                           + [repr(stats[k]) for k in ("min", "q1", "median", "q3", "max", "mean")])
        paths.append(path)

        path = out_dir / "class_indoor_at_quartiles.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["sensation_class", "count", "min", "q1", "median", "q3", "max"])
            for value in CLASS_VALUES:
                stats = self.class_indoor_at.get(value)
                if stats is None:
                    continue
                w.writerow([value, int(stats["count"])]
                           + [repr(stats[k]) for k in ("min", "q1", "median", "q3", "max")])
        paths.append(path)
        return paths


def _five_number(values: np.ndarray) -> dict[str, float]:
    q1, med, q3 = np.percentile(values, [25, 50, 75])
    return {
        "count": float(values.size),
        "min": float(values.min()),
        "q1": float(q1),
        "median": float(med),
        "q3": float(q3),
        "max": float(values.max()),
    }


def summarize_dataset(records: Sequence[ComfortRecord]) -> DatasetSummary:
    """Per-class counts, per-feature five-number stats and per-class
    indoor-temperature quartiles (boxplot data)."""
    if not records:
        raise ValueError("cannot summarize an empty record list")
    counts = Counter(int(merge_classes(r.raw_vote)) for r in records)

    feature_stats: dict[str, dict[str, float]] = {}
    for name in ALL_FEATURES:
        values = np.array([v for r in records if (v := r.feature_value(name)) is not None])
        if values.size == 0:
            continue
        stats = _five_number(values)
        stats["mean"] = float(values.mean())
        feature_stats[name] = stats

    class_indoor_at: dict[int, dict[str, float]] = {}
    for value in CLASS_VALUES:
        temps = np.array([
            r.indoor_at
            for r in records
            if int(merge_classes(r.raw_vote)) == value and r.indoor_at is not None
        ])
        if temps.size:
            class_indoor_at[value] = _five_number(temps)

    return DatasetSummary(
        class_counts={v: counts.get(v, 0) for v in CLASS_VALUES},
        feature_stats=feature_stats,
        class_indoor_at=class_indoor_at,
    )
