"""Synthetic transfer scenario with a known ground truth.

A frozen random "teacher" network defines the true comfort response over
ten features. Climate zones shift the feature distribution (different
climates, different typical conditions) and also perturb the teacher's
weights (different populations respond differently), cities are jittered
copies within a zone, and the pooled source domain exposes only the eight
features shared across buildings. Because the truth is known, tests can
measure how much of the recoverable signal each method actually recovers.

Labels are computed from the *stored* physical feature values (via the
exact inverse of the physical mapping), so with zero label noise the vote
is a deterministic function of each record's features: a perfect model
scores 100 percent on the noiseless held-out split.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .dataset import (
    ClimateZone,
    ComfortRecord,
    FeatureSet,
    SHARED_SOURCE_FEATURES,
    Standardizer,
    Ventilation,
    XC,
    assemble_matrix,
)
from .evaluation import accuracy, stratified_holdout
from .neural import MlpModel, TrainConfig, init_layers, init_model, predict, train
from .resampling import make_plan, oversample_interpolation
from .transfer import (
    ALL_HVAC,
    DomainDataset,
    TransferPlan,
    assemble_source_pool,
    same_climate_zone,
    source_standardizer,
    train_source,
    transfer_fine_tune,
)

logger = logging.getLogger(__name__)

__all__ = [
    "ScenarioSpec",
    "SyntheticScenario",
    "GenerationError",
    "generate_synthetic_scenario",
    "teacher_inputs",
    "run_transfer_benchmark",
    "BenchmarkResult",
]

#: Feature order for the latent space and the teacher input (ten features).
FEATURE_ORDER: tuple[str, ...] = XC.members
_GENDER_DIM = FEATURE_ORDER.index("gender")

#: Physical mapping per numeric feature: value = center + scale * z.
_AFFINE: dict[str, tuple[float, float]] = {
    "indoor_at": (23.0, 1.8),
    "indoor_av": (0.5, 0.1),
    "indoor_rh": (50.0, 10.0),
    "indoor_mrt": (23.0, 1.8),
    "clo": (0.8, 0.15),
    "met": (1.3, 0.15),
    "age": (38.0, 7.0),
    "outdoor_at": (15.0, 7.0),
    "outdoor_rh": (55.0, 10.0),
}

#: Latent values are clipped here before the physical mapping, which keeps
#: every generated value inside its range envelope.
_Z_CLIP = 4.0

_ZONE_LETTERS = ("A", "B", "C", "D")


class GenerationError(RuntimeError):
    """No candidate teacher produced all five classes with enough support."""


@dataclass(frozen=True)
class ScenarioSpec:
    """Shape and difficulty of the generated scenario.

    ``zone_shift`` is the distance between zone centres in latent units
    (one latent unit = one within-city standard deviation): larger values
    make foreign-zone conditions less like the target's.
    ``zone_function_drift`` perturbs the teacher's weights per zone, so the
    comfort response itself differs across zones; this is what makes pooling
    the target's own zone genuinely more relevant than pooling everything.
    ``label_noise`` is the probability a training vote is replaced by a
    random other class. ``personal_signal_boost`` scales the teacher's age
    and gender input weights, controlling how much predictive signal those
    features carry beyond the indoor factors. ``unshared_signal_scale``
    damps the teacher's clo and met weights; those two features are hidden
    from pooled sources, so their residual influence acts as irreducible
    noise for any model trained on the shared feature set.
    """

    n_source: int = 5000
    n_target: int = 300
    n_target_test: int = 2000
    n_zones: int = 4
    cities_per_zone: int = 3
    zone_shift: float = 2.5
    city_jitter: float = 0.4
    zone_function_drift: float = 0.27
    label_noise: float = 0.10
    teacher_hidden: tuple[int, ...] = (16, 16)
    personal_signal_boost: float = 1.5
    unshared_signal_scale: float = 0.4
    target_zone_index: int = 0
    min_class_share: float = 0.03
    max_teacher_attempts: int = 50

    def __post_init__(self):
        if not 2 <= self.n_zones <= len(_ZONE_LETTERS):
            raise ValueError(f"n_zones must be in [2, {len(_ZONE_LETTERS)}]")
        if not 0 <= self.target_zone_index < self.n_zones:
            raise ValueError("target zone index out of range")
        if not 0.0 <= self.label_noise < 1.0:
            raise ValueError("label_noise must be in [0, 1)")
        if self.cities_per_zone < 2:
            raise ValueError("need at least two cities per zone so the "
                             "target city can be held out of the source pool")


@dataclass
class SyntheticScenario:
    """Generated records plus the ground truth that produced them."""

    spec: ScenarioSpec
    seed: int
    teachers: dict[str, MlpModel]  # zone letter -> that zone's true response
    teacher_attempt: int
    city_zones: dict[str, ClimateZone]
    target_city: str
    target_zone: ClimateZone
    source_records: list[ComfortRecord]
    target_records: list[ComfortRecord]
    target_test_records: list[ComfortRecord]

    @property
    def target_teacher(self) -> MlpModel:
        return self.teachers[self.target_zone.value]

    @property
    def source(self) -> DomainDataset:
        """Pooled source rows on the eight shared features."""
        return assemble_source_pool(self.source_records, ALL_HVAC)

    @property
    def target(self) -> DomainDataset:
        X, y, _ = assemble_matrix(self.target_records, XC)
        return DomainDataset(matrix=X, labels=y, feature_names=XC.members,
                             provenance="target")

    @property
    def target_test(self) -> DomainDataset:
        X, y, _ = assemble_matrix(self.target_test_records, XC)
        return DomainDataset(matrix=X, labels=y, feature_names=XC.members,
                             provenance="target")


def teacher_inputs(records: Sequence[ComfortRecord]) -> np.ndarray:
    """Teacher-space matrix for records: numeric features mapped back to
    latent units, gender mapped to -1/+1. Exact inverse of generation."""
    rows = np.empty((len(records), len(FEATURE_ORDER)))
    for i, r in enumerate(records):
        for j, name in enumerate(FEATURE_ORDER):
            value = r.feature_value(name)
            if value is None:
                raise ValueError(f"record {i} lacks {name}")
            if name == "gender":
                rows[i, j] = 2.0 * value - 1.0
            else:
                center, scale = _AFFINE[name]
                rows[i, j] = (value - center) / scale
    return rows


def _make_teachers(spec: ScenarioSpec, seed, attempt: int) -> dict[str, MlpModel]:
    """One base teacher plus per-zone weight drift."""
    base = init_model(
        [len(FEATURE_ORDER), *spec.teacher_hidden, 5],
        seed=[seed, 7, attempt],
        feature_names=FEATURE_ORDER,
    )
    for name in ("age", "gender"):
        base.layers[0].weights[FEATURE_ORDER.index(name), :] *= spec.personal_signal_boost
    for name in ("clo", "met"):
        base.layers[0].weights[FEATURE_ORDER.index(name), :] *= spec.unshared_signal_scale

    teachers: dict[str, MlpModel] = {}
    widths = [len(FEATURE_ORDER), *spec.teacher_hidden, 5]
    for zi in range(spec.n_zones):
        zone_teacher = base.copy()
        drift = init_layers(widths, seed=[seed, 8, attempt, zi])
        for layer, d_layer in zip(zone_teacher.layers, drift):
            layer.weights += spec.zone_function_drift * d_layer.weights
        teachers[_ZONE_LETTERS[zi]] = zone_teacher
    return teachers


def _apply_label_noise(
    labels: np.ndarray, noise: float, rng: np.random.Generator
) -> np.ndarray:
    if noise <= 0.0:
        return labels
    out = labels.copy()
    flip = rng.uniform(size=len(labels)) < noise
    for i in np.flatnonzero(flip):
        choices = [c for c in (-2, -1, 0, 1, 2) if c != out[i]]
        out[i] = choices[int(rng.integers(len(choices)))]
    return out


def _records_from_latent(
    z: np.ndarray,
    labels: np.ndarray,
    city: str,
    zone: ClimateZone,
    shared_only: bool,
) -> list[ComfortRecord]:
    """Physical records from clipped latent rows; ``shared_only`` drops the
    two features (clo, met) that pooled sources do not share."""
    records = []
    for row, label in zip(z, labels):
        values: dict[str, float | None] = {}
        for j, name in enumerate(FEATURE_ORDER):
            if name == "gender":
                continue
            center, scale = _AFFINE[name]
            values[name] = float(center + scale * row[j])
        if shared_only:
            values["clo"] = None
            values["met"] = None
        records.append(ComfortRecord(
            raw_vote=float(label),
            city=city,
            dataset_id="synthetic",
            ventilation=Ventilation.HVAC,
            climate_zone=zone,
            gender="female" if row[_GENDER_DIM] > 0 else "male",
            **values,
        ))
    return records


def _latent_block(
    n: int, center: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    z = center[None, :] + rng.standard_normal((n, len(FEATURE_ORDER)))
    return np.clip(z, -_Z_CLIP, _Z_CLIP)


def _labels_for_block(
    teacher: MlpModel, z: np.ndarray, shared_only: bool
) -> np.ndarray:
    """True labels recomputed through the physical round trip.

    The teacher sees exactly what :func:`teacher_inputs` would reconstruct
    from the stored record, so the vote is an exact function of the record.
    Source records hide clo and met, whose reconstructed value falls back to
    the latent centre (zero): source votes reflect typical clothing and
    activity.
    """
    t = z.copy()
    for j, name in enumerate(FEATURE_ORDER):
        if name == "gender":
            t[:, j] = np.where(z[:, j] > 0, 1.0, -1.0)
        else:
            center, scale = _AFFINE[name]
            physical = center + scale * z[:, j]
            t[:, j] = (physical - center) / scale
    if shared_only:
        for name in ("clo", "met"):
            t[:, FEATURE_ORDER.index(name)] = 0.0
    return predict(teacher, t)


def generate_synthetic_scenario(
    spec: ScenarioSpec = ScenarioSpec(), seed: int = 0
) -> SyntheticScenario:
    """Build the scenario deterministically from (spec, seed).

    Teacher candidates are tried in a fixed order until one yields every
    class with at least ``min_class_share`` support in the source pool and
    the target split (all five classes present in the held-out split);
    generation fails loudly when none does.
    """
    rng_geo = np.random.default_rng([seed, 1])
    d = len(FEATURE_ORDER)
    zone_centers = []
    for _ in range(spec.n_zones):
        direction = rng_geo.standard_normal(d)
        direction /= np.linalg.norm(direction)
        zone_centers.append(direction * spec.zone_shift)

    # city layout: per zone, cities_per_zone source cities; the target zone
    # additionally gets the held-out target city
    city_centers: dict[str, np.ndarray] = {}
    city_zones: dict[str, ClimateZone] = {}
    source_cities: list[str] = []
    for zi in range(spec.n_zones):
        zone = ClimateZone(_ZONE_LETTERS[zi])
        for ci in range(spec.cities_per_zone):
            name = f"z{_ZONE_LETTERS[zi].lower()}_city{ci}"
            offset = rng_geo.standard_normal(d)
            offset *= spec.city_jitter / np.linalg.norm(offset)
            city_centers[name] = zone_centers[zi] + offset
            city_zones[name] = zone
            source_cities.append(name)
    target_zone = ClimateZone(_ZONE_LETTERS[spec.target_zone_index])
    target_city = "target_city"
    offset = rng_geo.standard_normal(d)
    offset *= spec.city_jitter / np.linalg.norm(offset)
    city_centers[target_city] = zone_centers[spec.target_zone_index] + offset
    city_zones[target_city] = target_zone

    # latent draws are fixed before the teacher search so every candidate
    # teacher is scored on the same population
    rng_rows = np.random.default_rng([seed, 2])
    per_city = [spec.n_source // len(source_cities)] * len(source_cities)
    for i in range(spec.n_source - sum(per_city)):
        per_city[i] += 1
    source_blocks = [
        (city, _latent_block(n, city_centers[city], rng_rows))
        for city, n in zip(source_cities, per_city)
    ]
    z_target = _latent_block(spec.n_target, city_centers[target_city], rng_rows)
    z_target_test = _latent_block(spec.n_target_test, city_centers[target_city], rng_rows)

    chosen = None
    for attempt in range(spec.max_teacher_attempts):
        teachers = _make_teachers(spec, seed, attempt)
        source_labels = [
            _labels_for_block(teachers[city_zones[city].value], z, shared_only=True)
            for city, z in source_blocks
        ]
        target_teacher = teachers[target_zone.value]
        target_labels = _labels_for_block(target_teacher, z_target, shared_only=False)
        test_labels = _labels_for_block(target_teacher, z_target_test, shared_only=False)
        pools = (np.concatenate(source_labels), target_labels)
        if all(
            min(np.bincount(p + 2, minlength=5)) >= spec.min_class_share * len(p)
            for p in pools
        ) and len(np.unique(test_labels)) == 5:
            chosen = (attempt, teachers, source_labels, target_labels, test_labels)
            break
    if chosen is None:
        raise GenerationError(
            f"no teacher among {spec.max_teacher_attempts} candidates produced "
            f"all five classes with share >= {spec.min_class_share}")
    attempt, teachers, source_labels, target_labels, test_labels = chosen
    logger.info("teacher candidate %d accepted", attempt)

    rng_noise = np.random.default_rng([seed, 3])
    source_records: list[ComfortRecord] = []
    for (city, z), labels in zip(source_blocks, source_labels):
        noisy = _apply_label_noise(labels, spec.label_noise, rng_noise)
        source_records.extend(_records_from_latent(
            z, noisy, city, city_zones[city], shared_only=True))
    target_records = _records_from_latent(
        z_target,
        _apply_label_noise(target_labels, spec.label_noise, rng_noise),
        target_city, target_zone, shared_only=False)
    # the held-out split keeps noiseless labels: differences measured on it
    # reflect the methods, not label-sampling luck
    target_test_records = _records_from_latent(
        z_target_test, test_labels, target_city, target_zone, shared_only=False)

    return SyntheticScenario(
        spec=spec,
        seed=seed,
        teachers=teachers,
        teacher_attempt=attempt,
        city_zones=city_zones,
        target_city=target_city,
        target_zone=target_zone,
        source_records=source_records,
        target_records=target_records,
        target_test_records=target_test_records,
    )


# ---------------------------------------------------------------------------
# Scratch-vs-transfer benchmark
# ---------------------------------------------------------------------------

@dataclass
class BenchmarkResult:
    """Target-test accuracy per seed for the three contenders."""

    seeds: list[int]
    mlp: list[float]
    tl_mlp: list[float]
    tl_mlp_c: list[float]
    details: dict = field(default_factory=dict)

    def mean(self, method: str) -> float:
        return float(np.mean(getattr(self, method)))

    def write(self, out_dir: str | Path) -> Path:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / "benchmark.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["seed", "mlp", "tl_mlp", "tl_mlp_c"])
            for s, a, b, c in zip(self.seeds, self.mlp, self.tl_mlp, self.tl_mlp_c):
                w.writerow([s, f"{a:.6f}", f"{b:.6f}", f"{c:.6f}"])
            w.writerow(["mean", f"{self.mean('mlp'):.6f}",
                        f"{self.mean('tl_mlp'):.6f}", f"{self.mean('tl_mlp_c'):.6f}"])
        return path

    def summary_line(self) -> str:
        return (f"mean target-test accuracy over {len(self.seeds)} seeds: "
                f"scratch {self.mean('mlp'):.2f}, "
                f"pooled transfer {self.mean('tl_mlp'):.2f}, "
                f"zone transfer {self.mean('tl_mlp_c'):.2f}")


def _oversampled(
    x: np.ndarray, y: np.ndarray, feature_names: tuple[str, ...], seed
) -> DomainDataset:
    counts = {int(c): int(n) for c, n in zip(*np.unique(y, return_counts=True))}
    augmented = oversample_interpolation(x, y, make_plan(counts, seed=seed))
    return DomainDataset(matrix=augmented.matrix, labels=augmented.labels,
                         feature_names=feature_names, provenance="target")


def run_transfer_benchmark(
    scenario: SyntheticScenario,
    seeds: Sequence[int] = tuple(range(10)),
    plan: TransferPlan | None = None,
    scratch_config: TrainConfig | None = None,
    target_features: FeatureSet = SHARED_SOURCE_FEATURES,
    val_fraction: float = 0.2,
) -> BenchmarkResult:
    """Train scratch and transfer models on the small target split and score
    them on the held-out noiseless split.

    Per seed: two source models are trained on the pooled records (one over
    every zone, one over the target's zone only), the target rows are split
    into a training part and a validation part that picks each contender's
    stopping epoch, the training part is oversampled, and every contender
    is scored on the test rows. Each method owns its input scaling: the
    scratch model standardizes on the target training part, the transfer
    models keep the scaling their source network was trained behind. All
    randomness descends from the given seeds.

    By default the target building exposes the same eight-sensor suite the
    pooled sources share: every contender sees identical inputs, and the
    retained layer's knowledge refers to features the target actually has.
    """
    template = plan if plan is not None else TransferPlan()
    x_target, y_target, _ = assemble_matrix(scenario.target_records, target_features)
    x_heldout, y_heldout, _ = assemble_matrix(scenario.target_test_records,
                                              target_features)

    result = BenchmarkResult(
        seeds=list(seeds), mlp=[], tl_mlp=[], tl_mlp_c=[],
        details={"n_target": len(y_target), "n_test": len(y_heldout),
                 "target_features": target_features.tag,
                 "val_fraction": val_fraction})
    for s in seeds:
        tr, va = stratified_holdout(y_target, val_fraction, seed=[s, 14])
        x_tr, y_tr = x_target[tr], y_target[tr]
        x_va, y_va = x_target[va], y_target[va]

        std = Standardizer.from_matrix(x_tr, target_features)
        train_ds = _oversampled(std.transform(x_tr), y_tr,
                                target_features.members, seed=[s, 15])
        scratch_cfg = scratch_config or TrainConfig(early_stop=True)
        scratch_cfg = replace(scratch_cfg, seed=[s, 16])
        scratch = init_model(
            [len(target_features.members), *template.hidden_widths, 5],
            seed=[s, 16], feature_names=target_features.members)
        scratch = train(scratch, train_ds.matrix, train_ds.labels, scratch_cfg,
                        val_data=(std.transform(x_va), y_va)).model
        result.mlp.append(
            accuracy(y_heldout, predict(scratch, std.transform(x_heldout))))

        for pool_spec, sink, slot in (
            (ALL_HVAC, result.tl_mlp, 17),
            (same_climate_zone(scenario.target_zone), result.tl_mlp_c, 18),
        ):
            run_plan = replace(
                template,
                source_pool=pool_spec,
                source_train=replace(template.source_train, seed=[s, slot, 0]),
                fine_tune=replace(template.fine_tune, seed=[s, slot, 1]),
            )
            pool = assemble_source_pool(scenario.source_records, pool_spec)
            source_model = train_source(pool, run_plan)
            std_s = source_standardizer(source_model)
            tune_ds = _oversampled(std_s.transform(x_tr), y_tr,
                                   target_features.members, seed=[s, 15])
            tuned = transfer_fine_tune(
                source_model, tune_ds, run_plan,
                val_data=(std_s.transform(x_va), y_va))
            sink.append(
                accuracy(y_heldout, predict(tuned, std_s.transform(x_heldout))))

    logger.info("%s", result.summary_line())
    return result
