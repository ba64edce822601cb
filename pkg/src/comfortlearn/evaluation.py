"""Seeded cross-validation harness, classification metrics and the
experiment grids (feature-set ablation, retained-depth sweep).

Per fold, the standardizer is fitted on training rows only and resampling
sees training rows only; every fold's report carries a leak audit recording
exactly which record ids reached which stage, so tests can prove the test
partition never influenced preprocessing.

All randomness descends from one master seed through fixed derivation slots
(fold shuffle, per-fold resampling, per-fold model training, source
training), so a report is reproducible byte for byte; wall-clock timing is
deliberately kept out of the report files.
"""

from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .baselines import make_baseline
from .dataset import (
    CLASS_VALUES,
    ClimateZone,
    ComfortRecord,
    FeatureSet,
    Standardizer,
    XA,
    XB,
    XC,
    assemble_matrix,
)
from .neural import TrainConfig, init_model, predict, train
from .pmv import pmv_baseline_predict
from .resampling import GanConfig, make_plan, oversample
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
    "AlgorithmSpec",
    "ConfusionMatrix",
    "EvalReport",
    "FoldAudit",
    "MissingClassError",
    "accuracy",
    "weighted_f1",
    "confusion",
    "kfold_split",
    "stratified_kfold_split",
    "stratified_holdout",
    "run_cv",
    "run_feature_ablation",
    "run_hidden_layer_sweep",
    "ALGORITHM_KINDS",
]

#: Algorithm names accepted by :func:`run_cv` and the command line.
ALGORITHM_KINDS = ("random", "knn", "nb", "tree", "forest",
                   "pmv", "mlp", "tl-mlp", "tl-mlp-c")

# seed derivation slots; every rng seed is [master, slot, ...context]
_SLOT_FOLDS = 1
_SLOT_RESAMPLE = 2
_SLOT_MODEL = 3
_SLOT_BASELINE = 4
_SLOT_SOURCE = 5
_SLOT_VAL = 6


class MissingClassError(ValueError):
    """A canonical sensation class has no examples in the dataset."""


@dataclass(frozen=True)
class AlgorithmSpec:
    """An algorithm name plus its constructor parameters.

    Transfer kinds: ``tl-mlp`` pools every conditioned record, ``tl-mlp-c``
    pools only the given Köppen group (``params["zone"]``, letter or
    :class:`ClimateZone`).
    """

    kind: str
    params: Mapping = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ALGORITHM_KINDS:
            raise ValueError(f"unknown algorithm {self.kind!r}; "
                             f"expected one of {ALGORITHM_KINDS}")
        object.__setattr__(self, "params", dict(self.params))

    @property
    def label(self) -> str:
        return self.kind


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

def _check_pair(y_true, y_pred) -> tuple[np.ndarray, np.ndarray]:
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape != y_pred.shape or y_true.ndim != 1:
        raise ValueError(f"label shapes differ: {y_true.shape} vs {y_pred.shape}")
    if y_true.size == 0:
        raise ValueError("empty label arrays")
    return y_true, y_pred


def accuracy(y_true, y_pred) -> float:
    """Share of exact matches, in percent."""
    y_true, y_pred = _check_pair(y_true, y_pred)
    return float(100.0 * np.mean(y_true == y_pred))


def weighted_f1(y_true, y_pred, class_values: Sequence[int] = CLASS_VALUES) -> float:
    """Support-weighted mean of per-class F1 scores, in percent.

    A class with zero predicted or zero true positives contributes an F1 of
    zero rather than dividing by zero; classes absent from ``y_true`` carry
    zero weight.
    """
    y_true, y_pred = _check_pair(y_true, y_pred)
    n = y_true.size
    total = 0.0
    for c in class_values:
        tp = float(np.sum((y_true == c) & (y_pred == c)))
        fp = float(np.sum((y_true != c) & (y_pred == c)))
        fn = float(np.sum((y_true == c) & (y_pred != c)))
        support = tp + fn
        if support == 0.0:
            continue
        precision = tp / (tp + fp) if tp + fp > 0 else 0.0
        recall = tp / support
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        total += (support / n) * f1
    return float(100.0 * total)


@dataclass
class ConfusionMatrix:
    """Counts[i, j]: true class ``class_values[i]`` predicted as ``[j]``."""

    counts: np.ndarray
    class_values: tuple[int, ...] = CLASS_VALUES

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        if self.class_values != other.class_values:
            raise ValueError("class orders differ")
        return ConfusionMatrix(self.counts + other.counts, self.class_values)

    @property
    def empty_rows(self) -> list[int]:
        """Class values with no true examples (their normalized row is zero)."""
        sums = self.counts.sum(axis=1)
        return [c for c, s in zip(self.class_values, sums) if s == 0]

    @property
    def normalized(self) -> np.ndarray:
        """Rows as proportions; rows without examples stay all-zero."""
        sums = self.counts.sum(axis=1, keepdims=True).astype(np.float64)
        return np.divide(self.counts, sums, out=np.zeros_like(self.counts, dtype=np.float64),
                         where=sums > 0)


def confusion(y_true, y_pred, class_values: Sequence[int] = CLASS_VALUES) -> ConfusionMatrix:
    y_true, y_pred = _check_pair(y_true, y_pred)
    index = {c: i for i, c in enumerate(class_values)}
    counts = np.zeros((len(class_values), len(class_values)), dtype=np.int64)
    for t, p in zip(y_true, y_pred):
        ti = index.get(int(t))
        pi = index.get(int(p))
        if ti is None or pi is None:
            raise ValueError(f"label pair ({t}, {p}) outside {tuple(class_values)}")
        counts[ti, pi] += 1
    return ConfusionMatrix(counts=counts, class_values=tuple(class_values))


# ---------------------------------------------------------------------------
# Fold construction
# ---------------------------------------------------------------------------

def kfold_split(n: int, k: int = 10, seed: int | Sequence[int] = 0) -> list[np.ndarray]:
    """Random disjoint folds covering range(n); sizes differ by at most one."""
    if k < 2:
        raise ValueError("need at least two folds")
    if n < k:
        raise ValueError(f"cannot split {n} rows into {k} folds")
    order = np.random.default_rng(seed).permutation(n)
    return [fold for fold in np.array_split(order, k)]


def stratified_kfold_split(
    y: np.ndarray, k: int = 10, seed: int | Sequence[int] = 0
) -> list[np.ndarray]:
    """Folds that keep each class's share as even as integer counts allow.

    Members of each class are shuffled and dealt round-robin, with the
    starting fold rolling between classes so fold sizes stay balanced.
    """
    y = np.asarray(y)
    n = len(y)
    if k < 2:
        raise ValueError("need at least two folds")
    if n < k:
        raise ValueError(f"cannot split {n} rows into {k} folds")
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    offset = 0
    for c in np.unique(y):
        members = np.flatnonzero(y == c)
        members = members[rng.permutation(len(members))]
        for i, idx in enumerate(members):
            folds[(offset + i) % k].append(int(idx))
        offset = (offset + len(members)) % k
    return [np.array(f, dtype=np.int64) for f in folds]


def stratified_holdout(
    y: np.ndarray, fraction: float, seed: int | Sequence[int] = 0
) -> tuple[np.ndarray, np.ndarray]:
    """Per-class split of ``range(len(y))`` into (kept, held-out) indices.

    Every class keeps at least one kept row, so singleton classes are never
    held out; both index arrays come back sorted.
    """
    if not 0.0 <= fraction < 1.0:
        raise ValueError("holdout fraction must be in [0, 1)")
    y = np.asarray(y)
    rng = np.random.default_rng(seed)
    kept: list[int] = []
    held: list[int] = []
    for c in np.unique(y):
        rows = np.flatnonzero(y == c)
        rows = rows[rng.permutation(len(rows))]
        k = min(int(round(fraction * len(rows))), len(rows) - 1)
        held.extend(int(i) for i in rows[:k])
        kept.extend(int(i) for i in rows[k:])
    return (np.sort(np.array(kept, dtype=np.int64)),
            np.sort(np.array(held, dtype=np.int64)))


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

@dataclass
class FoldAudit:
    """Row-provenance trace for one fold's preprocessing."""

    fold: int
    test_ids: tuple[int, ...]
    standardizer_fit_ids: tuple[int, ...]
    resampler_input_ids: tuple[int, ...]

    @property
    def leak_free(self) -> bool:
        test = set(self.test_ids)
        return (not test & set(self.standardizer_fit_ids)
                and not test & set(self.resampler_input_ids))


def _fmt(x: float) -> str:
    """Stable decimal formatting for report files."""
    return f"{x:.6f}"


@dataclass
class EvalReport:
    """Cross-validation outcome for one (algorithm, feature set) pair."""

    algorithm: str
    feature_set: str
    k: int
    seed: int
    n_records: int
    fold_accuracy: list[float]
    fold_f1: list[float]
    confusion: ConfusionMatrix
    fold_audits: list[FoldAudit]
    details: dict = field(default_factory=dict)
    timing_seconds: float = 0.0  # never written into report files

    @property
    def accuracy_mean(self) -> float:
        return float(np.mean(self.fold_accuracy))

    @property
    def accuracy_std(self) -> float:
        return float(np.std(self.fold_accuracy))

    @property
    def f1_mean(self) -> float:
        return float(np.mean(self.fold_f1))

    @property
    def f1_std(self) -> float:
        return float(np.std(self.fold_f1))

    @property
    def leak_free(self) -> bool:
        return all(a.leak_free for a in self.fold_audits)

    def write(self, out_dir: str | Path, prefix: str = "") -> list[Path]:
        """Write metrics, confusion counts and normalized confusion CSVs.

        Output is a pure function of the evaluation inputs (no timestamps,
        no timing), so reruns produce identical bytes.
        """
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        paths = []

        path = out_dir / f"{prefix}metrics.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["algorithm", "feature_set", "fold", "accuracy_pct",
                        "weighted_f1_pct"])
            for i, (a, f) in enumerate(zip(self.fold_accuracy, self.fold_f1)):
                w.writerow([self.algorithm, self.feature_set, i, _fmt(a), _fmt(f)])
            w.writerow([self.algorithm, self.feature_set, "mean",
                        _fmt(self.accuracy_mean), _fmt(self.f1_mean)])
            w.writerow([self.algorithm, self.feature_set, "stddev",
                        _fmt(self.accuracy_std), _fmt(self.f1_std)])
        paths.append(path)

        path = out_dir / f"{prefix}confusion.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["true\\pred"] + [str(c) for c in self.confusion.class_values])
            for c, row in zip(self.confusion.class_values, self.confusion.counts):
                w.writerow([str(c)] + [int(v) for v in row])
        paths.append(path)

        path = out_dir / f"{prefix}confusion_normalized.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["true\\pred"]
                       + [str(c) for c in self.confusion.class_values]
                       + ["row_count"])
            norm = self.confusion.normalized
            sums = self.confusion.counts.sum(axis=1)
            for c, row, s in zip(self.confusion.class_values, norm, sums):
                w.writerow([str(c)] + [_fmt(v) for v in row] + [int(s)])
        paths.append(path)

        # one (true, predicted) pair per row for plotting tools
        path = out_dir / f"{prefix}confusion_long.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["true", "predicted", "count", "row_fraction"])
            norm = self.confusion.normalized
            for i, c_true in enumerate(self.confusion.class_values):
                for j, c_pred in enumerate(self.confusion.class_values):
                    w.writerow([c_true, c_pred,
                                int(self.confusion.counts[i, j]),
                                _fmt(norm[i, j])])
        paths.append(path)
        return paths

    def summary_line(self) -> str:
        return (f"{self.algorithm}/{self.feature_set}: "
                f"accuracy {self.accuracy_mean:.2f} ({self.accuracy_std:.2f}), "
                f"weighted F1 {self.f1_mean:.2f} ({self.f1_std:.2f}) "
                f"over {self.k} folds")


# ---------------------------------------------------------------------------
# Cross-validated evaluation
# ---------------------------------------------------------------------------

def _resolve_transfer_plan(
    spec: AlgorithmSpec, transfer_plan: TransferPlan | None
) -> TransferPlan:
    plan = transfer_plan if transfer_plan is not None else TransferPlan()
    if spec.kind == "tl-mlp":
        return replace(plan, source_pool=ALL_HVAC)
    zone = spec.params.get("zone") or (plan.source_pool.zone
                                       if plan.source_pool.kind == "same_climate_zone"
                                       else None)
    if zone is None:
        raise ValueError("tl-mlp-c needs a climate zone "
                         "(AlgorithmSpec params['zone'] or the plan's pool)")
    if not isinstance(zone, ClimateZone):
        zone = ClimateZone(str(zone).upper())
    return replace(plan, source_pool=same_climate_zone(zone))


def run_cv(
    spec: AlgorithmSpec,
    records: Sequence[ComfortRecord],
    feature_set: FeatureSet,
    k: int = 10,
    seed: int = 0,
    resampler: str | None = "interpolation",
    stratified: bool = False,
    source_records: Sequence[ComfortRecord] | None = None,
    transfer_plan: TransferPlan | None = None,
    train_config: TrainConfig | None = None,
    gan_config: GanConfig | None = None,
    val_fraction: float = 0.0,
) -> EvalReport:
    """Evaluate one algorithm with seeded k-fold cross-validation.

    Records missing a feature from ``feature_set`` are excluded up front, so
    every algorithm compared under the same (records, feature_set, k, seed)
    sees identical folds. Within each fold, standardization statistics and
    synthetic rows come from training rows only. The heat-balance baseline
    (``pmv``) has nothing to fit and skips both stages. Transfer kinds train
    their source model once, outside the folds; the source pool shares no
    rows with the target records by construction (its records come from
    ``source_records``).

    ``resampler`` is ``"interpolation"``, ``"gan"`` or ``None`` to disable
    oversampling.

    ``val_fraction`` > 0 carves a per-class holdout out of each fold's
    training rows for the network kinds (mlp and both transfer kinds): the
    holdout picks the stopping epoch instead of the training loss, and the
    resampler then sees only the remaining rows. Fitted baselines have no
    stopping epoch to pick, so the option does not apply to them.

    Transfer folds whose feature set matches the source network reuse the
    source model's input scaling (the carried-over first hidden layer
    expects it); with a different target feature set the first layer is
    re-initialized anyway, so the scaling is fitted on the fold's training
    rows like for any other algorithm.
    """
    t0 = time.perf_counter()
    X, y, kept = assemble_matrix(records, feature_set)
    if len(kept) == 0:
        raise ValueError(f"no record carries the full feature set {feature_set.tag}")
    present = set(int(c) for c in np.unique(y))
    missing = sorted(set(CLASS_VALUES) - present)
    if missing:
        raise MissingClassError(
            f"classes {missing} have no examples among the {len(kept)} usable "
            f"records; a five-class evaluation needs all of {CLASS_VALUES}")
    kept_ids = np.asarray(kept)

    if stratified:
        folds = stratified_kfold_split(y, k=k, seed=[seed, _SLOT_FOLDS])
    else:
        folds = kfold_split(len(y), k=k, seed=[seed, _SLOT_FOLDS])

    source_model = None
    details: dict = {"resampler": resampler if spec.kind not in ("pmv",) else None,
                     "params": {k_: str(v) for k_, v in spec.params.items()},
                     "stratified": stratified,
                     "val_fraction": val_fraction}
    plan = None
    source_scaling = None
    if spec.kind in ("tl-mlp", "tl-mlp-c"):
        if not source_records:
            raise ValueError(f"{spec.kind} needs source_records")
        plan = _resolve_transfer_plan(spec, transfer_plan)
        plan = replace(plan, source_train=replace(
            plan.source_train, seed=[seed, _SLOT_SOURCE]))
        pool = assemble_source_pool(source_records, plan.source_pool)
        source_model = train_source(pool, plan)
        if feature_set.members == source_model.feature_names:
            source_scaling = source_standardizer(source_model)
        details["source_pool_rows"] = int(pool.n)
        details["source_pool"] = plan.source_pool.kind + (
            f"/{plan.source_pool.zone.value}" if plan.source_pool.zone else "")

    fold_accuracy: list[float] = []
    fold_f1: list[float] = []
    audits: list[FoldAudit] = []
    total_confusion = ConfusionMatrix(
        counts=np.zeros((len(CLASS_VALUES), len(CLASS_VALUES)), dtype=np.int64))

    for f, test_idx in enumerate(folds):
        test_mask = np.zeros(len(y), dtype=bool)
        test_mask[test_idx] = True
        train_idx = np.flatnonzero(~test_mask)
        y_test = y[test_idx]

        if spec.kind == "pmv":
            # nothing is fitted: predictions come straight from the records
            preds = pmv_baseline_predict([records[kept_ids[i]] for i in test_idx])
            audit = FoldAudit(fold=f,
                              test_ids=tuple(int(kept_ids[i]) for i in test_idx),
                              standardizer_fit_ids=(),
                              resampler_input_ids=())
        else:
            fit_idx = train_idx
            val_data = None
            if val_fraction > 0.0 and spec.kind in ("mlp", "tl-mlp", "tl-mlp-c"):
                rel_fit, rel_val = stratified_holdout(
                    y[train_idx], val_fraction, seed=[seed, _SLOT_VAL, f])
                fit_idx = train_idx[rel_fit]
                val_idx = train_idx[rel_val]

            if source_scaling is not None:
                std = source_scaling
                std_fit_ids: tuple[int, ...] = ()  # fitted on source rows only
            else:
                std = Standardizer.from_matrix(X[fit_idx], feature_set)
                std_fit_ids = tuple(int(kept_ids[i]) for i in fit_idx)
            x_train = std.transform(X[fit_idx])
            x_test = std.transform(X[test_idx])
            y_train = y[fit_idx]
            if fit_idx is not train_idx:
                val_data = (std.transform(X[val_idx]), y[val_idx])

            resampled_ids: tuple[int, ...] = ()
            if resampler is not None:
                counts = {int(c): int(n)
                          for c, n in zip(*np.unique(y_train, return_counts=True))}
                rplan = make_plan(counts, synthesizer=resampler,
                                  seed=[seed, _SLOT_RESAMPLE, f])
                augmented = oversample(x_train, y_train, rplan, gan_config)
                x_fit, y_fit = augmented.matrix, augmented.labels
                resampled_ids = tuple(int(kept_ids[fit_idx[tag[1]]])
                                      for tag in augmented.provenance
                                      if tag[0] == "original")
            else:
                x_fit, y_fit = x_train, y_train
                resampled_ids = tuple(int(kept_ids[i]) for i in fit_idx)

            preds = _fit_predict_fold(
                spec, x_fit, y_fit, x_test, feature_set, seed, f,
                source_model, plan, train_config, val_data)
            audit = FoldAudit(
                fold=f,
                test_ids=tuple(int(kept_ids[i]) for i in test_idx),
                standardizer_fit_ids=std_fit_ids,
                resampler_input_ids=resampled_ids,
            )

        fold_accuracy.append(accuracy(y_test, preds))
        fold_f1.append(weighted_f1(y_test, preds))
        total_confusion = total_confusion + confusion(y_test, preds)
        audits.append(audit)

    report = EvalReport(
        algorithm=spec.label,
        feature_set=feature_set.tag,
        k=k,
        seed=seed,
        n_records=len(kept),
        fold_accuracy=fold_accuracy,
        fold_f1=fold_f1,
        confusion=total_confusion,
        fold_audits=audits,
        details=details,
        timing_seconds=time.perf_counter() - t0,
    )
    logger.info("%s", report.summary_line())
    return report


def _fit_predict_fold(
    spec: AlgorithmSpec,
    x_fit: np.ndarray,
    y_fit: np.ndarray,
    x_test: np.ndarray,
    feature_set: FeatureSet,
    seed: int,
    fold: int,
    source_model,
    plan: TransferPlan | None,
    train_config: TrainConfig | None,
    val_data: tuple[np.ndarray, np.ndarray] | None = None,
) -> np.ndarray:
    if spec.kind in ("random", "knn", "nb", "tree", "forest"):
        params = dict(spec.params)
        if spec.kind in ("random", "tree", "forest"):
            params.setdefault("seed", [seed, _SLOT_BASELINE, fold])
        model = make_baseline(spec.kind, **params)
        model.fit(x_fit, y_fit)
        return model.predict(x_test)

    if spec.kind == "mlp":
        hidden = tuple(spec.params.get("hidden_widths", (64, 64)))
        config = train_config or TrainConfig()
        config = replace(config, seed=[seed, _SLOT_MODEL, fold])
        model = init_model([x_fit.shape[1], *hidden, len(CLASS_VALUES)],
                           seed=[seed, _SLOT_MODEL, fold],
                           feature_names=feature_set.members)
        result = train(model, x_fit, y_fit, config, val_data=val_data)
        return predict(result.model, x_test)

    if spec.kind in ("tl-mlp", "tl-mlp-c"):
        assert source_model is not None and plan is not None
        target = DomainDataset(matrix=x_fit, labels=y_fit,
                               feature_names=feature_set.members,
                               provenance="target")
        fold_plan = replace(plan, fine_tune=replace(
            plan.fine_tune, seed=[seed, _SLOT_MODEL, fold]))
        model = transfer_fine_tune(source_model, target, fold_plan,
                                   val_data=val_data)
        return predict(model, x_test)

    raise ValueError(f"unhandled algorithm kind {spec.kind!r}")


# ---------------------------------------------------------------------------
# Experiment grids
# ---------------------------------------------------------------------------

@dataclass
class AblationTable:
    """run_cv results over the feature-set x algorithm grid."""

    rows: list[EvalReport]

    def write(self, out_dir: str | Path) -> Path:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / "ablation.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["feature_set", "algorithm", "accuracy_mean", "accuracy_std",
                        "f1_mean", "f1_std", "folds", "records"])
            for r in self.rows:
                w.writerow([r.feature_set, r.algorithm,
                            _fmt(r.accuracy_mean), _fmt(r.accuracy_std),
                            _fmt(r.f1_mean), _fmt(r.f1_std), r.k, r.n_records])
        return path


def run_feature_ablation(
    specs: Sequence[AlgorithmSpec],
    records: Sequence[ComfortRecord],
    feature_sets: Sequence[FeatureSet] = (XA, XB, XC),
    jobs: int = 1,
    **cv_kwargs,
) -> AblationTable:
    """Evaluate every algorithm under every feature set with shared folds.

    The heat-balance baseline depends on exactly the six factors of the
    smallest set, so it only appears under the first feature set; repeating
    it under supersets would duplicate the same predictions.
    """
    tasks = []
    for fs in feature_sets:
        for spec in specs:
            if spec.kind == "pmv" and fs.tag != feature_sets[0].tag:
                continue
            tasks.append((spec, fs))
    runner = _parallel_runner(jobs)
    reports = runner(
        [(_ablation_task, (spec, fs, records, cv_kwargs)) for spec, fs in tasks])
    return AblationTable(rows=list(reports))


def _ablation_task(spec, fs, records, cv_kwargs):
    return run_cv(spec, records, fs, **cv_kwargs)


@dataclass
class SweepRow:
    depth: int
    report: EvalReport
    lower_layers_adapted: bool


@dataclass
class SweepTable:
    """Retained-depth sweep results for the zone-pooled transfer model."""

    rows: list[SweepRow]

    def write(self, out_dir: str | Path) -> Path:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / "sweep.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["hidden_layers", "accuracy_mean", "accuracy_std",
                        "f1_mean", "f1_std", "lower_layers_adapted"])
            for row in self.rows:
                w.writerow([row.depth,
                            _fmt(row.report.accuracy_mean), _fmt(row.report.accuracy_std),
                            _fmt(row.report.f1_mean), _fmt(row.report.f1_std),
                            "yes" if row.lower_layers_adapted else "no"])
        return path


def run_hidden_layer_sweep(
    records: Sequence[ComfortRecord],
    source_records: Sequence[ComfortRecord],
    zone: ClimateZone,
    depths: Sequence[int] = (1, 2, 3, 4),
    width: int = 64,
    base_plan: TransferPlan | None = None,
    jobs: int = 1,
    **cv_kwargs,
) -> SweepTable:
    """Vary how deep the network is, always retaining its last hidden layer.

    The target is evaluated on the eight shared features at every depth so
    the depth comparison is not confounded by feature availability (a
    one-hidden-layer network retains its only hidden layer, leaving no lower
    layer to adapt; that is exactly the condition the sweep exposes, and it
    requires source and target feature order to match).
    """
    if any(d < 1 for d in depths):
        raise ValueError(f"depths must be >= 1, got {depths!r}")
    from .dataset import SHARED_SOURCE_FEATURES

    template = base_plan if base_plan is not None else TransferPlan()
    spec_params = {"zone": zone}
    tasks = []
    for d in sorted(depths):
        plan = replace(template, hidden_widths=(width,) * d, retained_layer=d - 1)
        tasks.append((_sweep_task,
                      (AlgorithmSpec("tl-mlp-c", spec_params), records,
                       SHARED_SOURCE_FEATURES, source_records, plan, cv_kwargs, d)))
    runner = _parallel_runner(jobs)
    rows = runner(tasks)
    return SweepTable(rows=sorted(rows, key=lambda r: r.depth))


def _sweep_task(spec, records, feature_set, source_records, plan, cv_kwargs, depth):
    report = run_cv(spec, records, feature_set,
                    source_records=source_records, transfer_plan=plan, **cv_kwargs)
    return SweepRow(depth=depth, report=report, lower_layers_adapted=depth > 1)


def _parallel_runner(jobs: int):
    """Run (fn, args) tasks sequentially or on a process pool.

    Results always come back in task order, so parallel runs produce the
    same tables as sequential ones.
    """
    def sequential(tasks):
        return [fn(*args) for fn, args in tasks]

    if jobs <= 1:
        return sequential

    def pooled(tasks):
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(fn, *args) for fn, args in tasks]
            return [f.result() for f in futures]

    return pooled
