"""Cross-building transfer: pool multi-city survey data, train a source
network on the eight shared features, then fine-tune for a target building
by keeping one frozen hidden layer and retraining everything else on the
target's own (usually scarce) data.

The retained layer captures how abstract comfort factors combine; the
retrained layers below it re-learn how the target's raw measurements map
into that abstraction.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dataset import (
    SHARED_SOURCE_FEATURES,
    ClimateZone,
    ComfortRecord,
    FeatureSet,
    Standardizer,
    Ventilation,
    assemble_matrix,
    filter_pool,
)
from .neural import MlpModel, TrainConfig, init_model, train
from .resampling import GanConfig, make_plan, oversample

logger = logging.getLogger(__name__)

__all__ = [
    "DomainDataset",
    "SourcePool",
    "TransferPlan",
    "EmptyPoolError",
    "ALL_HVAC",
    "same_climate_zone",
    "assemble_source_pool",
    "train_source",
    "source_standardizer",
    "transfer_fine_tune",
]


class EmptyPoolError(ValueError):
    """No records survive the source-pool filters."""


@dataclass
class DomainDataset:
    """A design matrix bound to its feature names and domain role."""

    matrix: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...]
    provenance: str = "source"  # "source" | "target"

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.float64)
        self.labels = np.asarray(self.labels)
        if self.matrix.ndim != 2 or self.matrix.shape[0] != len(self.labels):
            raise ValueError(f"matrix {self.matrix.shape} does not match "
                             f"{len(self.labels)} labels")
        if len(set(self.feature_names)) != len(self.feature_names):
            raise ValueError("duplicate feature names")
        if self.matrix.shape[1] != len(self.feature_names):
            raise ValueError(f"{self.matrix.shape[1]} columns vs "
                             f"{len(self.feature_names)} feature names")

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class SourcePool:
    """Which pooled records feed source training.

    ``all_hvac`` pools every mechanically conditioned record regardless of
    climate; ``same_climate_zone`` additionally keeps only records from the
    given Köppen main group.
    """

    kind: str  # "all_hvac" | "same_climate_zone"
    zone: ClimateZone | None = None

    def __post_init__(self):
        if self.kind not in ("all_hvac", "same_climate_zone"):
            raise ValueError(f"unknown pool kind {self.kind!r}")
        if self.kind == "same_climate_zone" and self.zone is None:
            raise ValueError("same_climate_zone pool needs a zone")


ALL_HVAC = SourcePool("all_hvac")


def same_climate_zone(zone: ClimateZone) -> SourcePool:
    return SourcePool("same_climate_zone", zone)


@dataclass
class TransferPlan:
    """Everything that defines one transfer run.

    ``hidden_widths`` fixes the network trunk for both stages.
    ``retained_layer`` indexes into the hidden layers; the default keeps the
    last (deepest) hidden layer. Retaining hidden layer 0 leaves no lower
    layer to adapt, so the target must share the source's exact feature
    order; that configuration is allowed but flagged in the provenance.
    """

    source_pool: SourcePool = ALL_HVAC
    hidden_widths: tuple[int, ...] = (64, 64)
    retained_layer: int | None = None  # None -> last hidden layer
    retain_output: bool = False
    source_train: TrainConfig = field(
        default_factory=lambda: TrainConfig(max_epochs=500, seed=0))
    fine_tune: TrainConfig = field(
        default_factory=lambda: TrainConfig(max_epochs=500, early_stop=True, seed=0))
    resampler: str = "interpolation"
    gan_config: GanConfig | None = None

    def __post_init__(self):
        if not self.hidden_widths or any(w < 1 for w in self.hidden_widths):
            raise ValueError(f"bad hidden widths {self.hidden_widths!r}")
        if self.retained_layer is None:
            self.retained_layer = len(self.hidden_widths) - 1
        if not 0 <= self.retained_layer < len(self.hidden_widths):
            raise ValueError(
                f"retained layer {self.retained_layer} is not a hidden layer "
                f"of a {len(self.hidden_widths)}-hidden-layer network")


def assemble_source_pool(
    records: Sequence[ComfortRecord],
    pool: SourcePool,
    feature_set: FeatureSet = SHARED_SOURCE_FEATURES,
) -> DomainDataset:
    """Pool mechanically conditioned records on the shared feature set.

    Records missing any shared feature are skipped; zone pools also skip
    records without an assigned zone. Raises :class:`EmptyPoolError` when
    nothing survives.
    """
    rows = filter_pool(records, ventilation=Ventilation.HVAC)
    if pool.kind == "same_climate_zone":
        rows = filter_pool(rows, climate_zone=pool.zone)
    X, y, kept = assemble_matrix(rows, feature_set)
    if not kept:
        raise EmptyPoolError(
            f"source pool {pool.kind}"
            + (f"/{pool.zone.value}" if pool.zone else "")
            + " is empty after filtering")
    if len(kept) < len(rows):
        logger.info("source pool: %d of %d filtered rows carry all %d features",
                    len(kept), len(rows), len(feature_set.members))
    return DomainDataset(matrix=X, labels=y,
                         feature_names=feature_set.members, provenance="source")


def train_source(pool: DomainDataset, plan: TransferPlan) -> MlpModel:
    """Train the source network on the pooled rows.

    The pool is standardized on its own statistics and minority classes are
    oversampled before training. The fitted scaling is part of the model
    (recorded in its provenance, so it survives a save/load round trip):
    anything fed to this network, including target rows during fine-tuning,
    must go through it. :func:`source_standardizer` rebuilds it.
    """
    std = Standardizer.from_matrix(pool.matrix, FeatureSet("pool", pool.feature_names))
    X = std.transform(pool.matrix)
    counts = {int(c): int(n) for c, n in zip(*np.unique(pool.labels, return_counts=True))}
    rplan = make_plan(counts, synthesizer=plan.resampler, seed=plan.source_train.seed)
    augmented = oversample(X, pool.labels, rplan, plan.gan_config)

    widths = [len(pool.feature_names), *plan.hidden_widths, 5]
    model = init_model(widths, seed=plan.source_train.seed,
                       feature_names=pool.feature_names)
    result = train(model, augmented.matrix, augmented.labels, plan.source_train)
    result.model.provenance.update({
        "role": "source",
        "pool_kind": plan.source_pool.kind,
        "pool_zone": plan.source_pool.zone.value if plan.source_pool.zone else None,
        "pool_rows": int(pool.n),
        "trained_rows": int(augmented.matrix.shape[0]),
        "class_counts": counts,
        "epochs_run": result.epochs_run,
        "scaling_means": [float(v) for v in std.means],
        "scaling_stds": [float(v) for v in std.stds],
    })
    return result.model


def source_standardizer(source_model: MlpModel) -> Standardizer:
    """The scaling a source network was trained behind, rebuilt from its
    provenance. Target rows must pass through it before fine-tuning so the
    carried-over weights keep meaning what they learned."""
    prov = source_model.provenance
    if "scaling_means" not in prov or "scaling_stds" not in prov:
        raise ValueError("model provenance records no input scaling; "
                         "was it trained by train_source?")
    return Standardizer(
        feature_set=FeatureSet("pool", source_model.feature_names),
        means=np.asarray(prov["scaling_means"], dtype=np.float64),
        stds=np.asarray(prov["scaling_stds"], dtype=np.float64),
    )


def transfer_fine_tune(
    source_model: MlpModel,
    target: DomainDataset,
    plan: TransferPlan,
    val_data: tuple[np.ndarray, np.ndarray] | None = None,
) -> MlpModel:
    """Fine-tune on target rows, keeping one source hidden layer frozen.

    The target data must already be standardized (through the source
    model's own scaling, see :func:`source_standardizer`) and, when
    wanted, resampled; this function only rebuilds and trains the network.
    The retained layer is copied bit for bit from the source model and
    stays frozen throughout. Every other layer continues training from its
    source weights when its shape carries over; a layer whose shape
    depends on the target's feature count (the first hidden layer, when
    the target exposes different features than the source) is
    re-initialized from the fine-tune seed instead, since there is nothing
    to carry over. ``retain_output`` freezes the source's output layer
    instead of retraining it. ``val_data`` is passed straight to
    :func:`~comfortlearn.neural.train`: held-out target rows that pick the
    stopping epoch, guarding the carried-over knowledge against being
    overwritten by noise in a small target set.
    """
    n_hidden = len(source_model.layers) - 1
    if tuple(l.fan_out for l in source_model.layers[:-1]) != tuple(plan.hidden_widths):
        raise ValueError(
            f"source model hidden widths "
            f"{tuple(l.fan_out for l in source_model.layers[:-1])} do not match "
            f"plan {tuple(plan.hidden_widths)}")
    r = plan.retained_layer
    if r >= n_hidden:
        raise ValueError(f"retained layer {r} out of range for {n_hidden} hidden layers")
    if r == 0 and target.feature_names != source_model.feature_names:
        raise ValueError(
            "retaining the first hidden layer leaves no adapter below it; "
            "the target must expose the source feature set "
            f"{source_model.feature_names}, got {target.feature_names}")

    widths = [len(target.feature_names), *plan.hidden_widths, 5]
    model = init_model(widths, seed=plan.fine_tune.seed,
                       feature_names=target.feature_names,
                       class_labels=source_model.class_labels)
    reinitialized: list[int] = []
    for i, (fresh, src) in enumerate(zip(model.layers, source_model.layers)):
        if fresh.weights.shape != src.weights.shape:
            reinitialized.append(i)
            continue
        fresh.weights = src.weights.copy()
        fresh.biases = src.biases.copy()
    model.layers[r].frozen = True
    if plan.retain_output:
        model.layers[-1].frozen = True

    result = train(model, target.matrix, target.labels, plan.fine_tune, val_data=val_data)
    tuned = result.model
    tuned.provenance.update({
        "role": "fine_tuned",
        "retained_layer": r,
        "retain_output": plan.retain_output,
        "lower_layers_adapted": r > 0,
        "reinitialized_layers": reinitialized,
        "source": dict(source_model.provenance),
        "target_rows": int(target.n),
        "epochs_run": result.epochs_run,
        "stopped_early": result.stopped_early,
        "best_epoch": result.best_epoch,
    })
    if r == 0:
        logger.warning("retained the first hidden layer: no lower layers "
                       "were adapted to the target")
    return tuned
