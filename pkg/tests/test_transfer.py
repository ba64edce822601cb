"""Transfer pipeline tests: pooling, source scaling, layer carry-over."""

import numpy as np
import pytest

from comfortlearn.dataset import (
    SHARED_SOURCE_FEATURES,
    ClimateZone,
    ComfortRecord,
    FeatureSet,
    Ventilation,
    assemble_matrix,
)
from comfortlearn.neural import TrainConfig, load_model, save_model
from comfortlearn.transfer import (
    ALL_HVAC,
    DomainDataset,
    EmptyPoolError,
    SourcePool,
    TransferPlan,
    assemble_source_pool,
    same_climate_zone,
    source_standardizer,
    train_source,
    transfer_fine_tune,
)


def survey_records(n, seed, zone, city, ventilation=Ventilation.HVAC):
    rng = np.random.default_rng(seed)
    records = []
    for _ in range(n):
        c = int(rng.integers(-2, 3))
        records.append(ComfortRecord(
            raw_vote=float(c),
            city=city,
            dataset_id="unit",
            ventilation=ventilation,
            climate_zone=zone,
            indoor_at=22.0 + 2.0 * c + rng.normal(0, 0.6),
            indoor_rh=50.0 + rng.normal(0, 5),
            indoor_av=0.12,
            indoor_mrt=22.0 + 2.0 * c + rng.normal(0, 0.6),
            outdoor_at=14.0 + rng.normal(0, 4),
            outdoor_rh=55.0 + rng.normal(0, 5),
            clo=0.6, met=1.2,
            age=32.0 + rng.normal(0, 9), gender="other",
        ))
    return records


def source_corpus():
    return (survey_records(60, 1, ClimateZone.TROPICAL, "hotton")
            + survey_records(60, 2, ClimateZone.TEMPERATE, "mildbury")
            + survey_records(30, 3, ClimateZone.TEMPERATE, "mildbury",
                             ventilation=Ventilation.NV)
            + survey_records(20, 4, None, "nowhere"))


def quick_plan(**overrides):
    defaults = dict(
        hidden_widths=(8, 8),
        source_train=TrainConfig(max_epochs=30, batch_size=32, seed=0),
        fine_tune=TrainConfig(max_epochs=20, batch_size=16, seed=0),
    )
    defaults.update(overrides)
    return TransferPlan(**defaults)


def target_domain(model, n=60, seed=9):
    records = survey_records(n, seed, ClimateZone.TEMPERATE, "target_city")
    X, y, _ = assemble_matrix(records, SHARED_SOURCE_FEATURES)
    std = source_standardizer(model)
    return DomainDataset(matrix=std.transform(X), labels=y,
                         feature_names=SHARED_SOURCE_FEATURES.members,
                         provenance="target")


# ---------------------------------------------------------------------------
# Pool assembly
# ---------------------------------------------------------------------------

def test_pool_keeps_only_conditioned_records():
    pool = assemble_source_pool(source_corpus(), ALL_HVAC)
    assert pool.n == 140  # NV rows excluded, unzoned HVAC rows retained
    assert pool.feature_names == SHARED_SOURCE_FEATURES.members
    assert pool.provenance == "source"


def test_zone_pool_filters_on_climate():
    pool = assemble_source_pool(
        source_corpus(), same_climate_zone(ClimateZone.TEMPERATE))
    assert pool.n == 60  # temperate HVAC only; NV and unzoned rows excluded


def test_empty_pool_is_a_loud_error():
    nv_only = survey_records(20, 0, ClimateZone.DRY, "x", Ventilation.NV)
    with pytest.raises(EmptyPoolError):
        assemble_source_pool(nv_only, ALL_HVAC)
    hvac = survey_records(20, 0, ClimateZone.DRY, "x")
    with pytest.raises(EmptyPoolError):
        assemble_source_pool(hvac, same_climate_zone(ClimateZone.CONTINENTAL))


def test_pool_skips_records_missing_shared_features():
    records = survey_records(10, 0, ClimateZone.DRY, "x")
    gappy = ComfortRecord(raw_vote=0.0, city="x", ventilation=Ventilation.HVAC,
                          climate_zone=ClimateZone.DRY, indoor_at=22.0)
    pool = assemble_source_pool(records + [gappy], ALL_HVAC)
    assert pool.n == 10


def test_pool_kind_validation():
    with pytest.raises(ValueError):
        SourcePool("warmest_cities")
    with pytest.raises(ValueError):
        SourcePool("same_climate_zone")  # zone missing


# ---------------------------------------------------------------------------
# Source training and its scaling
# ---------------------------------------------------------------------------

def test_source_model_carries_its_scaling():
    pool = assemble_source_pool(source_corpus(), ALL_HVAC)
    model = train_source(pool, quick_plan())
    prov = model.provenance
    assert prov["role"] == "source"
    assert prov["pool_kind"] == "all_hvac"
    assert prov["pool_rows"] == pool.n
    assert prov["trained_rows"] > pool.n  # minority classes were synthesized
    std = source_standardizer(model)
    np.testing.assert_allclose(std.means, pool.matrix.mean(axis=0), atol=1e-12)
    assert model.feature_names == SHARED_SOURCE_FEATURES.members
    assert model.layer_widths == (8, 8, 8, 5)


def test_source_scaling_survives_file_round_trip(tmp_path):
    pool = assemble_source_pool(source_corpus(), ALL_HVAC)
    model = train_source(pool, quick_plan())
    path = tmp_path / "src.clmlp"
    save_model(model, path)
    loaded = load_model(path)
    a, b = source_standardizer(model), source_standardizer(loaded)
    np.testing.assert_array_equal(a.means, b.means)
    np.testing.assert_array_equal(a.stds, b.stds)


def test_source_training_is_deterministic():
    pool = assemble_source_pool(source_corpus(), ALL_HVAC)
    m1 = train_source(pool, quick_plan())
    m2 = train_source(pool, quick_plan())
    for l1, l2 in zip(m1.layers, m2.layers):
        np.testing.assert_array_equal(l1.weights, l2.weights)


def test_standardizer_requires_recorded_scaling():
    from comfortlearn.neural import init_model
    bare = init_model([8, 8, 8, 5], seed=0)
    with pytest.raises(ValueError):
        source_standardizer(bare)


# ---------------------------------------------------------------------------
# Fine-tuning
# ---------------------------------------------------------------------------

def test_retained_layer_is_bit_identical_and_frozen():
    pool = assemble_source_pool(source_corpus(), ALL_HVAC)
    plan = quick_plan()
    source = train_source(pool, plan)
    target = target_domain(source)
    tuned = transfer_fine_tune(source, target, plan)
    r = plan.retained_layer
    assert tuned.layers[r].frozen
    assert tuned.layers[r].weights.tobytes() == source.layers[r].weights.tobytes()
    assert tuned.layers[r].biases.tobytes() == source.layers[r].biases.tobytes()
    # the layers below it did adapt
    assert not np.array_equal(tuned.layers[0].weights, source.layers[0].weights)
    prov = tuned.provenance
    assert prov["role"] == "fine_tuned"
    assert prov["retained_layer"] == r
    assert prov["lower_layers_adapted"] is True
    assert prov["reinitialized_layers"] == []
    assert prov["source"]["role"] == "source"


def test_matching_shapes_warm_start_from_source_weights():
    # With a zero learning rate training is a no-op, exposing the starting
    # weights: every shape-compatible layer must begin at the source values.
    pool = assemble_source_pool(source_corpus(), ALL_HVAC)
    plan = quick_plan()
    source = train_source(pool, plan)
    target = target_domain(source)
    frozen_lr = quick_plan(fine_tune=TrainConfig(
        max_epochs=1, learning_rate=0.0, batch_size=16, seed=0))
    tuned = transfer_fine_tune(source, target, frozen_lr)
    for i in range(len(tuned.layers)):
        np.testing.assert_array_equal(tuned.layers[i].weights,
                                      source.layers[i].weights)
        np.testing.assert_array_equal(tuned.layers[i].biases,
                                      source.layers[i].biases)


def test_shape_mismatched_first_layer_is_reinitialized():
    pool = assemble_source_pool(source_corpus(), ALL_HVAC)
    plan = quick_plan()
    source = train_source(pool, plan)
    # target exposes six features instead of the source's eight
    six = FeatureSet("Xa", ("indoor_at", "indoor_av", "indoor_rh",
                            "indoor_mrt", "clo", "met"))
    records = survey_records(50, 11, ClimateZone.TEMPERATE, "target_city")
    X, y, _ = assemble_matrix(records, six)
    from comfortlearn.dataset import Standardizer
    std = Standardizer.from_matrix(X, six)
    target = DomainDataset(matrix=std.transform(X), labels=y,
                           feature_names=six.members, provenance="target")
    tuned = transfer_fine_tune(source, target, plan)
    assert tuned.provenance["reinitialized_layers"] == [0]
    assert tuned.layers[0].fan_in == 6
    r = plan.retained_layer
    assert tuned.layers[r].weights.tobytes() == source.layers[r].weights.tobytes()


def test_retaining_first_layer_requires_source_features():
    pool = assemble_source_pool(source_corpus(), ALL_HVAC)
    plan = quick_plan(retained_layer=0)
    source = train_source(pool, plan)
    target = target_domain(source)
    tuned = transfer_fine_tune(source, target, plan)  # same features: fine
    assert tuned.provenance["lower_layers_adapted"] is False
    six = FeatureSet("Xa", ("indoor_at", "indoor_av", "indoor_rh",
                            "indoor_mrt", "clo", "met"))
    mismatched = DomainDataset(matrix=np.zeros((10, 6)),
                               labels=np.zeros(10, dtype=np.int64),
                               feature_names=six.members)
    with pytest.raises(ValueError):
        transfer_fine_tune(source, mismatched, plan)


def test_plan_and_model_widths_must_agree():
    pool = assemble_source_pool(source_corpus(), ALL_HVAC)
    source = train_source(pool, quick_plan())
    target = target_domain(source)
    with pytest.raises(ValueError):
        transfer_fine_tune(source, target, quick_plan(hidden_widths=(16, 16)))


def test_retain_output_freezes_classifier_head():
    pool = assemble_source_pool(source_corpus(), ALL_HVAC)
    plan = quick_plan(retain_output=True)
    source = train_source(pool, plan)
    target = target_domain(source)
    tuned = transfer_fine_tune(source, target, plan)
    assert tuned.layers[-1].frozen
    assert tuned.layers[-1].weights.tobytes() == source.layers[-1].weights.tobytes()
    assert tuned.provenance["retain_output"] is True


def test_validation_holdout_records_best_epoch():
    pool = assemble_source_pool(source_corpus(), ALL_HVAC)
    plan = quick_plan(fine_tune=TrainConfig(
        max_epochs=60, batch_size=16, seed=0, early_stop=True, patience=8))
    source = train_source(pool, plan)
    target = target_domain(source, n=120)
    val = target_domain(source, n=40, seed=21)
    tuned = transfer_fine_tune(source, target, plan,
                               val_data=(val.matrix, val.labels))
    assert tuned.provenance["best_epoch"] is not None
    assert 1 <= tuned.provenance["best_epoch"] <= tuned.provenance["epochs_run"]


def test_plan_validation():
    with pytest.raises(ValueError):
        TransferPlan(hidden_widths=())
    with pytest.raises(ValueError):
        TransferPlan(hidden_widths=(8, 8), retained_layer=2)
    plan = TransferPlan(hidden_widths=(8, 16, 8))
    assert plan.retained_layer == 2  # defaults to the deepest hidden layer
