"""Synthetic-scenario tests: determinism, exact ground truth, benchmark."""

import numpy as np
import pytest

from comfortlearn.dataset import (
    canonical_mapping,
    load_dataset,
    records_to_csv,
)
from comfortlearn.neural import TrainConfig, predict
from comfortlearn.synthetic import (
    BenchmarkResult,
    GenerationError,
    ScenarioSpec,
    generate_synthetic_scenario,
    run_transfer_benchmark,
    teacher_inputs,
)
from comfortlearn.transfer import TransferPlan


def small_spec(**overrides):
    defaults = dict(
        n_source=400, n_target=120, n_target_test=300,
        n_zones=3, cities_per_zone=2, teacher_hidden=(8, 8),
    )
    defaults.update(overrides)
    return ScenarioSpec(**defaults)


def test_spec_validation():
    with pytest.raises(ValueError):
        ScenarioSpec(n_zones=1)
    with pytest.raises(ValueError):
        ScenarioSpec(n_zones=5)
    with pytest.raises(ValueError):
        ScenarioSpec(target_zone_index=4)
    with pytest.raises(ValueError):
        ScenarioSpec(label_noise=1.0)
    with pytest.raises(ValueError):
        ScenarioSpec(cities_per_zone=1)


def test_generation_is_deterministic():
    a = generate_synthetic_scenario(small_spec(), seed=0)
    b = generate_synthetic_scenario(small_spec(), seed=0)
    assert a.teacher_attempt == b.teacher_attempt
    assert len(a.source_records) == len(b.source_records) == 400
    for ra, rb in zip(a.source_records[::37], b.source_records[::37]):
        assert ra == rb
    assert [r.raw_vote for r in a.target_records] == \
           [r.raw_vote for r in b.target_records]
    c = generate_synthetic_scenario(small_spec(), seed=6)
    assert [r.raw_vote for r in a.target_records] != \
           [r.raw_vote for r in c.target_records]


def test_scenario_shape_and_zone_layout():
    spec = small_spec()
    sc = generate_synthetic_scenario(spec, seed=0)
    assert len(sc.target_records) == spec.n_target
    assert len(sc.target_test_records) == spec.n_target_test
    source_cities = {r.city for r in sc.source_records}
    assert len(source_cities) == spec.n_zones * spec.cities_per_zone
    assert sc.target_city not in source_cities
    assert sc.city_zones[sc.target_city] is sc.target_zone
    assert set(sc.teachers) == {"A", "B", "C"}
    # every record remembers its zone
    assert all(r.climate_zone is not None for r in sc.source_records)


def test_all_five_classes_present_everywhere():
    sc = generate_synthetic_scenario(small_spec(), seed=0)
    for split in (sc.source_records, sc.target_records, sc.target_test_records):
        votes = {int(r.raw_vote) for r in split}
        assert votes == {-2, -1, 0, 1, 2}


def test_source_records_hide_unshared_features():
    sc = generate_synthetic_scenario(small_spec(), seed=0)
    assert all(r.clo is None and r.met is None for r in sc.source_records)
    assert all(r.clo is not None and r.met is not None for r in sc.target_records)


def test_noiseless_votes_are_an_exact_function_of_the_record():
    spec = small_spec(label_noise=0.0)
    sc = generate_synthetic_scenario(spec, seed=3)
    votes = np.array([int(r.raw_vote) for r in sc.target_records])
    reproduced = predict(sc.target_teacher, teacher_inputs(sc.target_records))
    np.testing.assert_array_equal(votes, reproduced)


def test_heldout_split_is_always_noiseless():
    # default spec has 10% label noise on training splits, never on test
    sc = generate_synthetic_scenario(small_spec(), seed=1)
    votes = np.array([int(r.raw_vote) for r in sc.target_test_records])
    reproduced = predict(sc.target_teacher, teacher_inputs(sc.target_test_records))
    np.testing.assert_array_equal(votes, reproduced)
    # and the noisy target split does differ from the teacher somewhere
    target_votes = np.array([int(r.raw_vote) for r in sc.target_records])
    target_truth = predict(sc.target_teacher, teacher_inputs(sc.target_records))
    assert np.any(target_votes != target_truth)


def test_ground_truth_survives_csv_round_trip(tmp_path):
    spec = small_spec(label_noise=0.0)
    sc = generate_synthetic_scenario(spec, seed=2)
    path = tmp_path / "target.csv"
    records_to_csv(sc.target_records, path)
    reloaded = load_dataset(path, canonical_mapping("synthetic")).records
    assert len(reloaded) == len(sc.target_records)
    votes = np.array([int(r.raw_vote) for r in reloaded])
    reproduced = predict(sc.target_teacher, teacher_inputs(reloaded))
    np.testing.assert_array_equal(votes, reproduced)


def test_generated_values_respect_range_envelopes():
    sc = generate_synthetic_scenario(small_spec(), seed=0)
    for r in sc.target_records + sc.source_records:
        assert r.violations() == []


def test_impossible_class_share_fails_loudly():
    with pytest.raises(GenerationError):
        generate_synthetic_scenario(
            small_spec(min_class_share=0.5, max_teacher_attempts=3), seed=0)


def test_benchmark_runs_and_writes(tmp_path):
    sc = generate_synthetic_scenario(small_spec(n_source=600), seed=0)
    plan = TransferPlan(
        hidden_widths=(8, 8),
        source_train=TrainConfig(max_epochs=25, batch_size=64, seed=0),
        fine_tune=TrainConfig(max_epochs=20, batch_size=16,
                              early_stop=True, patience=6, seed=0),
    )
    result = run_transfer_benchmark(
        sc, seeds=(0, 1), plan=plan,
        scratch_config=TrainConfig(max_epochs=20, batch_size=16,
                                   early_stop=True, patience=6))
    assert result.seeds == [0, 1]
    assert len(result.mlp) == len(result.tl_mlp) == len(result.tl_mlp_c) == 2
    for scores in (result.mlp, result.tl_mlp, result.tl_mlp_c):
        assert all(0.0 <= v <= 100.0 for v in scores)
    assert result.mean("mlp") == pytest.approx(float(np.mean(result.mlp)))
    path = result.write(tmp_path)
    lines = path.read_text().splitlines()
    assert lines[0] == "seed,mlp,tl_mlp,tl_mlp_c"
    assert len(lines) == 4  # two seed rows plus the mean row
    assert lines[-1].startswith("mean,")


def test_benchmark_result_write_is_deterministic(tmp_path):
    result = BenchmarkResult(seeds=[0, 1], mlp=[50.0, 52.0],
                             tl_mlp=[55.0, 56.0], tl_mlp_c=[57.5, 58.5])
    d1, d2 = tmp_path / "a", tmp_path / "b"
    p1, p2 = result.write(d1), result.write(d2)
    assert p1.read_bytes() == p2.read_bytes()
    assert "57.500000" in p1.read_text()
