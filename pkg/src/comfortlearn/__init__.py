"""Thermal-comfort sensation modelling with cross-building transfer.

The package covers the full workflow: canonical survey ingestion
(:mod:`~comfortlearn.dataset`), the heat-balance comfort index
(:mod:`~comfortlearn.pmv`), a seeded from-scratch neural classifier
(:mod:`~comfortlearn.neural`), minority-class oversampling
(:mod:`~comfortlearn.resampling`), classical baselines
(:mod:`~comfortlearn.baselines`), pooled-source transfer
(:mod:`~comfortlearn.transfer`), the cross-validation harness
(:mod:`~comfortlearn.evaluation`) and a ground-truth synthetic scenario
(:mod:`~comfortlearn.synthetic`). Packaged data files and their
self-check live in :mod:`~comfortlearn.fixtures`; the ``comfortlearn``
command (:mod:`~comfortlearn.cli`) drives everything from the shell.
"""

from .baselines import (
    DecisionTreeBaseline,
    KnnBaseline,
    NaiveBayesBaseline,
    RandomForestBaseline,
    RandomGuessBaseline,
    make_baseline,
)
from .dataset import (
    CLASS_VALUES,
    ClimateZone,
    ColumnMapping,
    ComfortRecord,
    DatasetError,
    FeatureSet,
    SHARED_SOURCE_FEATURES,
    SensationClass,
    Standardizer,
    Ventilation,
    XA,
    XB,
    XC,
    assemble_matrix,
    canonical_mapping,
    enrich_climate,
    filter_pool,
    fit_standardizer,
    apply_standardizer,
    labels_for,
    load_city_zones,
    load_dataset,
    load_mapping,
    merge_classes,
    records_to_csv,
    summarize_dataset,
)
from .evaluation import (
    AlgorithmSpec,
    ConfusionMatrix,
    EvalReport,
    MissingClassError,
    accuracy,
    confusion,
    kfold_split,
    run_cv,
    run_feature_ablation,
    run_hidden_layer_sweep,
    stratified_holdout,
    stratified_kfold_split,
    weighted_f1,
)
from .fixtures import (
    ZONE_CITY_POOLS,
    FixtureReport,
    data_path,
    validate_fixtures,
    zone_pool_records,
)
from .neural import (
    MlpModel,
    ModelFormatError,
    TrainConfig,
    TrainingDivergedError,
    forward,
    init_model,
    load_model,
    predict,
    save_model,
    train,
)
from .pmv import ConvergenceError, PmvInput, compute_pmv, pmv_baseline_predict, pmv_class
from .resampling import (
    GanConfig,
    ResamplePlan,
    make_plan,
    oversample,
    oversample_gan,
    oversample_interpolation,
)
from .synthetic import (
    BenchmarkResult,
    ScenarioSpec,
    SyntheticScenario,
    generate_synthetic_scenario,
    run_transfer_benchmark,
)
from .transfer import (
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

__version__ = "0.1.0"
