"""Command-line front end: one executable, nine subcommands.

The subcommands cover the full workflow in pipeline order: ``ingest``
normalizes a survey export into the canonical CSV form, ``summarize``
reports its distributions, ``pmv`` scores one set of conditions with the
heat-balance index, ``train-source`` fits the pooled source network,
``transfer`` fine-tunes a saved source model on a target file, ``evaluate``
runs the cross-validated comparison for any algorithm, ``ablation`` and
``sweep`` run the feature-set and retained-depth grids, and ``synth``
materializes the built-in synthetic scenario (optionally with its
scratch-vs-transfer benchmark).

Every run writes ``manifest.json`` into the output directory: command,
flags, seeds, a content hash of each input file, pool sizes, artifact
names, and wall-clock time. The manifest is the only artifact carrying
timing; all report files are pure functions of inputs and seeds, so a
rerun with the manifest's flags reproduces them byte for byte.

Exit codes: 0 success, 1 bad input (missing file, malformed data, empty
pool, divergence), 2 usage error, 3 internal fault. The output directory
comes from ``--out``, falling back to the ``COMFORTLEARN_OUT`` environment
variable, then ``./out``.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .dataset import (
    FEATURE_SETS,
    ClimateZone,
    ComfortRecord,
    DatasetError,
    FeatureSet,
    canonical_mapping,
    enrich_climate,
    assemble_matrix,
    load_city_zones,
    load_dataset,
    load_mapping,
    records_to_csv,
    summarize_dataset,
)
from .evaluation import (
    ALGORITHM_KINDS,
    AlgorithmSpec,
    run_cv,
    run_feature_ablation,
    run_hidden_layer_sweep,
    stratified_holdout,
)
from .neural import TrainConfig, TrainingDivergedError, ModelFormatError, load_model, save_model
from .pmv import ConvergenceError, PmvInput, compute_pmv, pmv_class
from .resampling import make_plan, oversample
from .synthetic import GenerationError, ScenarioSpec, generate_synthetic_scenario, run_transfer_benchmark
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

__all__ = ["main", "build_parser", "RunManifest"]

logger = logging.getLogger(__name__)

#: Exceptions that indicate a problem with the user's inputs, not the code.
#: They exit 1 with a one-line diagnostic; anything else is an internal
#: fault and exits 3. ValueError covers the domain guards (bad ranges,
#: unknown names, empty pools, missing classes).
_USER_ERRORS = (
    FileNotFoundError,
    IsADirectoryError,
    NotADirectoryError,
    PermissionError,
    DatasetError,
    ModelFormatError,
    TrainingDivergedError,
    ConvergenceError,
    GenerationError,
    ValueError,
)

#: --resampler flag values -> run_cv / plan synthesizer names.
_RESAMPLERS = {"none": None, "interp": "interpolation", "gan": "gan"}


# ---------------------------------------------------------------------------
# Run manifest
# ---------------------------------------------------------------------------

@dataclass
class RunManifest:
    """Record of one run, sufficient to reproduce its artifacts.

    ``options`` holds the parsed flags verbatim, ``seeds`` every named seed
    in play, ``input_fingerprints`` a sha256 per input file, ``pool_sizes``
    the row counts of whatever pools the command assembled, and ``outputs``
    the artifact file names written next to the manifest. Timing lives here
    and only here, so the other artifacts stay bit-stable across reruns.
    """

    command: str
    argv: list[str]
    options: dict
    seeds: dict
    input_fingerprints: dict
    pool_sizes: dict
    outputs: list[str]
    timing_seconds: float
    version: str = __version__

    def write(self, out_dir: str | Path) -> Path:
        path = Path(out_dir) / "manifest.json"
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path


def _sha256(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _fingerprints(paths) -> dict:
    return {str(p): _sha256(p) for p in paths if p is not None}


def _options(args: argparse.Namespace) -> dict:
    skip = {"func", "command"}
    return {k: v for k, v in sorted(vars(args).items())
            if k not in skip and not k.startswith("_")}


def _manifest(
    args: argparse.Namespace,
    t0: float,
    inputs=(),
    seeds: dict | None = None,
    pools: dict | None = None,
    outputs=(),
) -> RunManifest:
    return RunManifest(
        command=args.command,
        argv=list(args._argv),
        options=_options(args),
        seeds=seeds or {},
        input_fingerprints=_fingerprints(inputs),
        pool_sizes=pools or {},
        outputs=[str(p) for p in outputs],
        timing_seconds=time.perf_counter() - t0,
    )


# ---------------------------------------------------------------------------
# Shared flag plumbing
# ---------------------------------------------------------------------------

def _out_dir(args: argparse.Namespace) -> Path:
    out = args.out or os.environ.get("COMFORTLEARN_OUT") or "out"
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _feature_set(tag: str) -> FeatureSet:
    by_lower = {key.lower(): fs for key, fs in FEATURE_SETS.items()}
    fs = by_lower.get(tag.strip().lower())
    if fs is None:
        raise ValueError(f"unknown feature set {tag!r}; "
                         f"expected one of {sorted(by_lower)}")
    return fs


def _zone(letter: str) -> ClimateZone:
    try:
        return ClimateZone(letter.strip().upper())
    except ValueError:
        raise ValueError(f"unknown climate zone {letter!r}; expected A-E") from None


def _pool_flag(text: str):
    """``all`` or ``zone:<letter>`` -> a source pool selector."""
    token = text.strip().lower()
    if token == "all":
        return ALL_HVAC
    if token.startswith("zone:"):
        return same_climate_zone(_zone(token.split(":", 1)[1]))
    raise ValueError(f"bad --pool value {text!r}; expected 'all' or 'zone:C'")


def _int_list(text: str, flag: str) -> tuple[int, ...]:
    try:
        values = tuple(int(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise ValueError(f"{flag} wants comma-separated integers, got {text!r}") from None
    if not values:
        raise ValueError(f"{flag} wants at least one integer, got {text!r}")
    return values


def _load_records(path: str, mapping_path: str | None = None,
                  city_zones_path: str | None = None) -> list[ComfortRecord]:
    """Load one CSV, with optional column mapping and zone enrichment."""
    mapping = load_mapping(mapping_path) if mapping_path else canonical_mapping(Path(path).stem)
    records = load_dataset(path, mapping).records
    if city_zones_path:
        records = enrich_climate(records, load_city_zones(city_zones_path))
    return records


def _load_sources(args) -> list[ComfortRecord]:
    """Concatenate the source survey files named on the command line."""
    records: list[ComfortRecord] = []
    for path in (args.source_a, args.source_s):
        if path:
            records.extend(_load_records(path, city_zones_path=args.city_zones))
    if not records:
        raise ValueError("no source rows; pass --source-a (and optionally --source-s)")
    return records


def _source_paths(args) -> list[str]:
    return [p for p in (args.source_a, getattr(args, "source_s", None),
                        getattr(args, "city_zones", None)) if p]


def _train_config(args, early_stop: bool = False) -> TrainConfig:
    return TrainConfig(learning_rate=args.lr, batch_size=args.batch,
                       max_epochs=args.epochs, seed=args.seed,
                       early_stop=early_stop)


# ---------------------------------------------------------------------------
# Subcommand handlers
# ---------------------------------------------------------------------------

def _cmd_ingest(args) -> int:
    t0 = time.perf_counter()
    out = _out_dir(args)
    mapping = load_mapping(args.mapping) if args.mapping else canonical_mapping(
        args.dataset_id or Path(args.input).stem)
    result = load_dataset(args.input, mapping, dataset_id=args.dataset_id)
    records = result.records
    if args.city_zones:
        records = enrich_climate(records, load_city_zones(args.city_zones))

    canonical = out / "canonical.csv"
    records_to_csv(records, canonical)
    drops = out / "drops.csv"
    with open(drops, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["reason", "count"])
        for reason, count in sorted(result.drop_reasons.items()):
            w.writerow([reason, count])

    _manifest(args, t0,
              inputs=[args.input, args.mapping, args.city_zones],
              pools={"kept": len(records), "dropped": result.dropped},
              outputs=[canonical.name, drops.name]).write(out)
    print(f"kept {len(records)} rows, dropped {result.dropped} -> {canonical}")
    return 0


def _cmd_summarize(args) -> int:
    t0 = time.perf_counter()
    out = _out_dir(args)
    records = _load_records(args.input, args.mapping)
    summary = summarize_dataset(records)
    paths = summary.write(out)
    _manifest(args, t0, inputs=[args.input, args.mapping],
              pools={"records": len(records)},
              outputs=[p.name for p in paths]).write(out)
    counts = " ".join(f"{c}:{n}" for c, n in sorted(summary.class_counts.items()))
    print(f"{len(records)} records, class counts {counts} -> {out}")
    return 0


def _cmd_pmv(args) -> int:
    t0 = time.perf_counter()
    out = _out_dir(args)
    tr = args.ta if args.tr is None else args.tr
    score = compute_pmv(PmvInput(ta=args.ta, tr=tr, vel=args.vel,
                                 rh=args.rh, met=args.met, clo=args.clo))
    cls = pmv_class(score)
    _manifest(args, t0,
              pools={}, outputs=[],
              seeds={}).write(out)
    print(f"pmv {score:.3f} class {int(cls)} ({cls.name.lower()})")
    return 0


def _cmd_train_source(args) -> int:
    t0 = time.perf_counter()
    out = _out_dir(args)
    records = _load_sources(args)
    plan = TransferPlan(
        source_pool=_pool_flag(args.pool),
        hidden_widths=_int_list(args.hidden, "--hidden"),
        source_train=_train_config(args),
        resampler=_RESAMPLERS[args.resampler],
    )
    pool = assemble_source_pool(records, plan.source_pool)
    model = train_source(pool, plan)
    path = out / "source_model.clmlp"
    save_model(model, path)

    prov = model.provenance
    _manifest(args, t0, inputs=_source_paths(args),
              seeds={"train": args.seed},
              pools={"source_pool": int(pool.n),
                     "after_resampling": int(prov["trained_rows"])},
              outputs=[path.name]).write(out)
    print(f"trained on {pool.n} pooled rows ({prov['trained_rows']} after "
          f"resampling), {prov['epochs_run']} epochs -> {path}")
    return 0


def _cmd_transfer(args) -> int:
    t0 = time.perf_counter()
    out = _out_dir(args)
    source_model = load_model(args.source_model)
    std = source_standardizer(source_model)
    records = _load_records(args.target)

    X, y, kept = assemble_matrix(records, std.feature_set)
    if not kept:
        raise ValueError("no target row carries the source model's features "
                         f"{source_model.feature_names}")

    # a held-out slice picks the stopping epoch; without it a small noisy
    # target set would just be memorized
    val_data = None
    fit_idx, val_idx = stratified_holdout(y, args.val_fraction, seed=[args.seed, 1])
    if len(val_idx):
        val_data = (std.transform(X[val_idx]), y[val_idx])

    x_fit, y_fit = std.transform(X[fit_idx]), y[fit_idx]
    synthesizer = _RESAMPLERS[args.resampler]
    if synthesizer is not None:
        counts = {int(c): int(n) for c, n in zip(*np.unique(y_fit, return_counts=True))}
        augmented = oversample(x_fit, y_fit, make_plan(counts, synthesizer,
                                                       seed=[args.seed, 2]))
        x_fit, y_fit = augmented.matrix, augmented.labels

    hidden = tuple(l.fan_out for l in source_model.layers[:-1])
    plan = TransferPlan(hidden_widths=hidden,
                        fine_tune=_train_config(args, early_stop=True))
    target = DomainDataset(matrix=x_fit, labels=y_fit,
                           feature_names=source_model.feature_names,
                           provenance="target")
    tuned = transfer_fine_tune(source_model, target, plan, val_data=val_data)
    path = out / "tuned_model.clmlp"
    save_model(tuned, path)

    prov = tuned.provenance
    _manifest(args, t0, inputs=[args.source_model, args.target],
              seeds={"fine_tune": args.seed},
              pools={"target_rows": len(kept), "fine_tune_rows": int(len(y_fit)),
                     "validation_rows": int(len(val_idx))},
              outputs=[path.name]).write(out)
    print(f"fine-tuned on {len(y_fit)} rows ({len(val_idx)} held out), "
          f"{prov['epochs_run']} epochs, best epoch {prov['best_epoch']} -> {path}")
    return 0


def _cmd_evaluate(args) -> int:
    t0 = time.perf_counter()
    out = _out_dir(args)
    records = _load_records(args.target, city_zones_path=args.city_zones)
    fs = _feature_set(args.features)

    params: dict = {}
    if args.model == "knn":
        params["k"] = args.knn_k
    elif args.model == "forest":
        params["n_trees"] = args.trees
    elif args.model == "tl-mlp-c":
        params["zone"] = _zone(args.zone)
    elif args.model == "mlp":
        params["hidden_widths"] = _int_list(args.hidden, "--hidden")

    source_records = None
    transfer_plan = None
    if args.model in ("tl-mlp", "tl-mlp-c"):
        source_records = _load_sources(args)
        # the source pool is always rebalanced; --resampler none only turns
        # off fold-level synthesis on the target side
        transfer_plan = TransferPlan(
            hidden_widths=_int_list(args.hidden, "--hidden"),
            source_train=_train_config(args),
            fine_tune=_train_config(args, early_stop=True),
            resampler=_RESAMPLERS[args.resampler] or "interpolation",
        )

    report = run_cv(
        AlgorithmSpec(args.model, params),
        records,
        fs,
        k=args.k,
        seed=args.seed,
        resampler=_RESAMPLERS[args.resampler],
        stratified=args.stratified,
        source_records=source_records,
        transfer_plan=transfer_plan,
        train_config=_train_config(args) if args.model == "mlp" else None,
        val_fraction=args.val_fraction,
    )
    paths = report.write(out)

    pools = {"target_records": report.n_records}
    if "source_pool_rows" in report.details:
        pools["source_pool"] = report.details["source_pool_rows"]
    _manifest(args, t0, inputs=[args.target] + _source_paths(args),
              seeds={"cv": args.seed},
              pools=pools, outputs=[p.name for p in paths]).write(out)
    print(report.summary_line())
    if not report.leak_free:
        # belt and braces; the harness itself guarantees this
        print("warning: fold audit found test rows in a fit stage", file=sys.stderr)
    return 0


def _cmd_ablation(args) -> int:
    t0 = time.perf_counter()
    out = _out_dir(args)
    records = _load_records(args.target, city_zones_path=args.city_zones)
    kinds = [tok.strip() for tok in args.models.split(",") if tok.strip()]
    feature_sets = [_feature_set(tok) for tok in args.feature_sets.split(",") if tok.strip()]

    source_records = None
    if any(kind in ("tl-mlp", "tl-mlp-c") for kind in kinds):
        source_records = _load_sources(args)
    specs = []
    for kind in kinds:
        params = {"zone": _zone(args.zone)} if kind == "tl-mlp-c" else {}
        specs.append(AlgorithmSpec(kind, params))

    table = run_feature_ablation(
        specs, records, feature_sets, jobs=args.jobs,
        k=args.k, seed=args.seed, resampler=_RESAMPLERS[args.resampler],
        source_records=source_records, val_fraction=args.val_fraction,
    )
    path = table.write(out)
    _manifest(args, t0, inputs=[args.target] + _source_paths(args),
              seeds={"cv": args.seed},
              pools={"target_records": table.rows[0].n_records if table.rows else 0},
              outputs=[path.name]).write(out)
    for row in table.rows:
        print(row.summary_line())
    return 0


def _cmd_sweep(args) -> int:
    t0 = time.perf_counter()
    out = _out_dir(args)
    records = _load_records(args.target, city_zones_path=args.city_zones)
    source_records = _load_sources(args)

    table = run_hidden_layer_sweep(
        records, source_records, _zone(args.zone),
        depths=_int_list(args.depths, "--depths"), width=args.width,
        jobs=args.jobs,
        k=args.k, seed=args.seed, resampler=_RESAMPLERS[args.resampler],
        val_fraction=args.val_fraction,
    )
    path = table.write(out)
    _manifest(args, t0, inputs=[args.target] + _source_paths(args),
              seeds={"cv": args.seed},
              pools={"target_records": table.rows[0].report.n_records if table.rows else 0},
              outputs=[path.name]).write(out)
    for row in table.rows:
        print(f"depth {row.depth}: {row.report.summary_line()}")
    return 0


def _cmd_synth(args) -> int:
    t0 = time.perf_counter()
    out = _out_dir(args)
    scenario = generate_synthetic_scenario(ScenarioSpec(), seed=args.seed)

    outputs = []
    for name, records in (("source.csv", scenario.source_records),
                          ("target.csv", scenario.target_records),
                          ("target_test.csv", scenario.target_test_records)):
        records_to_csv(records, out / name)
        outputs.append(name)

    seeds: dict = {"scenario": args.seed}
    pools = {"source": len(scenario.source_records),
             "target": len(scenario.target_records),
             "target_test": len(scenario.target_test_records)}
    if args.benchmark:
        bench_seeds = list(range(args.benchmark_seeds))
        result = run_transfer_benchmark(scenario, seeds=bench_seeds)
        outputs.append(result.write(out).name)
        seeds["benchmark"] = bench_seeds
        print(result.summary_line())

    _manifest(args, t0, seeds=seeds, pools=pools, outputs=outputs).write(out)
    print(f"scenario seed {args.seed}: {pools['source']} source rows, "
          f"{pools['target']} target rows, {pools['target_test']} held out -> {out}")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_out(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", default=None,
                   help="output directory (default: $COMFORTLEARN_OUT or ./out)")


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--hidden", default="64,64", help="hidden layer widths, comma-separated")
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--batch", type=int, default=200)


def _add_source_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--source-a", default=None, help="first source survey CSV (canonical form)")
    p.add_argument("--source-s", default=None, help="second source survey CSV (canonical form)")
    p.add_argument("--city-zones", default=None,
                   help="city -> climate zone table, applied to loaded records")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="comfortlearn",
        description="Thermal-comfort sensation modelling with cross-building transfer.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    p = sub.add_parser("ingest", help="normalize a survey CSV into canonical form")
    p.add_argument("--input", required=True, help="survey CSV to ingest")
    p.add_argument("--mapping", default=None,
                   help="column-mapping config (default: file is already canonical)")
    p.add_argument("--dataset-id", default=None, help="identifier stored on every record")
    p.add_argument("--city-zones", default=None, help="city -> climate zone table")
    _add_out(p)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("summarize", help="class counts and feature distributions")
    p.add_argument("--input", required=True, help="canonical CSV")
    p.add_argument("--mapping", default=None, help="column-mapping config, if not canonical")
    _add_out(p)
    p.set_defaults(func=_cmd_summarize)

    p = sub.add_parser("pmv", help="score one set of conditions with the heat-balance index")
    p.add_argument("--ta", type=float, required=True, help="air temperature [degC]")
    p.add_argument("--tr", type=float, default=None,
                   help="mean radiant temperature [degC] (default: same as --ta)")
    p.add_argument("--vel", type=float, required=True, help="air velocity [m/s]")
    p.add_argument("--rh", type=float, required=True, help="relative humidity [%%]")
    p.add_argument("--met", type=float, default=1.2, help="metabolic rate [met]")
    p.add_argument("--clo", type=float, default=0.5, help="clothing insulation [clo]")
    _add_out(p)
    p.set_defaults(func=_cmd_pmv)

    p = sub.add_parser("train-source", help="train the pooled source network")
    _add_source_flags(p)
    p.add_argument("--pool", default="all", help="'all' or 'zone:<letter>' (e.g. zone:C)")
    _add_train_flags(p)
    p.add_argument("--resampler", choices=("interp", "gan"), default="interp",
                   help="minority-class synthesizer for the pooled rows")
    p.add_argument("--seed", type=int, default=0)
    _add_out(p)
    p.set_defaults(func=_cmd_train_source)

    p = sub.add_parser("transfer", help="fine-tune a saved source model on a target CSV")
    p.add_argument("--source-model", required=True, help="model file from train-source")
    p.add_argument("--target", required=True, help="target survey CSV (canonical form)")
    p.add_argument("--val-fraction", type=float, default=0.2,
                   help="held-out share of target rows that picks the stopping epoch")
    _add_train_flags(p)
    p.add_argument("--resampler", choices=("none", "interp", "gan"), default="interp")
    p.add_argument("--seed", type=int, default=0)
    _add_out(p)
    p.set_defaults(func=_cmd_transfer)

    p = sub.add_parser("evaluate", help="k-fold cross-validated evaluation of one algorithm")
    p.add_argument("--model", required=True, choices=ALGORITHM_KINDS)
    p.add_argument("--target", required=True, help="target survey CSV (canonical form)")
    _add_source_flags(p)
    p.add_argument("--zone", default="C", help="climate zone for tl-mlp-c (default C)")
    p.add_argument("--features", default="shared8",
                   help="feature set: Xa, Xb, Xc or shared8 (default)")
    p.add_argument("--k", type=int, default=10, help="number of folds")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--resampler", choices=("none", "interp", "gan"), default="interp")
    p.add_argument("--stratified", action="store_true",
                   help="stratify folds by class instead of plain shuffling")
    p.add_argument("--val-fraction", type=float, default=0.0,
                   help="per-fold held-out share for network early stopping")
    _add_train_flags(p)
    p.add_argument("--knn-k", type=int, default=5, help="neighbours for the knn baseline")
    p.add_argument("--trees", type=int, default=100, help="trees for the forest baseline")
    _add_out(p)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("ablation", help="algorithm x feature-set grid with shared folds")
    p.add_argument("--target", required=True, help="target survey CSV (canonical form)")
    _add_source_flags(p)
    p.add_argument("--models", default="pmv,random,knn,nb,tree,forest,mlp",
                   help="comma-separated algorithm names")
    p.add_argument("--feature-sets", default="Xa,Xb,Xc", help="comma-separated set tags")
    p.add_argument("--zone", default="C", help="climate zone for tl-mlp-c rows")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--resampler", choices=("none", "interp", "gan"), default="interp")
    p.add_argument("--val-fraction", type=float, default=0.0)
    p.add_argument("--jobs", type=int, default=1,
                   help="grid cells evaluated in parallel (default 1, fully sequential)")
    _add_out(p)
    p.set_defaults(func=_cmd_ablation)

    p = sub.add_parser("sweep", help="network depth sweep, always retaining the last hidden layer")
    p.add_argument("--target", required=True, help="target survey CSV (canonical form)")
    _add_source_flags(p)
    p.add_argument("--zone", default="C", help="climate zone of the source pool")
    p.add_argument("--depths", default="1,2,3,4", help="hidden layer counts to try")
    p.add_argument("--width", type=int, default=64, help="width of every hidden layer")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--resampler", choices=("none", "interp", "gan"), default="interp")
    p.add_argument("--val-fraction", type=float, default=0.0)
    p.add_argument("--jobs", type=int, default=1,
                   help="sweep points evaluated in parallel (default 1)")
    _add_out(p)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("synth", help="materialize the synthetic multi-zone scenario")
    p.add_argument("--seed", type=int, default=0, help="scenario seed")
    p.add_argument("--benchmark", action="store_true",
                   help="also run the scratch-vs-transfer benchmark on it")
    p.add_argument("--benchmark-seeds", type=int, default=10,
                   help="training seeds for --benchmark (default 10)")
    _add_out(p)
    p.set_defaults(func=_cmd_synth)

    return parser


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse prints its own diagnostic
        return int(exc.code or 0)
    args._argv = list(argv)

    if not logging.getLogger().handlers:
        logging.basicConfig(level=logging.INFO, stream=sys.stderr,
                            format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except _USER_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 -- the contract wants exit 3, not a traceback
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
