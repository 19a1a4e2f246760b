"""Cross-validation orchestration: contiguous k-fold cycles, seeded
replicate runs per algorithm, held-out-fold scoring, front comparisons, and
report-bundle assembly.

Every cell (fold x algorithm x replicate) is an independent job with a seed
derived arithmetically from the base seed, so any cell can be reproduced in
isolation and the assembled reports are byte-identical at any parallelism.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from random import Random
from typing import Optional, Sequence, Union

import numpy as np

from . import __version__
from .dataio import (
    EncodedDataset,
    SynthConfig,
    build_folds,
    encode_dataset,
    fit_sunspot,
    load_csv,
    load_encoded_csv,
    load_ssn_csv,
    split_training,
    synth_ssn_series,
    synth_vtec,
    _format_float,
)
from .fitness import ObjectiveVector, rmse
from .metrics import FrontSnapshot, RmseStats, c_metric, delta_metric, nds, rmse_stats
from .optimizers import RunResult, SearchConfig, moead_run, nsga2_run, sgp_run

ALGORITHMS = {"sgp": sgp_run, "nsga2": nsga2_run, "moead": moead_run}

EP_HEADER = ["rmse_fitness", "size", "rmse_validation", "prefix_expression"]
TRACE_HEADER = ["generation", "best_rmse_fitness", "archive_size", "evaluations"]
TABLE1_HEADER = ["fold", "C_NM", "C_MN", "delta_N", "delta_M", "NDS_N", "NDS_M"]
PER_FOLD_HEADER = ["fold", "algorithm", "replicate", "seed", "test_rmse"]


@dataclass(frozen=True)
class SyntheticSource:
    config: SynthConfig = field(default_factory=SynthConfig)
    seed: int = 2009
    ssn_components: int = 1


@dataclass(frozen=True)
class RawCsvSource:
    raw_csv: str
    ssn_csv: str
    ssn_components: int = 1


@dataclass(frozen=True)
class EncodedCsvSource:
    path: str


DatasetSource = Union[SyntheticSource, RawCsvSource, EncodedCsvSource]


def prepare_dataset(source: DatasetSource) -> EncodedDataset:
    """Materialize the encoded dataset for a plan's data source."""
    if isinstance(source, SyntheticSource):
        records = synth_vtec(source.config, Random(source.seed))
        series = synth_ssn_series(source.config)
        model = fit_sunspot(
            series.values, source.ssn_components, series.base_year, series.base_month
        )
        return encode_dataset(records, model)
    if isinstance(source, RawCsvSource):
        records = load_csv(source.raw_csv)
        series = load_ssn_csv(source.ssn_csv)
        model = fit_sunspot(
            series.values, source.ssn_components, series.base_year, series.base_month
        )
        return encode_dataset(records, model)
    return load_encoded_csv(source.path)


@dataclass(frozen=True)
class ExperimentPlan:
    dataset: DatasetSource = field(default_factory=SyntheticSource)
    algorithms: tuple[str, ...] = ("sgp", "nsga2", "moead")
    k_folds: int = 10
    replicates: int = 50
    base_seed: int = 42
    split_fraction: float = 0.67
    search: SearchConfig = field(default_factory=SearchConfig)

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError(f"replicates must be >= 1, got {self.replicates}")
        if self.k_folds < 2:
            raise ValueError(f"k_folds must be >= 2, got {self.k_folds}")
        if not self.algorithms:
            raise ValueError("at least one algorithm is required")
        for algo in self.algorithms:
            if algo not in ALGORITHMS:
                raise ValueError(f"unknown algorithm {algo!r} (choose from {sorted(ALGORITHMS)})")


@dataclass
class CellOutcome:
    """Everything one (fold, algorithm, replicate) run contributes."""

    fold: int
    algorithm: str
    replicate: int
    seed: int
    test_rmse: float
    validation_rmse: float
    model_size: int
    model_prefix: str
    ep_rows: list[tuple[float, int, float, str]]  # (rmse_fit, size, rmse_val, prefix)
    trace_rows: list[tuple[int, float, int, int]]

    def key(self) -> tuple[int, str, int]:
        return (self.fold, self.algorithm, self.replicate)


@dataclass
class AlgorithmFoldSummary:
    test_rmses: list[float]  # indexed by replicate
    median_test_rmse: float
    representative_replicate: int
    front: FrontSnapshot


@dataclass
class FoldReport:
    fold: int
    per_algorithm: dict[str, AlgorithmFoldSummary]


@dataclass
class ExperimentResult:
    fold_reports: list[FoldReport]
    aggregate: dict[str, RmseStats]
    cells: list[CellOutcome]
    table1_rows: Optional[list[dict[str, object]]] = None


def cell_seed(base_seed: int, fold: int, replicates: int, replicate: int) -> int:
    return base_seed + fold * replicates + replicate


def _bundle_run(result: RunResult) -> tuple[list, list]:
    ep_rows = [
        (
            m.objectives_fitness.rmse,
            m.objectives_fitness.size,
            m.objectives_validation.rmse,
            m.prefix,
        )
        for m in result.external_archive.members
    ]
    trace_rows = [
        (t.generation, t.best_rmse, t.archive_size, t.evaluations) for t in result.trace
    ]
    return ep_rows, trace_rows


def _execute_cell(task) -> CellOutcome:
    (fold, algorithm, replicate, seed, search, fit_arrays, val_arrays, test_arrays) = task
    fitness_set = EncodedDataset(*fit_arrays)
    validation_set = EncodedDataset(*val_arrays)
    test_set = EncodedDataset(*test_arrays)
    result = ALGORITHMS[algorithm](search, fitness_set, validation_set, Random(seed))
    best = result.best_model
    ep_rows, trace_rows = _bundle_run(result)
    return CellOutcome(
        fold,
        algorithm,
        replicate,
        seed,
        rmse(best.tree, test_set),
        best.objectives_validation.rmse,
        best.objectives_fitness.size,
        best.prefix,
        ep_rows,
        trace_rows,
    )


def _check_partition(training: np.ndarray, fit_idx, val_idx, test_idx) -> None:
    """Leakage guard: fitness and validation split the training rows exactly
    and never touch the held-out fold."""
    fit_set, val_set, test_set = set(map(int, fit_idx)), set(map(int, val_idx)), set(map(int, test_idx))
    if fit_set & val_set:
        raise AssertionError("fitness and validation sets overlap")
    if (fit_set | val_set) != set(map(int, training)):
        raise AssertionError("fitness+validation do not reconstruct the training rows")
    if (fit_set | val_set) & test_set:
        raise AssertionError("training rows leak into the held-out fold")


def run_experiment(
    plan: ExperimentPlan,
    out_dir: Optional[Path] = None,
    jobs: int = 1,
    resume: bool = False,
    resolved_config: Optional[dict] = None,
    log=None,
) -> ExperimentResult:
    """Run the full cross-validation grid and assemble per-fold reports.

    With ``out_dir`` set, a report bundle is written; with ``resume`` also
    set, cells whose outputs already exist are loaded instead of recomputed.
    The result is deterministic for a fixed plan at any ``jobs`` value.
    """
    dataset = prepare_dataset(plan.dataset)
    folds = build_folds(dataset, plan.k_folds)

    tasks = []
    for fold in range(plan.k_folds):
        training = folds.training_indices(fold)
        test_idx = folds.fold_indices(fold)
        fit_idx, val_idx = split_training(
            training, plan.split_fraction, Random(plan.base_seed + fold)
        )
        _check_partition(training, fit_idx, val_idx, test_idx)
        fit_arrays = (dataset.inputs[fit_idx], dataset.targets[fit_idx])
        val_arrays = (dataset.inputs[val_idx], dataset.targets[val_idx])
        test_arrays = (dataset.inputs[test_idx], dataset.targets[test_idx])
        for algorithm in plan.algorithms:
            for replicate in range(plan.replicates):
                seed = cell_seed(plan.base_seed, fold, plan.replicates, replicate)
                tasks.append(
                    (fold, algorithm, replicate, seed, plan.search,
                     fit_arrays, val_arrays, test_arrays)
                )

    completed: dict[tuple, CellOutcome] = {}
    loaded_keys: set[tuple] = set()
    pending = []
    for task in tasks:
        key = (task[0], task[1], task[2])
        if resume and out_dir is not None:
            loaded = _load_cell(out_dir, *key)
            if loaded is not None:
                completed[key] = loaded
                loaded_keys.add(key)
                continue
        pending.append(task)

    if jobs > 1 and pending:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for outcome in pool.map(_execute_cell, pending):
                completed[outcome.key()] = outcome
                if log:
                    log(_cell_line(outcome))
    else:
        for task in pending:
            outcome = _execute_cell(task)
            completed[outcome.key()] = outcome
            if log:
                log(_cell_line(outcome))

    cells = [completed[key] for key in sorted(completed)]
    result = _assemble(plan, cells)
    if out_dir is not None:
        _write_bundle(result, plan, Path(out_dir), resolved_config, skip_cells=loaded_keys)
    return result


def _cell_line(outcome: CellOutcome) -> str:
    return (
        f"fold {outcome.fold} {outcome.algorithm} replicate {outcome.replicate}: "
        f"test rmse {outcome.test_rmse:.4f} size {outcome.model_size}"
    )


def _assemble(plan: ExperimentPlan, cells: list[CellOutcome]) -> ExperimentResult:
    by_cell = {c.key(): c for c in cells}
    fold_reports = []
    for fold in range(plan.k_folds):
        per_algorithm = {}
        for algorithm in plan.algorithms:
            outcomes = [by_cell[(fold, algorithm, r)] for r in range(plan.replicates)]
            scores = sorted((c.test_rmse, c.replicate) for c in outcomes)
            median_rmse, representative = scores[(len(scores) - 1) // 2]
            rep = by_cell[(fold, algorithm, representative)]
            front = FrontSnapshot(
                tuple(ObjectiveVector(r, s) for r, s, _, _ in rep.ep_rows),
                label=f"{algorithm}-fold{fold}",
            )
            per_algorithm[algorithm] = AlgorithmFoldSummary(
                [c.test_rmse for c in outcomes], median_rmse, representative, front
            )
        fold_reports.append(FoldReport(fold, per_algorithm))

    aggregate = {
        algorithm: rmse_stats(
            [report.per_algorithm[algorithm].median_test_rmse for report in fold_reports]
        )
        for algorithm in plan.algorithms
    }

    table1_rows = None
    if "nsga2" in plan.algorithms and "moead" in plan.algorithms:
        fronts_n = [r.per_algorithm["nsga2"].front for r in fold_reports]
        fronts_m = [r.per_algorithm["moead"].front for r in fold_reports]
        table1_rows = compare_fronts(fronts_n, fronts_m)

    return ExperimentResult(fold_reports, aggregate, cells, table1_rows)


def compare_fronts(
    fronts_a: Sequence[FrontSnapshot], fronts_b: Sequence[FrontSnapshot]
) -> list[dict[str, object]]:
    """Per-fold front comparison in the usual two-front table layout:
    coverage both ways, spread of each, and front sizes, with trailing
    mean/std rows over the fold columns. Spread of a singleton front is NaN.
    """
    if len(fronts_a) != len(fronts_b):
        raise ValueError(
            f"front lists cover different folds: {len(fronts_a)} vs {len(fronts_b)}"
        )

    def spread(front: FrontSnapshot) -> float:
        return delta_metric(front) if len(front) >= 2 else float("nan")

    fold_rows: list[dict[str, object]] = []
    for i, (fa, fb) in enumerate(zip(fronts_a, fronts_b)):
        fold_rows.append(
            {
                "fold": str(i + 1),
                "C_NM": c_metric(fa, fb),
                "C_MN": c_metric(fb, fa),
                "delta_N": spread(fa),
                "delta_M": spread(fb),
                "NDS_N": float(nds(fa)),
                "NDS_M": float(nds(fb)),
            }
        )
    rows = list(fold_rows)
    for label, pick in (("mean", lambda s: s.mean), ("std", lambda s: s.std)):
        row: dict[str, object] = {"fold": label}
        for column in TABLE1_HEADER[1:]:
            row[column] = pick(rmse_stats([r[column] for r in fold_rows]))
        rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# bundle serialization

def _cell_dir(out_dir: Path, fold: int, algorithm: str, replicate: int) -> Path:
    return Path(out_dir) / "folds" / str(fold) / algorithm / str(replicate)


def write_run_files(directory: Path, ep_rows, trace_rows, model_prefix: str) -> None:
    """The three per-run artifacts: archive CSV, trace CSV, best model."""
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / "ep.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(EP_HEADER)
        for r_fit, size, r_val, prefix in ep_rows:
            writer.writerow([_format_float(r_fit), size, _format_float(r_val), prefix])
    with open(directory / "trace.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_HEADER)
        for gen, best, archive_size, evals in trace_rows:
            writer.writerow([gen, _format_float(best), archive_size, evals])
    (directory / "best_model.txt").write_text(model_prefix + "\n")


def write_cell(out_dir: Path, outcome: CellOutcome) -> None:
    cell = _cell_dir(out_dir, outcome.fold, outcome.algorithm, outcome.replicate)
    write_run_files(cell, outcome.ep_rows, outcome.trace_rows, outcome.model_prefix)
    summary = {
        "fold": outcome.fold,
        "algorithm": outcome.algorithm,
        "replicate": outcome.replicate,
        "seed": outcome.seed,
        "test_rmse": outcome.test_rmse,
        "validation_rmse": outcome.validation_rmse,
        "model_size": outcome.model_size,
    }
    (cell / "cell.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")


def _load_cell(out_dir: Path, fold: int, algorithm: str, replicate: int) -> Optional[CellOutcome]:
    cell = _cell_dir(out_dir, fold, algorithm, replicate)
    summary_path = cell / "cell.json"
    if not summary_path.exists():
        return None
    summary = json.loads(summary_path.read_text())
    ep_rows = []
    with open(cell / "ep.csv", newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            ep_rows.append((float(row[0]), int(row[1]), float(row[2]), row[3]))
    trace_rows = []
    with open(cell / "trace.csv", newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            trace_rows.append((int(row[0]), float(row[1]), int(row[2]), int(row[3])))
    prefix = (cell / "best_model.txt").read_text().strip()
    return CellOutcome(
        summary["fold"],
        summary["algorithm"],
        summary["replicate"],
        summary["seed"],
        summary["test_rmse"],
        summary["validation_rmse"],
        summary["model_size"],
        prefix,
        ep_rows,
        trace_rows,
    )


def _table_value(value: object) -> str:
    if isinstance(value, str):
        return value
    v = float(value)
    if math.isnan(v):
        return "nan"
    return _format_float(v)


def _write_bundle(
    result: ExperimentResult,
    plan: ExperimentPlan,
    out_dir: Path,
    resolved_config: Optional[dict],
    skip_cells: Optional[set] = None,
) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    for cell in result.cells:
        if skip_cells and cell.key() in skip_cells:
            continue  # resumed cell: outputs already on disk, keep mtimes
        write_cell(out_dir, cell)

    with open(out_dir / "per_fold_rmse.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PER_FOLD_HEADER)
        for cell in result.cells:
            writer.writerow(
                [cell.fold, cell.algorithm, cell.replicate, cell.seed, _format_float(cell.test_rmse)]
            )

    if result.table1_rows is not None:
        with open(out_dir / "table1.csv", "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(TABLE1_HEADER)
            for row in result.table1_rows:
                writer.writerow([_table_value(row[c]) for c in TABLE1_HEADER])

    aggregate = {
        "version": __version__,
        "algorithms": {
            algorithm: {
                "per_fold_median_rmse": [
                    report.per_algorithm[algorithm].median_test_rmse
                    for report in result.fold_reports
                ],
                "per_fold_representative_replicate": [
                    report.per_algorithm[algorithm].representative_replicate
                    for report in result.fold_reports
                ],
                "stats": {
                    "min": stats.min,
                    "max": stats.max,
                    "mean": stats.mean,
                    "std": stats.std,
                },
            }
            for algorithm, stats in result.aggregate.items()
        },
    }
    (out_dir / "aggregate.json").write_text(
        json.dumps(aggregate, indent=2, sort_keys=True) + "\n"
    )
    if resolved_config is not None:
        (out_dir / "config.json").write_text(
            json.dumps(
                {"version": __version__, "config": resolved_config},
                indent=2,
                sort_keys=True,
            )
            + "\n"
        )
