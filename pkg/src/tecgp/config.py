"""Run-configuration files: a TOML document mirroring the experiment plan,
with every field optional, documented defaults, and loud rejection of
unknown keys."""

from __future__ import annotations

import hashlib
import json
from typing import Optional

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .dataio import SynthConfig
from .evo_ops import OperatorConfig
from .exprtree import PrimitiveSet
from .experiment import (
    ALGORITHMS,
    DatasetSource,
    EncodedCsvSource,
    ExperimentPlan,
    RawCsvSource,
    SyntheticSource,
)
from .optimizers import SearchConfig


class ConfigError(ValueError):
    """Invalid or unknown configuration content."""


_SYNTH_KEYS = {f: getattr(SynthConfig, f) for f in SynthConfig.__dataclass_fields__}

_DATASET_DEFAULTS = {
    "source": "synthetic",
    "seed": 2009,
    "ssn_components": 1,
    "raw_csv": "",
    "ssn_csv": "",
    "encoded_csv": "",
    # synthetic closed-form parameters; the shipped desk-scale profile strides
    # the hourly grid down to ~5k rows
    **_SYNTH_KEYS,
    "day_step": 5,
    "hour_step": 2,
}

_OPERATOR_DEFAULTS = {
    "tournament_size": 7,
    "p_subtree": 0.6,
    "max_depth": 12,
    "init_depth": 6,
    "constants": False,
    "const_low": -5.0,
    "const_high": 5.0,
}

_SEARCH_DEFAULTS = {
    "population": 200,
    "generations": 50,
    "neighborhood": 0,
    "sgp_convergence_eps": 1e-6,
    "sgp_stall_generations": 5,
}

_EXPERIMENT_DEFAULTS = {
    "algorithms": ["sgp", "nsga2", "moead"],
    "k_folds": 10,
    "replicates": 5,
    "base_seed": 42,
    "split_fraction": 0.67,
}

_SECTIONS = {
    "dataset": _DATASET_DEFAULTS,
    "operators": _OPERATOR_DEFAULTS,
    "search": _SEARCH_DEFAULTS,
    "experiment": _EXPERIMENT_DEFAULTS,
}

_CSV_ONLY_KEYS = {"raw_csv", "ssn_csv", "encoded_csv"}


def load_config_file(path: Optional[str]) -> dict:
    """Parse a TOML config file and merge it over the defaults, rejecting any
    section or key the schema does not know."""
    document = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                document = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    resolved = {name: dict(defaults) for name, defaults in _SECTIONS.items()}
    for section, content in document.items():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown config section [{section}]")
        if not isinstance(content, dict):
            raise ConfigError(f"[{section}] must be a table of keys")
        for key, value in content.items():
            if key not in _SECTIONS[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            resolved[section][key] = value
    _validate(resolved)
    return resolved


def _validate(resolved: dict) -> None:
    dataset = resolved["dataset"]
    source = dataset["source"]
    if source not in ("synthetic", "raw-csv", "encoded-csv"):
        raise ConfigError(
            f"[dataset] source must be synthetic, raw-csv, or encoded-csv, got {source!r}"
        )
    if source == "raw-csv" and not (dataset["raw_csv"] and dataset["ssn_csv"]):
        raise ConfigError("[dataset] raw-csv source needs raw_csv and ssn_csv paths")
    if source == "encoded-csv" and not dataset["encoded_csv"]:
        raise ConfigError("[dataset] encoded-csv source needs an encoded_csv path")
    if source == "synthetic":
        for key in _CSV_ONLY_KEYS:
            if dataset[key]:
                raise ConfigError(f"[dataset] {key!r} is meaningless for a synthetic source")
    algorithms = resolved["experiment"]["algorithms"]
    if not isinstance(algorithms, (list, tuple)) or not algorithms:
        raise ConfigError("[experiment] algorithms must be a non-empty list")
    for algo in algorithms:
        if algo not in ALGORITHMS:
            raise ConfigError(
                f"[experiment] unknown algorithm {algo!r} (choose from {sorted(ALGORITHMS)})"
            )


def synth_config(resolved: dict) -> SynthConfig:
    dataset = resolved["dataset"]
    return SynthConfig(**{f: dataset[f] for f in SynthConfig.__dataclass_fields__})


def dataset_source(resolved: dict) -> DatasetSource:
    dataset = resolved["dataset"]
    if dataset["source"] == "synthetic":
        return SyntheticSource(synth_config(resolved), dataset["seed"], dataset["ssn_components"])
    if dataset["source"] == "raw-csv":
        return RawCsvSource(dataset["raw_csv"], dataset["ssn_csv"], dataset["ssn_components"])
    return EncodedCsvSource(dataset["encoded_csv"])


def operator_config(resolved: dict) -> OperatorConfig:
    ops = resolved["operators"]
    try:
        return OperatorConfig(
            tournament_size=ops["tournament_size"],
            p_subtree=ops["p_subtree"],
            max_depth=ops["max_depth"],
            init_depth=ops["init_depth"],
            primitives=PrimitiveSet(ops["constants"], ops["const_low"], ops["const_high"]),
        )
    except ValueError as exc:
        raise ConfigError(f"[operators] {exc}") from None


def search_config(resolved: dict, log_evaluations: bool = False) -> SearchConfig:
    search = resolved["search"]
    try:
        return SearchConfig(
            operators=operator_config(resolved),
            population=search["population"],
            generations=search["generations"],
            neighborhood=search["neighborhood"],
            sgp_convergence_eps=search["sgp_convergence_eps"],
            sgp_stall_generations=search["sgp_stall_generations"],
            log_evaluations=log_evaluations,
        )
    except ValueError as exc:
        raise ConfigError(f"[search] {exc}") from None


def experiment_plan(resolved: dict) -> ExperimentPlan:
    exp = resolved["experiment"]
    try:
        return ExperimentPlan(
            dataset=dataset_source(resolved),
            algorithms=tuple(exp["algorithms"]),
            k_folds=exp["k_folds"],
            replicates=exp["replicates"],
            base_seed=exp["base_seed"],
            split_fraction=exp["split_fraction"],
            search=search_config(resolved),
        )
    except ValueError as exc:
        raise ConfigError(f"[experiment] {exc}") from None


def config_digest(resolved: dict) -> str:
    blob = json.dumps(resolved, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:12]
