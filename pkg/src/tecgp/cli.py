"""Command-line front end: data generation, feature encoding, single
training runs, cross-validation experiments, and model deployment.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 internal
invariant violation. Errors are one machine-parsable line on stderr.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path
from random import Random

from . import __version__, exprtree
from .config import (
    ConfigError,
    config_digest,
    load_config_file,
    search_config,
    synth_config,
    experiment_plan,
)
from .dataio import (
    DataError,
    encode_dataset,
    fit_sunspot,
    load_csv,
    load_encoded_csv,
    load_ssn_csv,
    synth_ssn_series,
    synth_vtec,
    write_csv,
    write_encoded_csv,
    write_ssn_csv,
    _format_float,
)
from .experiment import ALGORITHMS, run_experiment, write_run_files, _bundle_run
from .exprtree import PrefixParseError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems through our exit-code scheme."""

    def error(self, message):
        raise UsageError(message)


def _parse_years(text: str) -> tuple[int, int]:
    try:
        if ":" in text:
            start, end = text.split(":", 1)
            return int(start), int(end)
        year = int(text)
        return year, year
    except ValueError:
        raise UsageError(f"--years expects YEAR or START:END, got {text!r}") from None


def build_parser() -> _Parser:
    parser = _Parser(prog="tecgp", description=__doc__)
    parser.add_argument("--version", action="version", version=f"tecgp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a synthetic raw vTEC dataset")
    p.add_argument("--years", required=True, help="YEAR or START:END (inclusive)")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--noise", type=float, default=None, help="noise sigma (TECU)")
    p.add_argument("--day-step", type=int, default=1)
    p.add_argument("--hour-step", type=int, default=1)
    p.add_argument("--config", default=None, help="TOML config for closed-form parameters")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--ssn-out", default=None, help="also write the monthly solar-index CSV")

    p = sub.add_parser("encode", help="encode raw records into model inputs")
    p.add_argument("--raw", required=True, help="raw CSV (year,daynum,hour,vtec)")
    p.add_argument("--ssn", required=True, help="monthly solar-index CSV (year,month,mean_ssn)")
    p.add_argument("--components", type=int, default=1, help="sinusoids in the solar fit")
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("train", help="run one seeded search and write its bundle")
    p.add_argument("--algo", required=True, choices=sorted(ALGORITHMS))
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--fitness-csv", required=True, help="encoded CSV driving selection")
    p.add_argument("--validation-csv", required=True, help="encoded CSV driving model choice")
    p.add_argument("--population", type=int, default=None)
    p.add_argument("--gen-max", type=int, default=None)
    p.add_argument("-o", "--output", required=True, help="bundle directory")

    p = sub.add_parser("experiment", help="run the cross-validation experiment")
    p.add_argument("--config", default=None)
    p.add_argument("--algos", default=None, help="comma-separated subset override")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--resume", action="store_true", help="skip cells already on disk")
    p.add_argument("-o", "--output", required=True, help="report directory")

    p = sub.add_parser("predict", help="apply a saved model to encoded inputs")
    p.add_argument("--model", required=True, help="prefix-notation model file")
    p.add_argument("--input", required=True, help="encoded CSV")
    p.add_argument("-o", "--output", required=True)
    return parser


def cmd_gen_data(args) -> int:
    resolved = load_config_file(args.config)
    start, end = _parse_years(args.years)
    base = synth_config(resolved)
    cfg = dataclasses.replace(
        base,
        start_year=start,
        end_year=end,
        day_step=args.day_step,
        hour_step=args.hour_step,
        noise_sigma=args.noise if args.noise is not None else base.noise_sigma,
    )
    records = synth_vtec(cfg, Random(args.seed))
    write_csv(records, args.output)
    if args.ssn_out:
        write_ssn_csv(synth_ssn_series(cfg), args.ssn_out)
    digest = config_digest({"dataset": dataclasses.asdict(cfg), "seed": args.seed})
    print(f"wrote {len(records)} rows to {args.output} (config {digest})")
    return EXIT_OK


def cmd_encode(args) -> int:
    records = load_csv(args.raw)
    series = load_ssn_csv(args.ssn)
    model = fit_sunspot(series.values, args.components, series.base_year, series.base_month)
    dataset = encode_dataset(records, model)
    write_encoded_csv(dataset, args.output)
    print(
        f"encoded {len(dataset)} rows to {args.output} "
        f"(solar fit residual rmse {model.residual_rmse:.4f})"
    )
    return EXIT_OK


def cmd_train(args) -> int:
    resolved = load_config_file(args.config)
    if args.population is not None:
        resolved["search"]["population"] = args.population
    if args.gen_max is not None:
        resolved["search"]["generations"] = args.gen_max
    search = search_config(resolved)
    fitness_set = load_encoded_csv(args.fitness_csv)
    validation_set = load_encoded_csv(args.validation_csv)
    result = ALGORITHMS[args.algo](search, fitness_set, validation_set, Random(args.seed))
    best = result.best_model
    ep_rows, trace_rows = _bundle_run(result)
    out_dir = Path(args.output)
    write_run_files(out_dir, ep_rows, trace_rows, best.prefix)
    (out_dir / "config.json").write_text(
        json.dumps(
            {"version": __version__, "config": resolved, "seed": args.seed, "algo": args.algo},
            indent=2,
            sort_keys=True,
        )
        + "\n"
    )
    print(
        f"best validation rmse {_format_float(best.objectives_validation.rmse)} "
        f"size {best.objectives_fitness.size}"
    )
    return EXIT_OK


def cmd_experiment(args) -> int:
    resolved = load_config_file(args.config)
    if args.algos is not None:
        resolved["experiment"]["algorithms"] = [a for a in args.algos.split(",") if a]
    plan = experiment_plan(resolved)
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    result = run_experiment(
        plan,
        out_dir=Path(args.output),
        jobs=args.jobs,
        resume=args.resume,
        resolved_config=resolved,
        log=print,
    )
    for algorithm in plan.algorithms:
        stats = result.aggregate[algorithm]
        print(
            f"{algorithm}: median-fold test rmse mean {stats.mean:.4f} "
            f"(min {stats.min:.4f}, max {stats.max:.4f}, std {stats.std:.4f})"
        )
    return EXIT_OK


def cmd_predict(args) -> int:
    model_text = Path(args.model).read_text()
    tree = exprtree.parse_prefix(model_text)
    dataset = load_encoded_csv(args.input)
    predictions = exprtree.evaluate_batch(tree, dataset.inputs)
    with open(args.output, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["prediction"])
        for value in predictions:
            writer.writerow([_format_float(float(value))])
    print(f"wrote {len(dataset)} predictions to {args.output}")
    return EXIT_OK


_COMMANDS = {
    "gen-data": cmd_gen_data,
    "encode": cmd_encode,
    "train": cmd_train,
    "experiment": cmd_experiment,
    "predict": cmd_predict,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except (UsageError, ConfigError) as exc:
        print(f"tecgp: error: usage: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, PrefixParseError, OSError) as exc:
        print(f"tecgp: error: data: {exc}", file=sys.stderr)
        return EXIT_DATA
    except SystemExit:
        raise
    except Exception as exc:  # internal invariant violations
        print(f"tecgp: error: internal: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
