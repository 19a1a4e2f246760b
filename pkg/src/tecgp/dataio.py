"""Data ingestion and preparation: feature encoding of cyclic inputs, solar
index smoothing, fold/split planning, a synthetic data generator, and CSV IO.

Time conventions used throughout: a monthly solar-index series is anchored
at its first (year, month) sample, sample k sits at t = k + 0.5 months
(mid-month), and an hourly record maps to the continuous month coordinate
t = (year - base_year + (daynum - 1 + hour/24) / 365) * 12 - (base_month - 1).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from random import Random
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

RAW_HEADER = ["year", "daynum", "hour", "vtec"]
SSN_HEADER = ["year", "month", "mean_ssn"]
ENCODED_HEADER = ["sinhour", "coshour", "sinday", "cosday", "ssn", "vtec"]


class DataError(ValueError):
    """Malformed or out-of-range input data."""


class RawRecord(NamedTuple):
    year: int
    daynum: int  # 1..365; day 366 is clamped to 365 on ingestion
    hour: int  # 0..23
    vtec: float  # TECU, >= 0


class EncodedRow(NamedTuple):
    """One model input row; fields 0..4 are the tree variables in order."""

    sinhour: float
    coshour: float
    sinday: float
    cosday: float
    ssn: float
    target_vtec: float


def encode_hour(hour: int) -> tuple[float, float]:
    """Quadrature components of the hour-of-day, removing the midnight wrap."""
    if not 0 <= hour <= 23:
        raise DataError(f"hour out of range 0..23: {hour}")
    angle = 2.0 * math.pi * hour / 24.0
    return math.sin(angle), math.cos(angle)


def encode_day(daynum: int) -> tuple[float, float]:
    """Quadrature components of the day-of-year, removing the year-end wrap."""
    if not 1 <= daynum <= 365:
        raise DataError(f"daynum out of range 1..365: {daynum}")
    angle = 2.0 * math.pi * daynum / 365.0
    return math.sin(angle), math.cos(angle)


class EncodedDataset:
    """Column-oriented encoded dataset: an (n, 5) input matrix plus targets.

    ``timestamps`` (fractional days, chronological) are carried through from
    raw records when known so fold planning can verify ordering; datasets
    loaded from encoded CSVs rely on file order instead.
    """

    def __init__(
        self,
        inputs: np.ndarray,
        targets: np.ndarray,
        timestamps: Optional[np.ndarray] = None,
    ):
        inputs = np.asarray(inputs, dtype=float)
        targets = np.asarray(targets, dtype=float)
        if inputs.ndim != 2 or inputs.shape[1] != 5:
            raise DataError(f"inputs must be (n, 5), got {inputs.shape}")
        if targets.shape != (inputs.shape[0],):
            raise DataError("targets length does not match inputs")
        self.inputs = inputs
        self.targets = targets
        self.timestamps = None if timestamps is None else np.asarray(timestamps, float)

    def __len__(self) -> int:
        return self.inputs.shape[0]

    def row(self, i: int) -> EncodedRow:
        return EncodedRow(*self.inputs[i], self.targets[i])

    def __iter__(self):
        return (self.row(i) for i in range(len(self)))

    def subset(self, indices: Sequence[int]) -> "EncodedDataset":
        idx = np.asarray(indices, dtype=int)
        ts = None if self.timestamps is None else self.timestamps[idx]
        return EncodedDataset(self.inputs[idx], self.targets[idx], ts)


@dataclass(frozen=True)
class SinusoidComponent:
    amplitude: float
    angular_frequency: float  # radians per month
    phase: float


@dataclass(frozen=True)
class SunspotModel:
    """Smooth solar-activity curve: mean level plus a sum of sinusoids.

    Fitted against a monthly-mean series; evaluated at continuous month
    offsets from the series anchor (``base_year``, ``base_month``).
    """

    mean_level: float
    components: tuple[SinusoidComponent, ...]
    residual_rmse: float
    base_year: int = 0
    base_month: int = 1

    def value_at(self, t_months):
        t = np.asarray(t_months, dtype=float)
        out = np.full(t.shape, self.mean_level)
        for c in self.components:
            out = out + c.amplitude * np.sin(c.angular_frequency * t + c.phase)
        return float(out) if out.ndim == 0 else out

    def at_timestamp(self, year: int, daynum: int, hour: int) -> float:
        t = (year - self.base_year + (daynum - 1 + hour / 24.0) / 365.0) * 12.0
        return float(self.value_at(t - (self.base_month - 1)))


def _sinusoid_design(t: np.ndarray, omegas: Sequence[float]) -> np.ndarray:
    cols = [np.ones_like(t)]
    for w in omegas:
        cols.append(np.sin(w * t))
        cols.append(np.cos(w * t))
    return np.column_stack(cols)


def _residual_rmse(t: np.ndarray, values: np.ndarray, omegas: Sequence[float]) -> float:
    design = _sinusoid_design(t, omegas)
    coef, *_ = np.linalg.lstsq(design, values, rcond=None)
    err = values - design @ coef
    return float(math.sqrt(np.sum(err * err) / len(values)))


def fit_sunspot(
    monthly_means: Sequence[float],
    n_components: int = 1,
    base_year: int = 0,
    base_month: int = 1,
) -> SunspotModel:
    """Fit mean + sum-of-sinusoids to a monthly series by least squares.

    Frequencies are chosen greedily: each one by a coarse scan over candidate
    periods (4 months up to twice the series length, which brackets the
    11-year solar cycle) followed by a bounded 1-D refinement; amplitudes and
    phases come from the linear solve, re-fit jointly after every addition so
    the residual can only shrink as components are added.
    """
    values = np.asarray(list(monthly_means), dtype=float)
    n = len(values)
    if n < 24:
        raise DataError(f"need at least 24 monthly samples, got {n}")
    if n_components < 1:
        raise DataError(f"n_components must be >= 1, got {n_components}")
    if n < 1 + 3 * n_components:
        raise DataError(
            f"{n} samples cannot constrain {n_components} components "
            f"({1 + 3 * n_components} free parameters)"
        )
    t = np.arange(n, dtype=float) + 0.5
    chosen: list[float] = []
    periods = np.geomspace(4.0, 2.0 * n, 600)
    for _ in range(n_components):
        grid = 2.0 * math.pi / periods
        scores = [_residual_rmse(t, values, chosen + [w]) for w in grid]
        k = int(np.argmin(scores))
        lo = grid[min(k + 1, len(grid) - 1)]  # grid is descending in omega
        hi = grid[max(k - 1, 0)]
        if lo < hi:
            result = minimize_scalar(
                lambda w: _residual_rmse(t, values, chosen + [w]),
                bounds=(lo, hi),
                method="bounded",
                options={"xatol": 1e-10},
            )
            best_w = float(result.x)
            if _residual_rmse(t, values, chosen + [best_w]) > scores[k]:
                best_w = float(grid[k])
        else:
            best_w = float(grid[k])
        chosen.append(best_w)

    design = _sinusoid_design(t, chosen)
    coef, *_ = np.linalg.lstsq(design, values, rcond=None)
    err = values - design @ coef
    rmse = float(math.sqrt(np.sum(err * err) / n))
    components = []
    for i, w in enumerate(chosen):
        p, q = coef[1 + 2 * i], coef[2 + 2 * i]  # p*sin(wt) + q*cos(wt)
        components.append(
            SinusoidComponent(math.hypot(p, q), w, math.atan2(q, p))
        )
    return SunspotModel(float(coef[0]), tuple(components), rmse, base_year, base_month)


@dataclass(frozen=True)
class SunspotSeries:
    """Monthly-mean solar index values at consecutive months."""

    base_year: int
    base_month: int
    values: tuple[float, ...]


def record_timestamp(record: RawRecord) -> float:
    """Chronological sort key in fractional days."""
    return record.year * 365.0 + (record.daynum - 1) + record.hour / 24.0


def encode_dataset(records: Sequence[RawRecord], ssn_model: SunspotModel) -> EncodedDataset:
    """Encode raw records into the five model inputs plus target.

    The solar index is the fitted smooth curve interpolated at each record's
    timestamp.
    """
    n = len(records)
    inputs = np.empty((n, 5))
    targets = np.empty(n)
    stamps = np.empty(n)
    for i, rec in enumerate(records):
        sh, ch = encode_hour(rec.hour)
        sd, cd = encode_day(rec.daynum)
        inputs[i] = (sh, ch, sd, cd, ssn_model.at_timestamp(rec.year, rec.daynum, rec.hour))
        targets[i] = rec.vtec
        stamps[i] = record_timestamp(rec)
    return EncodedDataset(inputs, targets, stamps)


@dataclass(frozen=True)
class FoldPlan:
    """Contiguous k-fold partition plus the per-cycle 67/33 split helpers."""

    n: int
    boundaries: tuple[int, ...]

    @property
    def k(self) -> int:
        return len(self.boundaries) - 1

    def fold_indices(self, fold: int) -> np.ndarray:
        return np.arange(self.boundaries[fold], self.boundaries[fold + 1])

    def training_indices(self, fold: int) -> np.ndarray:
        parts = [self.fold_indices(f) for f in range(self.k) if f != fold]
        return np.concatenate(parts)


def build_folds(dataset, k: int = 10) -> FoldPlan:
    """Partition a chronologically ordered dataset into k contiguous blocks.

    Block sizes are floor(n/k) or ceil(n/k); the earliest blocks absorb the
    remainder. Rejects datasets shorter than k, and unsorted ones when
    timestamps are available to check.
    """
    n = len(dataset)
    if k < 2:
        raise DataError(f"k must be >= 2, got {k}")
    if n < k:
        raise DataError(f"dataset of {n} rows cannot form {k} folds")
    timestamps = getattr(dataset, "timestamps", None)
    if timestamps is not None:
        ts = np.asarray(timestamps, float)
        if np.any(np.diff(ts) < 0):
            raise DataError("dataset is not chronologically sorted")
    base, rem = divmod(n, k)
    boundaries = [0]
    for f in range(k):
        boundaries.append(boundaries[-1] + base + (1 if f < rem else 0))
    return FoldPlan(n, tuple(boundaries))


def split_training(
    training_indices: Sequence[int], fraction: float = 0.67, rng: Optional[Random] = None
) -> tuple[np.ndarray, np.ndarray]:
    """Random disjoint partition of the training rows into fitness/validation.

    The fitness share is round-half-up of fraction * n. Deterministic for a
    fixed seed; both halves come back sorted.
    """
    if not 0.0 < fraction < 1.0:
        raise DataError(f"fraction must be in (0, 1), got {fraction}")
    if rng is None:
        rng = Random(0)
    indices = list(training_indices)
    n_fit = int(math.floor(fraction * len(indices) + 0.5))
    rng.shuffle(indices)
    fitness = np.array(sorted(indices[:n_fit]), dtype=int)
    validation = np.array(sorted(indices[n_fit:]), dtype=int)
    return fitness, validation


@dataclass(frozen=True)
class SynthConfig:
    """Synthetic hourly vTEC-like dataset parameters.

    The noiseless closed form is
        vtec = base + amplitude * solar(t) * diurnal(hour) * seasonal(daynum)
    with
        diurnal(hour)    = max(0, sin(pi * (hour - 5) / 14))
        seasonal(daynum) = 1 + seasonal_amplitude * cos(2*pi*(daynum - seasonal_peak_day)/365)
        solar(t)         = solar_offset + ssn(t) / solar_scale
        ssn(t)           = ssn_mean + ssn_amplitude * sin(2*pi * t / ssn_period_months + ssn_phase)
    where t is months since the start year. Gaussian noise of ``noise_sigma``
    is added per record and the result is clipped at zero.
    """

    start_year: int = 1998
    end_year: int = 2003
    day_step: int = 1
    hour_step: int = 1
    noise_sigma: float = 2.0
    base: float = 5.0
    amplitude: float = 20.0
    seasonal_amplitude: float = 0.35
    seasonal_peak_day: int = 172
    solar_offset: float = 0.5
    solar_scale: float = 100.0
    ssn_mean: float = 75.0
    ssn_amplitude: float = 65.0
    ssn_period_months: float = 132.0
    ssn_phase: float = 0.0

    def months_since_start(self, year: int, daynum: int, hour: int) -> float:
        return (year - self.start_year + (daynum - 1 + hour / 24.0) / 365.0) * 12.0


def synth_ssn(config: SynthConfig, t_months: float) -> float:
    return config.ssn_mean + config.ssn_amplitude * math.sin(
        2.0 * math.pi * t_months / config.ssn_period_months + config.ssn_phase
    )


def synth_noiseless_vtec(config: SynthConfig, year: int, daynum: int, hour: int) -> float:
    """The documented closed form, before noise and clipping."""
    t = config.months_since_start(year, daynum, hour)
    diurnal = max(0.0, math.sin(math.pi * (hour - 5) / 14.0))
    seasonal = 1.0 + config.seasonal_amplitude * math.cos(
        2.0 * math.pi * (daynum - config.seasonal_peak_day) / 365.0
    )
    solar = config.solar_offset + synth_ssn(config, t) / config.solar_scale
    return config.base + config.amplitude * solar * diurnal * seasonal


def synth_vtec(config: SynthConfig, rng: Random) -> list[RawRecord]:
    """Generate hourly records over the configured year range, in time order."""
    if config.end_year < config.start_year:
        raise DataError("empty date range: end_year precedes start_year")
    if config.day_step < 1 or config.hour_step < 1:
        raise DataError("day_step and hour_step must be >= 1")
    records = []
    for year in range(config.start_year, config.end_year + 1):
        for daynum in range(1, 366, config.day_step):
            for hour in range(0, 24, config.hour_step):
                value = synth_noiseless_vtec(config, year, daynum, hour)
                if config.noise_sigma > 0.0:
                    value += rng.gauss(0.0, config.noise_sigma)
                records.append(RawRecord(year, daynum, hour, max(0.0, value)))
    return records


def synth_ssn_series(config: SynthConfig) -> SunspotSeries:
    """Monthly means of the generator's solar cycle (sampled at mid-month)."""
    n_months = (config.end_year - config.start_year + 1) * 12
    values = tuple(synth_ssn(config, k + 0.5) for k in range(n_months))
    return SunspotSeries(config.start_year, 1, values)


def _format_float(value: float) -> str:
    text = repr(float(value))
    return text[:-2] if text.endswith(".0") else text


def _parse_field(raw: str, kind, name: str, line_no: int):
    try:
        return kind(raw)
    except ValueError:
        raise DataError(f"line {line_no}: field {name!r} is not a {kind.__name__}: {raw!r}")


def load_csv(path) -> list[RawRecord]:
    """Load raw records from `year,daynum,hour,vtec`; day 366 clamps to 365.

    Malformed or out-of-range rows are rejected with their line number.
    """
    records = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != RAW_HEADER:
            raise DataError(f"{path}: expected header {','.join(RAW_HEADER)!r}, got {header}")
        for line_no, fields in enumerate(reader, start=2):
            if not fields:
                continue
            if len(fields) != 4:
                raise DataError(f"line {line_no}: expected 4 fields, got {len(fields)}")
            year = _parse_field(fields[0], int, "year", line_no)
            daynum = _parse_field(fields[1], int, "daynum", line_no)
            hour = _parse_field(fields[2], int, "hour", line_no)
            vtec = _parse_field(fields[3], float, "vtec", line_no)
            if daynum == 366:
                daynum = 365
            if not 1 <= daynum <= 365:
                raise DataError(f"line {line_no}: daynum out of range 1..365: {daynum}")
            if not 0 <= hour <= 23:
                raise DataError(f"line {line_no}: hour out of range 0..23: {hour}")
            if not math.isfinite(vtec) or vtec < 0:
                raise DataError(f"line {line_no}: vtec must be finite and >= 0: {vtec}")
            records.append(RawRecord(year, daynum, hour, vtec))
    return records


def write_csv(records: Iterable[RawRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RAW_HEADER)
        for rec in records:
            writer.writerow([rec.year, rec.daynum, rec.hour, _format_float(rec.vtec)])


def load_ssn_csv(path) -> SunspotSeries:
    """Load `year,month,mean_ssn`; months must be consecutive."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != SSN_HEADER:
            raise DataError(f"{path}: expected header {','.join(SSN_HEADER)!r}, got {header}")
        for line_no, fields in enumerate(reader, start=2):
            if not fields:
                continue
            if len(fields) != 3:
                raise DataError(f"line {line_no}: expected 3 fields, got {len(fields)}")
            year = _parse_field(fields[0], int, "year", line_no)
            month = _parse_field(fields[1], int, "month", line_no)
            mean = _parse_field(fields[2], float, "mean_ssn", line_no)
            if not 1 <= month <= 12:
                raise DataError(f"line {line_no}: month out of range 1..12: {month}")
            rows.append((year, month, mean))
    if not rows:
        raise DataError(f"{path}: empty solar-index series")
    base_year, base_month, _ = rows[0]
    for i, (year, month, _) in enumerate(rows):
        expect = (base_year + (base_month - 1 + i) // 12, (base_month - 1 + i) % 12 + 1)
        if (year, month) != expect:
            raise DataError(
                f"line {i + 2}: months must be consecutive; expected {expect}, got {(year, month)}"
            )
    return SunspotSeries(base_year, base_month, tuple(v for _, _, v in rows))


def write_ssn_csv(series: SunspotSeries, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SSN_HEADER)
        year, month = series.base_year, series.base_month
        for value in series.values:
            writer.writerow([year, month, _format_float(value)])
            month += 1
            if month > 12:
                month, year = 1, year + 1


def load_encoded_csv(path) -> EncodedDataset:
    """Load `sinhour,coshour,sinday,cosday,ssn,vtec`; row order is taken as
    chronological."""
    inputs, targets = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ENCODED_HEADER:
            raise DataError(
                f"{path}: expected header {','.join(ENCODED_HEADER)!r}, got {header}"
            )
        for line_no, fields in enumerate(reader, start=2):
            if not fields:
                continue
            if len(fields) != 6:
                raise DataError(f"line {line_no}: expected 6 fields, got {len(fields)}")
            values = [
                _parse_field(raw, float, name, line_no)
                for raw, name in zip(fields, ENCODED_HEADER)
            ]
            if not all(math.isfinite(v) for v in values):
                raise DataError(f"line {line_no}: non-finite value")
            inputs.append(values[:5])
            targets.append(values[5])
    return EncodedDataset(
        np.array(inputs, float).reshape(len(inputs), 5), np.array(targets, float)
    )


def write_encoded_csv(dataset: EncodedDataset, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(ENCODED_HEADER)
        for i in range(len(dataset)):
            row = list(dataset.inputs[i]) + [dataset.targets[i]]
            writer.writerow([_format_float(v) for v in row])
