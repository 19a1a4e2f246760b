import math
from random import Random

import numpy as np
import pytest

from tecgp.dataio import (
    DataError,
    EncodedDataset,
    RawRecord,
    SynthConfig,
    build_folds,
    encode_day,
    encode_hour,
    encode_dataset,
    fit_sunspot,
    load_csv,
    load_encoded_csv,
    load_ssn_csv,
    split_training,
    synth_noiseless_vtec,
    synth_ssn_series,
    synth_vtec,
    write_csv,
    write_encoded_csv,
    write_ssn_csv,
)


class TestEncodeHour:
    def test_midnight(self):
        assert encode_hour(0) == (0.0, 1.0)

    def test_quarter_period(self):
        sh, ch = encode_hour(6)
        assert abs(sh - 1.0) < 1e-15
        assert abs(ch) < 1e-15

    def test_three_quarter_period(self):
        sh, ch = encode_hour(18)
        assert abs(sh + 1.0) < 1e-15
        assert abs(ch) < 1e-15

    def test_quadrature_identity_all_hours(self):
        for h in range(24):
            sh, ch = encode_hour(h)
            assert abs(sh * sh + ch * ch - 1.0) < 1e-12

    def test_midnight_wrap_symmetric(self):
        # hop 23 -> 0 covers the same phase step as 0 -> 1
        d_wrap = math.dist(encode_hour(23), encode_hour(0))
        d_step = math.dist(encode_hour(0), encode_hour(1))
        assert abs(d_wrap - d_step) < 1e-12

    def test_out_of_range(self):
        for h in (-1, 24):
            with pytest.raises(DataError):
                encode_hour(h)


class TestEncodeDay:
    def test_full_period(self):
        sd, cd = encode_day(365)
        assert abs(sd) < 1e-12
        assert abs(cd - 1.0) < 1e-12

    def test_day_one(self):
        sd, cd = encode_day(1)
        assert abs(sd - math.sin(2 * math.pi / 365)) < 1e-15
        assert abs(cd - math.cos(2 * math.pi / 365)) < 1e-15
        assert abs(sd - 0.017213) < 1e-6
        assert abs(cd - 0.999852) < 1e-6

    def test_year_boundary_continuity(self):
        gap = math.dist(encode_day(365), encode_day(1))
        one_day_phase = 2 * math.pi / 365
        assert abs(gap - 2 * math.sin(one_day_phase / 2)) < 1e-12
        assert gap < 0.0175

    def test_quadrature_identity_all_days(self):
        for d in range(1, 366):
            sd, cd = encode_day(d)
            assert abs(sd * sd + cd * cd - 1.0) < 1e-12

    def test_out_of_range(self):
        for d in (0, 366):
            with pytest.raises(DataError):
                encode_day(d)


class TestFitSunspot:
    def test_recovers_eleven_year_cycle(self):
        t = np.arange(264) + 0.5
        values = 50 + 40 * np.sin(2 * np.pi * t / 132)
        model = fit_sunspot(values, 1)
        comp = model.components[0]
        assert abs(comp.amplitude - 40.0) < 0.5
        assert abs(2 * math.pi / comp.angular_frequency - 132.0) < 1.0
        assert abs(model.mean_level - 50.0) < 0.5

    def test_constant_series(self):
        model = fit_sunspot(np.full(48, 7.0), 1)
        assert model.components[0].amplitude < 1e-8
        assert abs(model.mean_level - 7.0) < 1e-8

    def test_white_noise_barely_explained(self):
        ratios = []
        for seed in range(5):
            noise = np.random.default_rng(seed).normal(0, 3.0, 240)
            model = fit_sunspot(noise, 1)
            ratios.append(model.residual_rmse / noise.std())
        assert all(0.8 <= r <= 1.05 for r in ratios)

    def test_residual_weakly_decreases_with_components(self):
        t = np.arange(200) + 0.5
        values = 20 + 10 * np.sin(2 * np.pi * t / 132) + 4 * np.sin(2 * np.pi * t / 27)
        residuals = [fit_sunspot(values, k).residual_rmse for k in (1, 2, 3)]
        assert residuals[0] >= residuals[1] >= residuals[2] - 1e-12

    def test_too_few_samples_rejected(self):
        with pytest.raises(DataError):
            fit_sunspot(np.ones(23), 1)
        with pytest.raises(DataError):
            fit_sunspot(np.ones(25), 9)  # 28 free parameters


class TestBuildFolds:
    def make_dataset(self, n):
        inputs = np.zeros((n, 5))
        return EncodedDataset(inputs, np.zeros(n), np.arange(n, dtype=float))

    def test_even_split(self):
        plan = build_folds(self.make_dataset(100), 10)
        assert plan.boundaries == tuple(range(0, 101, 10))

    def test_remainder_goes_to_earliest(self):
        plan = build_folds(self.make_dataset(103), 10)
        sizes = [plan.boundaries[i + 1] - plan.boundaries[i] for i in range(10)]
        assert sizes == [11, 11, 11, 10, 10, 10, 10, 10, 10, 10]

    def test_singleton_blocks(self):
        plan = build_folds(self.make_dataset(10), 10)
        assert all(len(plan.fold_indices(f)) == 1 for f in range(10))

    def test_blocks_reconstruct_sequence(self):
        plan = build_folds(self.make_dataset(103), 10)
        joined = np.concatenate([plan.fold_indices(f) for f in range(10)])
        assert np.array_equal(joined, np.arange(103))

    def test_unsorted_rejected(self):
        ds = self.make_dataset(50)
        ds.timestamps[10] = 99.0
        with pytest.raises(DataError, match="sorted"):
            build_folds(ds, 5)

    def test_too_small_rejected(self):
        with pytest.raises(DataError):
            build_folds(self.make_dataset(5), 10)


class TestSplitTraining:
    def test_sizes_67_33(self):
        fit, val = split_training(range(100), 0.67, Random(0))
        assert len(fit) == 67 and len(val) == 33

    def test_rounding_half_up(self):
        fit, val = split_training(range(3), 0.67, Random(0))
        assert len(fit) == 2 and len(val) == 1

    def test_partition(self):
        fit, val = split_training(range(100), 0.67, Random(1))
        assert set(fit) & set(val) == set()
        assert sorted(set(fit) | set(val)) == list(range(100))

    def test_deterministic(self):
        a = split_training(range(50), 0.67, Random(7))
        b = split_training(range(50), 0.67, Random(7))
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])

    def test_bad_fraction(self):
        with pytest.raises(DataError):
            split_training(range(10), 1.0, Random(0))


class TestSynthVtec:
    def test_noon_above_midnight(self):
        cfg = SynthConfig(noise_sigma=0.0)
        noon = synth_noiseless_vtec(cfg, 2000, 100, 12)
        midnight = synth_noiseless_vtec(cfg, 2000, 100, 0)
        assert noon > midnight

    def test_noiseless_regeneration_identical(self):
        cfg = SynthConfig(start_year=1999, end_year=1999, noise_sigma=0.0)
        a = synth_vtec(cfg, Random(4))
        b = synth_vtec(cfg, Random(99))  # rng unused when sigma is 0
        assert a == b

    def test_noise_standard_deviation(self):
        cfg = SynthConfig(start_year=1999, end_year=1999, hour_step=2, noise_sigma=2.0)
        records = synth_vtec(cfg, Random(8))
        deltas = [
            r.vtec - synth_noiseless_vtec(cfg, r.year, r.daynum, r.hour)
            for r in records
            if r.vtec > 0.0  # clipped records would bias the estimate
        ]
        assert len(deltas) > 3000
        sd = float(np.std(deltas))
        assert abs(sd - 2.0) / 2.0 < 0.10

    def test_chronological_order(self):
        cfg = SynthConfig(start_year=1999, end_year=2000, day_step=7, hour_step=3)
        records = synth_vtec(cfg, Random(0))
        stamps = [(r.year, r.daynum, r.hour) for r in records]
        assert stamps == sorted(stamps)

    def test_empty_range_rejected(self):
        with pytest.raises(DataError):
            synth_vtec(SynthConfig(start_year=2001, end_year=2000), Random(0))


class TestRawCsv:
    def test_roundtrip(self, tmp_path):
        cfg = SynthConfig(start_year=1999, end_year=1999, day_step=9, hour_step=2)
        records = synth_vtec(cfg, Random(5))
        assert len(records) == 41 * 12  # 41 sampled days x 12 sampled hours
        path = tmp_path / "raw.csv"
        write_csv(records, path)
        assert load_csv(path) == records

    def test_hour_out_of_range_names_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("year,daynum,hour,vtec\n1999,10,24,5.0\n")
        with pytest.raises(DataError, match="line 2"):
            load_csv(path)

    def test_day_366_clamps(self, tmp_path):
        path = tmp_path / "leap.csv"
        path.write_text("year,daynum,hour,vtec\n2000,366,0,5.0\n")
        assert load_csv(path) == [RawRecord(2000, 365, 0, 5.0)]

    def test_header_only_is_empty(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("year,daynum,hour,vtec\n")
        assert load_csv(path) == []

    def test_missing_column_rejected(self, tmp_path):
        path = tmp_path / "short.csv"
        path.write_text("year,daynum,hour\n1999,10,3\n")
        with pytest.raises(DataError, match="header"):
            load_csv(path)

    def test_unparseable_field_names_line(self, tmp_path):
        path = tmp_path / "garbled.csv"
        path.write_text("year,daynum,hour,vtec\n1999,10,3,5.0\n1999,xx,3,5.0\n")
        with pytest.raises(DataError, match="line 3"):
            load_csv(path)


class TestSsnCsv:
    def test_roundtrip(self, tmp_path):
        series = synth_ssn_series(SynthConfig(start_year=1999, end_year=2001))
        path = tmp_path / "ssn.csv"
        write_ssn_csv(series, path)
        loaded = load_ssn_csv(path)
        assert loaded.base_year == 1999 and loaded.base_month == 1
        assert np.allclose(loaded.values, series.values)

    def test_non_consecutive_months_rejected(self, tmp_path):
        path = tmp_path / "gap.csv"
        path.write_text("year,month,mean_ssn\n1999,1,10\n1999,3,11\n")
        with pytest.raises(DataError, match="consecutive"):
            load_ssn_csv(path)


class TestEncodedCsv:
    def build(self):
        cfg = SynthConfig(start_year=1999, end_year=2001, day_step=30, hour_step=6)
        records = synth_vtec(cfg, Random(2))
        series = synth_ssn_series(cfg)
        model = fit_sunspot(series.values, 1, series.base_year, series.base_month)
        return encode_dataset(records, model)

    def test_roundtrip(self, tmp_path):
        dataset = self.build()
        path = tmp_path / "enc.csv"
        write_encoded_csv(dataset, path)
        loaded = load_encoded_csv(path)
        assert np.array_equal(loaded.inputs, dataset.inputs)
        assert np.array_equal(loaded.targets, dataset.targets)

    def test_quadrature_identities_hold(self):
        dataset = self.build()
        sin2cos2_hour = dataset.inputs[:, 0] ** 2 + dataset.inputs[:, 1] ** 2
        sin2cos2_day = dataset.inputs[:, 2] ** 2 + dataset.inputs[:, 3] ** 2
        assert np.all(np.abs(sin2cos2_hour - 1) < 1e-12)
        assert np.all(np.abs(sin2cos2_day - 1) < 1e-12)

    def test_ssn_tracks_generator_cycle(self):
        # fitted smooth curve interpolated per record stays close to the
        # cycle that produced the monthly means
        cfg = SynthConfig(start_year=1999, end_year=2004, day_step=30, hour_step=6)
        records = synth_vtec(cfg, Random(2))
        series = synth_ssn_series(cfg)
        model = fit_sunspot(series.values, 1, series.base_year, series.base_month)
        dataset = encode_dataset(records, model)
        from tecgp.dataio import synth_ssn

        truth = np.array(
            [synth_ssn(cfg, cfg.months_since_start(r.year, r.daynum, r.hour)) for r in records]
        )
        assert np.max(np.abs(dataset.inputs[:, 4] - truth)) < 1.0
