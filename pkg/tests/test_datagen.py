import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import optimize

from distlearn.datagen import (
    CsvFormatError,
    SequenceDataset,
    delay_buffers,
    extpoly_coefficients,
    extpoly_response,
    gen_extpoly,
    gen_lorenz,
    gen_mackey_glass,
    gen_narma10,
    gen_saf_streams,
    gen_sequences,
    gen_two_gaussian,
    gen_two_moons,
    load_csv,
    load_metadata,
    load_sequences,
    lorenz_rhs,
    mackey_glass_series,
    narma10_response,
    normalize_range,
    partition,
    save_csv,
    save_sequences,
    split_counts,
    two_gaussian_mean,
    vertical_hidden_budget,
)
from distlearn.netgraph import gen_complete


class TestNarma:
    def test_zero_input_settles_at_fixed_point(self):
        fixed = optimize.brentq(lambda d: 0.1 + 0.3 * d + 0.05 * d**11 - d, 0.0, 0.5)
        d = narma10_response(np.zeros(300))
        assert d[-1] == pytest.approx(fixed, abs=1e-12)
        assert fixed == pytest.approx(0.142857, abs=1e-5)

    def test_single_pulse_uses_lag_nine(self):
        # only x[n] x[n-9] enters the input term
        x = np.zeros(40)
        x[15] = x[24] = 1.0
        d = narma10_response(x)
        base = narma10_response(np.zeros(40))
        assert np.array_equal(d[:24], base[:24])
        assert d[24] == pytest.approx(base[24] + 1.5)

    def test_squashed_range_and_shape(self):
        x, d = gen_narma10(500, seed=3)
        assert x.shape == (500, 1) and d.shape == (500,)
        assert np.all(np.abs(d) < 1)
        assert np.all((x >= 0) & (x <= 0.5))

    def test_divergence_reported(self):
        assert narma10_response(np.full(200, 5.0)) is None

    def test_short_length_rejected(self):
        with pytest.raises(ValueError):
            gen_narma10(10, seed=0)


class TestExtPoly:
    @given(st.integers(0, 9))
    def test_term_count(self, p):
        a = extpoly_coefficients(p, np.random.default_rng(0))
        assert np.count_nonzero(a) == (p + 1) * (p + 2) // 2

    def test_degree_zero_is_constant(self):
        a = extpoly_coefficients(0, np.random.default_rng(1))
        out = extpoly_response(np.linspace(-1, 1, 9), a, 3)
        np.testing.assert_allclose(out, a[0, 0])

    def test_degree_one_no_lag_by_hand(self):
        a = np.array([[0.2, -0.5], [0.7, 0.0]])
        x = np.array([0.3, -0.8, 1.0])
        # a00 + a01 x + a10 x with the delayed copy equal to x itself
        np.testing.assert_allclose(extpoly_response(x, a, 0), 0.2 - 0.5 * x + 0.7 * x)

    def test_lag_uses_zero_history(self):
        a = np.array([[0.0, 1.0], [0.0, 0.0]])
        x = np.array([0.5, 0.25, -1.0, 0.75])
        np.testing.assert_allclose(extpoly_response(x, a, 2), [0.0, 0.0, 0.5, 0.25])

    def test_output_squashed(self):
        x, d = gen_extpoly(300, seed=2)
        assert np.all(np.abs(d) < 1) and np.all(np.abs(x) <= 1)

    def test_negative_order_rejected(self):
        with pytest.raises(ValueError):
            gen_extpoly(10, seed=0, p=-1)


class TestMackeyGlass:
    def test_equilibrium_history_persists(self):
        series = mackey_glass_series(50, history=1.0)
        np.testing.assert_allclose(series, 1.0, atol=1e-12)

    def test_short_delay_settles(self):
        series = mackey_glass_series(2000, tau=5.0)
        peaks = series[1:-1][(series[1:-1] > series[:-2]) & (series[1:-1] > series[2:])]
        quarter = len(peaks) // 4
        assert np.ptp(peaks[-quarter:]) < 0.2 * np.ptp(peaks[:quarter])

    def test_bounded_for_standard_start(self):
        series = mackey_glass_series(2000)
        assert series.min() > 0 and series.max() < 1.5

    def test_target_is_ten_steps_ahead(self):
        x, d = gen_mackey_glass(200, seed=4)
        np.testing.assert_array_equal(d[:-10], x[10:, 0])


class TestLorenz:
    def test_origin_is_fixed(self):
        x, d = gen_lorenz(20, seed=0, initial=(0.0, 0.0, 0.0))
        assert np.all(x == 0) and np.all(d == 0)

    def test_parameters(self):
        assert lorenz_rhs(0, [1.0, 0.0, 0.0]) == [-10.0, 28.0, 0.0]
        assert lorenz_rhs(0, [0.0, 0.0, 3.0])[2] == pytest.approx(-8.0)

    def test_visits_both_lobes(self):
        x, d = gen_lorenz(2000, seed=5)
        assert np.count_nonzero(np.diff(np.sign(x[:, 0]))) > 10
        np.testing.assert_array_equal(d[:-1], x[1:, 0])


class TestTwoGaussian:
    def test_bayes_error_by_monte_carlo(self):
        data = gen_two_gaussian(10_000, 5, seed=6, bayes_error=0.05)
        pred = (data.x[:, 0] > 0).astype(int)
        assert abs(np.mean(pred != data.y) - 0.05) < 0.007

    def test_mean_from_quantile(self):
        mu = two_gaussian_mean(0.05)
        assert 0.5 * math.erfc(mu / math.sqrt(2)) == pytest.approx(0.05)

    def test_large_separation_is_error_free(self):
        data = gen_two_gaussian(2000, 3, seed=7, separation=40.0)
        assert np.all((data.x[:, 0] > 0) == (data.y == 1))

    def test_balanced_labels(self):
        data = gen_two_gaussian(4000, 3, seed=8)
        assert abs(data.y.mean() - 0.5) < 3 * 0.5 / math.sqrt(4000)

    def test_spread_direction(self):
        data = gen_two_gaussian(20_000, 4, seed=9, separation=4.0, spread=True)
        diff = data.x[data.y == 1].mean(axis=0) - data.x[data.y == 0].mean(axis=0)
        np.testing.assert_allclose(diff, 2.0, atol=0.1)

    def test_dimension_checked(self):
        with pytest.raises(ValueError):
            gen_two_gaussian(10, 1, seed=0)

    def test_two_moons_shape(self):
        data = gen_two_moons(101, seed=0)
        assert data.x.shape == (101, 2)
        assert set(np.unique(data.y)) == {0, 1}


class TestSafStreams:
    def test_white_input_has_unit_variance(self):
        xs, _, truth = gen_saf_streams(2, 20_000, 4, seed=10, a_range=(0.0, 0.0))
        for x in xs:
            assert abs(x.var() - 1) < 0.05
            assert abs(np.corrcoef(x[1:], x[:-1])[0, 1]) < 0.03

    def test_correlated_input_keeps_unit_variance(self):
        xs, _, truth = gen_saf_streams(3, 20_000, 4, seed=11)
        for x, a in zip(xs, truth.correlation):
            assert abs(x.var() - 1) < 0.1
            assert np.corrcoef(x[1:], x[:-1])[0, 1] == pytest.approx(a, abs=0.05)

    def test_parameter_ranges(self):
        _, _, truth = gen_saf_streams(30, 10, 5, seed=12)
        assert np.all((truth.correlation >= 0) & (truth.correlation <= 0.8))
        assert np.all((truth.noise_var >= 10**-2.5) & (truth.noise_var <= 10**-1))
        assert np.linalg.norm(truth.w0) == pytest.approx(1.0)

    def test_noiseless_output_follows_model(self):
        xs, ds, truth = gen_saf_streams(1, 200, 3, seed=13, noise_db=(-300.0, -300.0))
        np.testing.assert_allclose(ds[0], truth.f0(delay_buffers(xs[0], 3) @ truth.w0), atol=1e-12)

    def test_delay_buffers(self):
        buf = delay_buffers(np.array([1.0, 2.0, 3.0]), 2)
        np.testing.assert_array_equal(buf, [[1, 0], [2, 1], [3, 2]])


class TestPartition:
    def test_remainder_goes_first(self):
        assert [len(s) for s in partition(10, 3)] == [4, 3, 3]
        assert split_counts(10, 3) == [4, 3, 3]

    @given(st.integers(1, 12), st.integers(0, 40), st.sampled_from(["horizontal", "vertical"]), st.integers(0, 99))
    def test_disjoint_cover(self, agents, extra, mode, seed):
        n = agents + extra
        shards = partition(n, agents, mode, seed)
        joined = np.concatenate(shards)
        assert len(joined) == n
        assert np.array_equal(np.sort(joined), np.arange(n))

    def test_vertical_keeps_order(self):
        shards = partition(7, 3, "vertical", seed=5)
        assert np.array_equal(np.concatenate(shards), np.arange(7))

    def test_accepts_network(self):
        assert len(partition(9, gen_complete(3))) == 3

    def test_errors(self):
        with pytest.raises(ValueError):
            partition(2, 3)
        with pytest.raises(ValueError):
            partition(6, 3, "diagonal")

    def test_hidden_budget(self):
        assert vertical_hidden_budget(100, 8) == 13


class TestNormalize:
    @given(st.integers(0, 10_000))
    def test_min_max_mapping(self, seed):
        x = np.random.default_rng(seed).normal(size=(15, 3)) * 10
        out = normalize_range(x)
        np.testing.assert_allclose(out.min(axis=0), -1.0)
        np.testing.assert_allclose(out.max(axis=0), 1.0)

    def test_constant_feature_maps_to_zero(self):
        x = np.column_stack([np.full(4, 3.0), np.arange(4.0)])
        out = normalize_range(x)
        np.testing.assert_array_equal(out[:, 0], 0.0)

    def test_reference_ranges(self):
        ref = np.array([[0.0], [10.0]])
        np.testing.assert_allclose(normalize_range(np.array([[5.0], [20.0]]), ref), [[0.0], [3.0]])


class TestDeterminism:
    @pytest.mark.parametrize("name", ["narma10", "extpoly", "mackey_glass", "lorenz"])
    def test_sequences_repeat_bitwise(self, name):
        a = gen_sequences(name, 2, 60, seed=3)
        b = gen_sequences(name, 2, 60, seed=3)
        for (xa, da), (xb, db) in zip(a.sequences, b.sequences):
            assert np.array_equal(xa, xb) and np.array_equal(da, db)

    def test_tabular_repeat_bitwise(self):
        assert np.array_equal(gen_two_gaussian(50, 4, 1).x, gen_two_gaussian(50, 4, 1).x)
        assert np.array_equal(gen_two_moons(50, 1).x, gen_two_moons(50, 1).x)

    def test_extpoly_sequences_share_polynomial(self):
        data = gen_sequences("extpoly", 3, 50, seed=4, p=0, lag=1)
        # with p=0 each raw target is the same constant, so the shared squash maps it to zero
        for _, d in data.sequences:
            np.testing.assert_allclose(d, 0.0, atol=1e-12)


class TestCsv:
    def test_round_trip(self, tmp_path, rng):
        table = rng.normal(size=(20, 3)) * 1e3
        path = tmp_path / "t.csv"
        save_csv(path, ["a", "b", "c"], table, {"generator": "test", "seed": 1})
        header, back = load_csv(path)
        assert header == ["a", "b", "c"]
        np.testing.assert_allclose(back, table, rtol=1e-12)
        assert load_metadata(path) == {"generator": "test", "seed": "1"}

    def test_empty_file(self, tmp_path):
        path = tmp_path / "e.csv"
        path.write_text("")
        with pytest.raises(CsvFormatError, match="empty"):
            load_csv(path)

    def test_width_mismatch_names_line(self, tmp_path):
        path = tmp_path / "w.csv"
        path.write_text("a,b\n1,2\n3\n")
        with pytest.raises(CsvFormatError, match="line 3"):
            load_csv(path)

    def test_non_numeric_names_line(self, tmp_path):
        path = tmp_path / "n.csv"
        path.write_text("a\n1\nfoo\n")
        with pytest.raises(CsvFormatError, match="line 3"):
            load_csv(path)

    def test_header_width_checked_on_save(self, tmp_path):
        with pytest.raises(CsvFormatError):
            save_csv(tmp_path / "x.csv", ["a"], np.ones((2, 2)))

    def test_sequence_round_trip(self, tmp_path):
        data = gen_sequences("lorenz", 2, 30, seed=5)
        path = tmp_path / "s.csv"
        save_sequences(path, data)
        back = load_sequences(path)
        assert isinstance(back, SequenceDataset)
        assert back.metadata["generator"] == "lorenz"
        for (xa, da), (xb, db) in zip(data.sequences, back.sequences):
            np.testing.assert_allclose(xb, xa, rtol=1e-12)
            np.testing.assert_allclose(db, da, rtol=1e-12)

    def test_sequence_columns_checked(self, tmp_path):
        path = tmp_path / "bad.csv"
        save_csv(path, ["x", "y"], np.ones((2, 2)))
        with pytest.raises(CsvFormatError):
            load_sequences(path)
