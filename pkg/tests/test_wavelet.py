"""Scale grid, Morlet transform localization, max-pool downsampling, baseline
referencing, and graymap export."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eegpipe import wavelet as W


def tone(freq, fs, seconds):
    t = np.arange(int(seconds * fs)) / fs
    return np.sin(2 * np.pi * freq * t)


class TestScaleGrid:
    def test_grid_spans_nyquist_down_to_fraction(self):
        grid = W.scale_grid(250.0, 150)
        assert grid[0] == 2.0 and grid[-1] == 300.0
        assert W.scale_to_freq(grid[0], 250.0) == pytest.approx(125.0)
        assert W.scale_to_freq(grid[-1], 250.0) == pytest.approx(0.8333, abs=5e-4)

    def test_single_scale(self):
        grid = W.scale_grid(250.0, 1)
        assert list(grid) == [2.0]
        assert W.scale_to_freq(grid[0], 250.0) == 125.0

    def test_other_rate(self):
        grid = W.scale_grid(500.0, 150)
        assert W.scale_to_freq(grid[0], 500.0) == pytest.approx(250.0)
        assert W.scale_to_freq(grid[-1], 500.0) == pytest.approx(5.0 / 3.0)

    def test_scale_to_freq_substitutions(self):
        assert W.scale_to_freq(25.0, 250.0) == pytest.approx(10.0)
        assert W.scale_to_freq(2.0, 250.0) == pytest.approx(125.0)
        assert W.scale_to_freq(50.0, 250.0, W.MorletParams(f_c=2.0)) == pytest.approx(10.0)

    def test_rejects_bad_args(self):
        with pytest.raises(ValueError):
            W.scale_grid(250.0, 0)
        with pytest.raises(ValueError):
            W.scale_to_freq(0.0, 250.0)


class TestCwt:
    def test_pure_tone_peak_scale(self):
        fs = 250.0
        sg = W.cwt(tone(10.0, fs, 20.0), fs)
        peak = W.scale_to_freq(sg.scales[sg.values.mean(axis=1).argmax()], fs)
        assert 9.0 <= peak <= 11.0

    def test_zero_signal_zero_scalogram(self):
        sg = W.cwt(np.zeros(2000), 250.0)
        np.testing.assert_allclose(sg.values, 0.0, atol=1e-20)

    def test_two_tone_separation(self):
        fs = 250.0
        sg = W.cwt(tone(5.0, fs, 20.0) + tone(40.0, fs, 20.0), fs)
        mean = sg.values.mean(axis=1)
        local_max = [i for i in range(1, len(mean) - 1)
                     if mean[i] > mean[i - 1] and mean[i] > mean[i + 1]]
        peaks = sorted(W.scale_to_freq(sg.scales[i], fs) for i in local_max)
        assert any(abs(p - 5.0) <= 0.5 for p in peaks)
        assert any(abs(p - 40.0) <= 4.0 for p in peaks)

    @pytest.mark.parametrize("freq", [2.0, 5.0, 10.0, 25.0, 40.0])
    def test_localization_tolerance(self, freq):
        fs = 250.0
        sg = W.cwt(tone(freq, fs, 20.0), fs)
        peak = W.scale_to_freq(sg.scales[sg.values.mean(axis=1).argmax()], fs)
        assert abs(peak - freq) <= max(0.5, 0.1 * freq)

    def test_power_scales_quadratically(self):
        fs = 250.0
        x = np.random.default_rng(0).standard_normal(1500)
        scales = W.scale_grid(fs, 30)
        base = W.cwt(x, fs, scales)
        scaled = W.cwt(3.0 * x, fs, scales)
        np.testing.assert_allclose(scaled.values, 9.0 * base.values, rtol=1e-9)

    def test_translation_covariance(self):
        fs = 250.0
        rng = np.random.default_rng(1)
        x = rng.standard_normal(4000)
        shift = 500
        scales = W.scale_grid(fs, 40)   # keep supports well inside the series
        sg = W.cwt(x, fs, scales)
        sg_shift = W.cwt(np.roll(x, shift), fs, scales)
        # compare interior columns beyond every kernel's support
        margin = shift + 1200
        np.testing.assert_allclose(sg_shift.values[:, margin:-margin],
                                   sg.values[:, margin - shift:-margin - shift],
                                   rtol=1e-6)

    def test_oversized_scale_rejected(self):
        with pytest.raises(ValueError, match="support"):
            W.cwt(np.zeros(300), 250.0, np.array([200.0]))

    def test_empty_series_rejected(self):
        with pytest.raises(ValueError):
            W.cwt(np.array([]), 250.0)

    def test_coi_metadata_grows_with_scale(self):
        sg = W.cwt(np.zeros(2000), 250.0, W.scale_grid(250.0, 20))
        assert sg.coi_s is not None
        assert (np.diff(sg.coi_s) > 0).all()


class TestDownsampleMax:
    def test_shape_150_by_150(self):
        sg = W.Scalogram("C3", W.scale_grid(250.0, 150), np.arange(45000) / 250.0,
                         np.random.default_rng(2).random((150, 45000)), 250.0,
                         W.DEFAULT_MORLET)
        out = W.downsample_max(sg, 150)
        assert out.values.shape == (150, 150)

    def test_identity_when_target_equals_columns(self):
        values = np.random.default_rng(3).random((4, 10))
        sg = W.Scalogram("C3", np.array([2.0, 4.0, 6.0, 8.0]), np.arange(10.0),
                         values, 250.0, W.DEFAULT_MORLET)
        out = W.downsample_max(sg, 10)
        np.testing.assert_array_equal(out.values, values)

    def test_constant_matrix_stays_constant(self):
        sg = W.Scalogram("C3", np.array([2.0, 4.0]), np.arange(100.0),
                         np.full((2, 100), 7.5), 250.0, W.DEFAULT_MORLET)
        out = W.downsample_max(sg, 7)
        np.testing.assert_array_equal(out.values, np.full((2, 7), 7.5))

    def test_zero_target_rejected(self):
        sg = W.Scalogram("C3", np.array([2.0]), np.arange(10.0),
                         np.zeros((1, 10)), 250.0, W.DEFAULT_MORLET)
        with pytest.raises(ValueError):
            W.downsample_max(sg, 0)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(1, 60), st.integers(0, 2 ** 32 - 1))
    def test_maxpool_soundness(self, target, seed):
        rng = np.random.default_rng(seed)
        values = rng.random((3, 60))
        sg = W.Scalogram("C3", np.array([2.0, 4.0, 6.0]), np.arange(60.0),
                         values, 250.0, W.DEFAULT_MORLET)
        out = W.downsample_max(sg, target)
        assert out.values.max() == values.max()
        assert out.values.min() >= values.min()


class TestBaselineReference:
    def _sg(self, values):
        values = np.asarray(values, dtype=np.float64)
        return W.Scalogram("C3", 2.0 * np.arange(1, values.shape[0] + 1),
                           np.arange(values.shape[1], dtype=float), values,
                           250.0, W.DEFAULT_MORLET)

    def test_self_reference_is_zero(self):
        base = self._sg(np.random.default_rng(4).random((3, 50)))
        means = base.values.mean(axis=1, keepdims=True)
        task = self._sg(np.repeat(means, 20, axis=1))
        out = W.baseline_reference(task, base)
        np.testing.assert_allclose(out.values, 0.0, atol=1e-12)
        assert out.referenced

    def test_zero_baseline_leaves_values(self):
        task = self._sg(np.random.default_rng(5).random((3, 20)))
        base = self._sg(np.zeros((3, 40)))
        out = W.baseline_reference(task, base)
        np.testing.assert_array_equal(out.values, task.values)

    def test_constant_rows_shift_by_baseline_mean(self):
        task = self._sg(np.full((2, 10), 5.0))
        base = self._sg(np.vstack([np.full(30, 2.0), np.full(30, 7.0)]))
        out = W.baseline_reference(task, base)
        np.testing.assert_allclose(out.values[0], 3.0)
        np.testing.assert_allclose(out.values[1], -2.0)

    def test_grid_mismatch_rejected(self):
        task = self._sg(np.zeros((2, 10)))
        base = self._sg(np.zeros((3, 10)))
        with pytest.raises(ValueError, match="grid"):
            W.baseline_reference(task, base)

    def test_referenced_baseline_rejected(self):
        task = self._sg(np.zeros((2, 10)))
        base = self._sg(np.zeros((2, 10)))
        base.referenced = True
        with pytest.raises(ValueError, match="referenced"):
            W.baseline_reference(task, base)


def read_pgm(path):
    with open(path, "rb") as fh:
        assert fh.readline().strip() == b"P5"
        width, height = map(int, fh.readline().split())
        maxval = int(fh.readline())
        data = np.frombuffer(fh.read(), dtype=np.uint8).reshape(height, width)
    return maxval, data


class TestExportImage:
    def _sg(self, values):
        values = np.asarray(values, dtype=np.float64)
        return W.Scalogram("C3", 2.0 * np.arange(1, values.shape[0] + 1),
                           np.arange(values.shape[1], dtype=float), values,
                           250.0, W.DEFAULT_MORLET)

    def test_endpoints_map_to_0_and_255(self, tmp_path):
        path = tmp_path / "img.pgm"
        W.export_image(self._sg([[0.0, 1.0]]), path)
        maxval, data = read_pgm(path)
        assert maxval == 255
        assert data.tolist() == [[0, 255]]

    def test_constant_matrix_maps_to_zero(self, tmp_path):
        path = tmp_path / "img.pgm"
        W.export_image(self._sg(np.full((3, 4), 9.9)), path)
        _, data = read_pgm(path)
        assert (data == 0).all()

    def test_shape_preserved(self, tmp_path):
        path = tmp_path / "img.pgm"
        W.export_image(self._sg(np.random.default_rng(6).random((150, 150))), path)
        _, data = read_pgm(path)
        assert data.shape == (150, 150)

    def test_non_finite_rejected(self, tmp_path):
        sg = self._sg(np.array([[np.nan, 1.0]]))
        with pytest.raises(ValueError):
            W.export_image(sg, tmp_path / "img.pgm")


def test_csv_export_round_trips_values(tmp_path):
    sg = W.cwt(np.random.default_rng(7).standard_normal(500), 250.0,
               W.scale_grid(250.0, 10))
    path = tmp_path / "sg.csv"
    W.save_csv(sg, path)
    lines = path.read_text().strip().split("\n")
    assert lines[0].startswith("scale,")
    parsed = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
    np.testing.assert_array_equal(parsed[:, 0], sg.scales)
    np.testing.assert_array_equal(parsed[:, 1:], sg.values)
