"""Coherence estimator identities: self-coherence, gain invariance, bias on
independent noise, piecewise integrals, band restriction, and hemispheric
pair enumeration."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eegpipe import coherence as C
from eegpipe import synth
from eegpipe.filters import DEFAULT_BANDS
from eegpipe.recording import LEFT_ELECTRODES, RIGHT_ELECTRODES, Recording

FS = 250.0
N_K64 = 500 + 63 * 250   # exactly 64 Hann segments at 2 s / 50%


def noise(n, seed):
    return np.random.default_rng(seed).standard_normal(n)


class TestWelch:
    def test_self_spectra_equal_and_cross_real(self):
        u = noise(N_K64, 0)
        est = C.welch_spectra(u, u, FS)
        assert est.segments == 64
        np.testing.assert_array_equal(est.psd_u, est.psd_v)
        np.testing.assert_allclose(est.cross.imag, 0.0, atol=1e-12)
        np.testing.assert_allclose(est.cross.real, est.psd_u, rtol=1e-12)

    def test_sinusoid_peak_bin(self):
        t = np.arange(N_K64) / FS
        x = np.sin(2 * np.pi * 10.0 * t)
        est = C.welch_spectra(x, x, FS)
        assert est.freqs[np.argmax(est.psd_u)] == pytest.approx(10.0)

    def test_too_few_segments(self):
        with pytest.raises(ValueError, match="segment"):
            C.welch_spectra(np.zeros(300), np.zeros(300), FS, seg_s=2.0)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            C.welch_spectra(np.zeros(1000), np.zeros(999), FS)

    def test_bad_overlap(self):
        with pytest.raises(ValueError):
            C.welch_spectra(np.zeros(1000), np.zeros(1000), FS, overlap=1.0)


class TestMsc:
    def test_self_coherence_is_one(self):
        u = noise(N_K64, 1)
        c2, valid = C.msc(C.welch_spectra(u, u, FS))
        assert np.abs(c2[valid] - 1.0).max() <= 1e-9

    def test_gain_invariance(self):
        u = noise(N_K64, 2)
        v = noise(N_K64, 3) + 0.5 * u
        base, _ = C.msc(C.welch_spectra(u, v, FS))
        scaled, _ = C.msc(C.welch_spectra(2.5 * u, -7.0 * v, FS))
        np.testing.assert_allclose(scaled, base, atol=1e-9)

    def test_independent_noise_bias(self):
        c2, valid = C.msc(C.welch_spectra(noise(N_K64, 4), noise(N_K64, 5), FS))
        assert c2[valid].mean() <= 0.05

    def test_symmetry_bit_for_bit_on_same_estimate(self):
        u, v = noise(N_K64, 6), noise(N_K64, 7)
        est = C.welch_spectra(u, v, FS)
        swapped = C.SpectralEstimate(freqs=est.freqs, psd_u=est.psd_v,
                                     psd_v=est.psd_u, cross=np.conj(est.cross),
                                     segments=est.segments)
        np.testing.assert_array_equal(C.msc(est)[0], C.msc(swapped)[0])

    def test_symmetry_across_estimates(self):
        # separate estimates agree to float precision (FMA reorders the
        # complex product, so bitwise equality is not guaranteed here)
        u, v = noise(N_K64, 6), noise(N_K64, 7)
        np.testing.assert_allclose(C.msc(C.welch_spectra(u, v, FS))[0],
                                   C.msc(C.welch_spectra(v, u, FS))[0],
                                   atol=1e-12)

    def test_zero_power_rejected(self):
        with pytest.raises(ValueError, match="zero power"):
            C.msc(C.welch_spectra(np.zeros(2000), np.zeros(2000), FS))

    def test_bounds_after_clamp(self):
        for seed in range(5):
            c2, valid = C.msc(C.welch_spectra(noise(3000, seed),
                                              noise(3000, seed + 50), FS))
            assert c2.min() >= 0.0 and c2.max() <= 1.0

    @settings(max_examples=15, deadline=None)
    @given(st.floats(0.1, 10.0), st.floats(0.1, 10.0), st.integers(0, 2 ** 31))
    def test_gain_invariance_property(self, a, b, seed):
        u = noise(3000, seed)
        v = noise(3000, seed + 1) + u
        base, _ = C.msc(C.welch_spectra(u, v, FS))
        scaled, _ = C.msc(C.welch_spectra(a * u, b * v, FS))
        np.testing.assert_allclose(scaled, base, atol=1e-9)


class TestIntegratedCoherence:
    def test_all_ones_integrates_to_one(self):
        freqs = np.linspace(0.0, 125.0, 257)
        assert C.integrated_coherence(np.ones(257), freqs) == pytest.approx(1.0)

    def test_all_zeros_integrates_to_zero(self):
        freqs = np.linspace(0.0, 125.0, 257)
        assert C.integrated_coherence(np.zeros(257), freqs) == 0.0

    def test_half_band_is_half(self):
        # 200 points, 199 intervals; ones on the first 100 points make the
        # trapezoid area d*(99 + 0.5) over an extent of d*199, exactly 0.5
        freqs = np.arange(200.0)
        c2 = np.zeros(200)
        c2[:100] = 1.0
        assert C.integrated_coherence(c2, freqs) == pytest.approx(0.5, abs=1e-12)

    def test_no_valid_bins_rejected(self):
        with pytest.raises(ValueError):
            C.integrated_coherence(np.ones(5), np.arange(5.0), np.zeros(5, bool))

    def test_masked_runs_are_respected(self):
        freqs = np.arange(10.0)
        c2 = np.ones(10)
        valid = np.ones(10, bool)
        valid[4:6] = False   # two runs: [0..3] and [6..9]
        assert C.integrated_coherence(c2, freqs, valid) == pytest.approx(1.0)


class TestBandCoherence:
    def test_uniform_coherence_per_band(self):
        freqs = np.linspace(0.0, 125.0, 501)
        out = C.band_coherence(np.ones(501), freqs)
        assert set(out) == {b.name for b in DEFAULT_BANDS}
        for value in out.values():
            assert value == pytest.approx(1.0)

    def test_coherent_alpha_tone_maximizes_alpha(self):
        rng = np.random.default_rng(8)
        t = np.arange(N_K64) / FS
        shared = np.sin(2 * np.pi * 10.0 * t)
        u = shared + 0.5 * rng.standard_normal(N_K64)
        v = shared + 0.5 * rng.standard_normal(N_K64)
        est = C.welch_spectra(u, v, FS)
        c2, valid = C.msc(est)
        out = C.band_coherence(c2, est.freqs, valid=valid)
        assert max(out, key=out.get) == "alpha"

    def test_band_outside_grid_rejected(self):
        from eegpipe.filters import BandSpec
        with pytest.raises(ValueError, match="no"):
            C.band_coherence(np.ones(10), np.linspace(0, 5, 10),
                             bands=(BandSpec("gamma", 30.0, 100.0),))


def hemisphere_recording(per_channel, fs=FS):
    labels = LEFT_ELECTRODES + RIGHT_ELECTRODES
    data = np.vstack([per_channel(label) for label in labels])
    return Recording(data=data, fs=fs, labels=labels)


class TestHemisphericScores:
    def test_identical_left_channels_score_one(self):
        shared = noise(5000, 9)
        rng = np.random.default_rng(10)

        def channel(label):
            return shared if label in LEFT_ELECTRODES else rng.standard_normal(5000)

        left, right = C.hemispheric_scores(hemisphere_recording(channel))
        assert left == pytest.approx(1.0, abs=1e-9)
        assert right < 0.3

    def test_independent_channels_score_low(self):
        rng = np.random.default_rng(11)
        rec = hemisphere_recording(lambda label: rng.standard_normal(N_K64))
        left, right = C.hemispheric_scores(rec)
        assert left <= 0.05 and right <= 0.05

    def test_exactly_ten_pairs_per_side(self):
        rng = np.random.default_rng(12)
        rec = hemisphere_recording(lambda label: rng.standard_normal(3000))
        report = C.coherence_report(rec)
        left_pairs = [(p.electrode_i, p.electrode_j) for p in report.pairs
                      if p.electrode_i in LEFT_ELECTRODES]
        right_pairs = [(p.electrode_i, p.electrode_j) for p in report.pairs
                       if p.electrode_i in RIGHT_ELECTRODES]
        assert len(left_pairs) == 10 and len(right_pairs) == 10
        assert left_pairs == list(itertools.combinations(LEFT_ELECTRODES, 2))
        assert right_pairs == list(itertools.combinations(RIGHT_ELECTRODES, 2))

    def test_missing_electrode_rejected(self):
        rec = Recording(data=np.zeros((2, 100)), fs=FS, labels=("F7", "F8"))
        with pytest.raises(KeyError):
            C.hemispheric_scores(rec)


class TestMixingMonotonicity:
    def test_integrated_coherence_increases_with_lambda(self):
        values = []
        for lam in (0.0, 0.25, 0.5, 0.75, 1.0):
            u, v = synth.gen_coherent_pair(lam, FS, N_K64 / FS, seed=99)
            est = C.welch_spectra(u, v, FS)
            c2, valid = C.msc(est)
            values.append(C.integrated_coherence(c2, est.freqs, valid))
        assert all(a < b for a, b in zip(values, values[1:]))
        assert values[0] <= 0.05
        assert values[-1] >= 0.9


def test_report_csv_layout(tmp_path):
    rng = np.random.default_rng(13)
    rec = hemisphere_recording(lambda label: rng.standard_normal(3000))
    report = C.coherence_report(rec)
    path = tmp_path / "coh.csv"
    C.save_csv(report, path)
    lines = path.read_text().strip().split("\n")
    assert lines[0] == ("electrode_i,electrode_j,p,p_delta,p_theta,"
                        "p_alpha,p_beta,p_gamma")
    assert len(lines) == 1 + 20 + 2
    assert lines[-2].startswith("left_hemisphere,,")
    assert lines[-1].startswith("right_hemisphere,,")
