"""Cohort generator: power targeting, coherence mixing, determinism, score
model, and group separability knobs."""

import numpy as np
import pytest

from eegpipe import bandpower as BP
from eegpipe import coherence as C
from eegpipe import synth as S
from eegpipe.filters import DEFAULT_BANDS
from eegpipe.recording import extract_epoch

FS = 250.0


class TestGenBandSignal:
    def test_zero_powers_zero_series(self):
        x = S.gen_band_signal({b.name: 0.0 for b in DEFAULT_BANDS}, FS, 5.0, 0)
        np.testing.assert_array_equal(x, np.zeros(int(5 * FS)))

    def test_alpha_power_round_trip(self):
        x = S.gen_band_signal({"alpha": 100.0}, FS, 180.0, 11)
        m = BP.power_matrix(DEFAULT_BANDS, x, 5.0, 2.0, FS)
        row_means = m.values.mean(axis=1)
        assert row_means[2] == pytest.approx(100.0, rel=0.10)
        assert np.delete(row_means, 2).max() <= 5.0

    def test_same_seed_same_series(self):
        a = S.gen_band_signal({"theta": 30.0}, FS, 5.0, 123)
        b = S.gen_band_signal({"theta": 30.0}, FS, 5.0, 123)
        np.testing.assert_array_equal(a, b)

    def test_short_duration_rejected(self):
        with pytest.raises(ValueError):
            S.gen_band_signal({"alpha": 1.0}, FS, 0.5, 0)


class TestGenCoherentPair:
    def _integrated(self, lam, seed=5):
        u, v = S.gen_coherent_pair(lam, FS, 66.0, seed)
        est = C.welch_spectra(u, v, FS)
        c2, valid = C.msc(est)
        return C.integrated_coherence(c2, est.freqs, valid)

    def test_unmixed_pair_is_incoherent(self):
        assert self._integrated(0.0) <= 0.05

    def test_fully_mixed_pair_is_coherent(self):
        assert self._integrated(1.0) >= 0.9

    def test_echo_is_perfectly_coherent(self):
        u, _ = S.gen_coherent_pair(0.3, FS, 66.0, 6)
        est = C.welch_spectra(u, u, FS)
        c2, valid = C.msc(est)
        assert C.integrated_coherence(c2, est.freqs, valid) == pytest.approx(1.0,
                                                                             abs=1e-9)

    def test_lambda_out_of_range(self):
        with pytest.raises(ValueError):
            S.gen_coherent_pair(1.5, FS, 10.0, 0)


def small_spec(**kw):
    defaults = dict(n_asd=2, n_td=2, fs=FS, duration_s=40.0, baseline_s=10.0,
                    seed=21)
    defaults.update(kw)
    return S.CohortSpec(**defaults)


class TestGenCohort:
    def test_cohort_counts_and_labels(self):
        recs = S.gen_cohort(S.CohortSpec(n_asd=8, n_td=9, duration_s=2.0,
                                         baseline_s=1.0, seed=1))
        assert len(recs) == 17
        assert sum(r.diagnosis == "ASD" for r in recs) == 8
        assert sum(r.diagnosis == "TD" for r in recs) == 9
        assert len({r.subject_id for r in recs}) == 17

    def test_epoch_layout(self):
        rec = S.gen_cohort(small_spec())[0]
        names = [e.name for e in rec.epochs]
        assert names == ["BASELINE", "TASK1"]
        assert rec.epoch("BASELINE").length == int(10 * FS)
        assert rec.epoch("TASK1").length == int(40 * FS)

    def test_seed_reproducibility_bytes(self):
        spec = small_spec()
        assert S.cohort_digest(S.gen_cohort(spec)) == S.cohort_digest(S.gen_cohort(spec))

    def test_different_seed_differs(self):
        assert (S.cohort_digest(S.gen_cohort(small_spec(seed=1)))
                != S.cohort_digest(S.gen_cohort(small_spec(seed=2))))

    def test_lambda_gap_separates_hemispheric_coherence(self):
        spec = small_spec(
            n_asd=3, n_td=3, duration_s=60.0, baseline_s=0.0,
            asd=S.GroupEffect(band_scale={}, lambda_left=0.65, lambda_right=0.2),
            td=S.GroupEffect(band_scale={}, lambda_left=0.65, lambda_right=0.8))
        recs = S.gen_cohort(spec)
        right = {"ASD": [], "TD": []}
        for rec in recs:
            task = extract_epoch(rec, "TASK1")
            right[rec.diagnosis].append(C.hemispheric_scores(task)[1])
        assert np.mean(right["TD"]) - np.mean(right["ASD"]) >= 0.3

    def test_scores_in_clinical_asd_range_with_defaults(self):
        recs = S.gen_cohort(S.CohortSpec(n_asd=8, n_td=9, duration_s=2.0,
                                         baseline_s=1.0, seed=0))
        asd_scores = [r.ados2_score for r in recs if r.diagnosis == "ASD"]
        assert all(7 <= s <= 20 for s in asd_scores)
        td_scores = [r.ados2_score for r in recs if r.diagnosis == "TD"]
        assert np.mean(td_scores) < np.mean(asd_scores)

    def test_score_anticorrelates_with_right_lambda(self):
        # larger right-hemisphere mixing -> lower score, by construction
        hi = S.gen_cohort(small_spec(
            n_asd=6, n_td=0, duration_s=2.0, baseline_s=1.0,
            asd=S.GroupEffect(lambda_right=0.9)))
        lo = S.gen_cohort(small_spec(
            n_asd=6, n_td=0, duration_s=2.0, baseline_s=1.0,
            asd=S.GroupEffect(lambda_right=0.2)))
        assert np.mean([r.ados2_score for r in lo]) > np.mean(
            [r.ados2_score for r in hi])

    def test_zero_subjects_rejected(self):
        with pytest.raises(ValueError):
            S.CohortSpec(n_asd=0, n_td=0)

    def test_theta_multiplier_scales_band_power(self):
        base = small_spec(n_asd=1, n_td=1, duration_s=30.0, baseline_s=0.0,
                          asd=S.GroupEffect(band_scale={"theta": 2.0}),
                          td=S.GroupEffect(band_scale={}))
        recs = S.gen_cohort(base)
        powers = {}
        for rec in recs:
            task = extract_epoch(rec, "TASK1")
            mats = [BP.power_matrix(DEFAULT_BANDS, task.data[i], fs=FS)
                    for i in range(task.n_channels)]
            powers[rec.diagnosis] = np.mean([m.values[1].mean() for m in mats])
        assert powers["ASD"] == pytest.approx(2.0 * powers["TD"], rel=0.25)


class TestWriteCohort:
    def test_written_files_reload(self, tmp_path):
        recs = S.gen_cohort(small_spec(duration_s=4.0, baseline_s=2.0))
        paths = S.write_cohort(recs, tmp_path)
        assert len(paths) == 4
        from eegpipe.recording import load_recording
        back = load_recording(paths[0])
        np.testing.assert_array_equal(back.data, recs[0].data)
        assert back.diagnosis == recs[0].diagnosis
        assert back.ados2_score == recs[0].ados2_score


def test_hemisphere_of_label():
    assert S.hemisphere_of("F7") == "left"
    assert S.hemisphere_of("TP10") == "right"
    assert S.hemisphere_of("TP9") == "left"
    assert S.hemisphere_of("Cz") == "midline"
    assert S.hemisphere_of("Fp1") == "left"
    assert S.hemisphere_of("C4") == "right"
