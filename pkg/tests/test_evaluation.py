"""Study runners and report emission."""

import dataclasses

import numpy as np
import pytest

from fidunav.evaluation import (
    DEFAULT_HISTOGRAM_BINS,
    Histogram,
    InsufficientSamplesError,
    LOCALIZATION_CSV_HEADER,
    PRECISION_CSV_HEADER,
    REFERENCE,
    UnsupportedFormatError,
    emit_report,
    localization_csv,
    precision_csv,
    report_txt,
    run_localization_study,
    run_precision_study,
)
from fidunav.simulator import preset_localization_study, preset_precision_study


def _tiny_precision(noise=0.0, n_frames=12, seed=0):
    return [
        dataclasses.replace(s, noise_px=noise, n_frames=n_frames)
        for s in preset_precision_study(seed=seed)[:2]
    ]


@pytest.fixture(scope="module")
def zero_noise_precision_report():
    return run_precision_study(_tiny_precision())


@pytest.fixture(scope="module")
def zero_noise_localization_report():
    sc = preset_localization_study(noise_px=0.0, seed=0)
    sc = dataclasses.replace(sc, n_frames=15 * 2)
    # re-time the 15 placements onto 2 frames each
    traj = [
        (round(i * 2 * 1_000_000.0 / sc.frame_rate_hz), pose)
        for i, (_, pose) in enumerate(sc.coil_trajectory)
    ]
    sc = dataclasses.replace(sc, coil_trajectory=traj)
    return run_localization_study(sc, frames_per_point=2)


class TestPrecisionStudy:
    def test_zero_noise_stats(self, zero_noise_precision_report):
        for p in zero_noise_precision_report.positions:
            assert p.n_samples == 12
            assert p.std_distance_mm < 1e-9
            assert p.abs_distance_error_mm < 1e-6
            assert p.mean_angle_deg < 1e-6

    def test_gaussian_fit_tracks_sample_mean(self, zero_noise_precision_report):
        for p in zero_noise_precision_report.positions:
            bound = 3.0 * p.gauss_sigma_mm / np.sqrt(p.n_samples) + 1e-12
            assert abs(p.gauss_mu_mm - p.mean_distance_mm) <= bound

    def test_noisy_study_produces_spread(self):
        report = run_precision_study(_tiny_precision(noise=0.3, n_frames=15))
        for p in report.positions:
            assert p.std_distance_mm > 0.0
            assert p.gauss_sigma_mm > 0.0

    def test_insufficient_samples(self):
        with pytest.raises(InsufficientSamplesError):
            run_precision_study(_tiny_precision(n_frames=5))

    def test_reference_constants_embedded(self, zero_noise_precision_report):
        ref = zero_noise_precision_report.reference
        assert ref["distance_std_band_mm"] == (0.07, 0.09)
        assert ref["angle_std_band_deg"] == (0.04, 0.06)
        assert ref == REFERENCE


class TestLocalizationStudy:
    def test_zero_noise_all_below_threshold(self, zero_noise_localization_report):
        r = zero_noise_localization_report
        assert len(r.points) == 15
        assert r.mean_error_mm < 1e-6
        assert r.fraction_below_4mm == 1.0
        assert r.tracked_fraction == 1.0

    def test_fractions_sum_to_one(self, zero_noise_localization_report):
        r = zero_noise_localization_report
        assert (r.fraction_below_4mm + r.fraction_4_to_6mm
                + r.fraction_above_6mm) == 1.0

    def test_reference_constants_embedded(self, zero_noise_localization_report):
        ref = zero_noise_localization_report.reference
        assert ref["localization_mean_error_mm"] == 4.94
        assert ref["vuforia_hl1_mean_error_mm"] == 3.1
        assert ref["hl_ventriculostomy_mean_error_mm"] == 5.2
        assert ref["intel_sr300_mean_error_mm"] == 20.0


class TestHistogram:
    def test_default_bins(self):
        h = Histogram.of(np.linspace(0, 1, 100))
        assert len(h.counts) == DEFAULT_HISTOGRAM_BINS
        assert len(h.bin_edges) == DEFAULT_HISTOGRAM_BINS + 1
        assert sum(h.counts) == 100

    def test_configurable_bins(self):
        h = Histogram.of(np.linspace(0, 1, 50), bins=10)
        assert len(h.counts) == 10


class TestReports:
    def test_precision_csv_header(self, zero_noise_precision_report):
        text = precision_csv(zero_noise_precision_report)
        assert text.splitlines()[0] == PRECISION_CSV_HEADER
        assert PRECISION_CSV_HEADER == (
            "position,n_samples,true_distance_mm,mean_distance_mm,"
            "std_distance_mm,gauss_mu_mm,gauss_sigma_mm,"
            "abs_distance_error_mm,mean_angle_deg,std_angle_deg"
        )
        assert len(text.splitlines()) == 1 + 2

    def test_localization_csv_header(self, zero_noise_localization_report):
        text = localization_csv(zero_noise_localization_report)
        assert text.splitlines()[0] == LOCALIZATION_CSV_HEADER
        assert LOCALIZATION_CSV_HEADER == (
            "point,true_x_mm,true_y_mm,true_z_mm,mean_error_mm,n_samples"
        )
        assert len(text.splitlines()) == 1 + 15

    def test_identical_report_identical_bytes(self, zero_noise_precision_report):
        a = report_txt(zero_noise_precision_report)
        b = report_txt(zero_noise_precision_report)
        assert a == b
        assert precision_csv(zero_noise_precision_report) == precision_csv(
            zero_noise_precision_report
        )

    def test_txt_contains_reference_constants(self, zero_noise_localization_report):
        text = report_txt(zero_noise_localization_report)
        assert "reference constants" in text
        assert "4.94" in text

    def test_emit_report_dispatch(self, zero_noise_precision_report,
                                  zero_noise_localization_report):
        assert emit_report(zero_noise_precision_report, "csv").startswith(
            "position,")
        assert emit_report(zero_noise_localization_report, "csv").startswith(
            "point,")
        assert emit_report(zero_noise_precision_report, "txt").startswith(
            "precision study")

    def test_unsupported_format(self, zero_noise_precision_report):
        with pytest.raises(UnsupportedFormatError):
            emit_report(zero_noise_precision_report, "xml")
        with pytest.raises(UnsupportedFormatError):
            report_txt(object())
