mod common;

use common::{band_errors, red_mel};
use fastfit_core::dsp::{MelFilterbank, StftParams};
use fastfit_core::prior::{build_filter_from_envelope, build_filter_from_spectrogram, prior_noise, sample_prior, PriorFilter};

#[test]
fn envelope_prior_follows_filter_psd_in_every_band() {
    let fb = MelFilterbank::default_24k();
    let p = StftParams::default();
    let filter = build_filter_from_envelope(&red_mel(64, &fb, p), &fb, &p, 24).unwrap();
    let errors = band_errors(&filter, &p, 100);
    assert!(errors.len() >= 10);
    for (center, _, err) in errors {
        assert!(err.abs() <= 0.10, "{center} Hz: {err}");
    }
}

#[test]
fn spectrogram_prior_follows_filter_psd_in_resolved_bands() {
    // Single-bin bands sit below the analysis resolution; next to the DC
    // notch of the pseudoinverse they lose power through window leakage.
    let fb = MelFilterbank::default_24k();
    let p = StftParams::default();
    let filter = build_filter_from_spectrogram(&red_mel(64, &fb, p), &fb, &p).unwrap();
    let errors = band_errors(&filter, &p, 100);
    let resolved: Vec<_> = errors.iter().filter(|(_, n, _)| *n >= 2).collect();
    assert!(resolved.len() >= 10);
    for (center, _, err) in resolved {
        assert!(err.abs() <= 0.10, "{center} Hz: {err}");
    }
}

#[test]
fn identity_prior_is_the_noise() {
    let p = StftParams::default();
    let filter = PriorFilter::identity(20, p.bins());
    let y = sample_prior(&filter, &p, 20 * 256, 9).unwrap();
    let eps = prior_noise(20 * 256, 9);
    for (a, b) in y.samples.iter().zip(&eps.samples) {
        assert!((a - b).abs() <= 1e-6 * b.abs().max(1.0));
    }
}
