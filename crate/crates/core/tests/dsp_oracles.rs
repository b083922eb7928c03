mod common;

use std::f64::consts::PI;

use fastfit_core::dsp::mel::{hz_to_mel, mel_to_hz};
use fastfit_core::dsp::{
    griffin_lim, griffin_lim_trace, istft, log_mel, mean_power, mel_to_linear_power, stft, AudioBuffer,
    ComplexSpectrogram, MelFilterbank, StftParams,
};
use fastfit_core::prior::{sample_prior, PriorFilter};
use fastfit_core::rng::normal_vec;
use nalgebra::DMatrix;
use num_complex::Complex64;

fn sine(freq: f64, len: usize) -> AudioBuffer {
    AudioBuffer::from_samples((0..len).map(|n| (2.0 * PI * freq * n as f64 / 24000.0).sin()).collect())
}

#[test]
fn default_stft_matches_direct_dft() {
    let p = StftParams::default();
    let x = normal_vec(3, "dft-oracle", 4096);
    let got = stft(&AudioBuffer::from_samples(x.clone()), &p).unwrap();
    let want = common::naive_stft(&x, &p);
    for (g, (re, im)) in got.values.iter().zip(&want) {
        assert!((g.re - re).abs() <= 1e-6 && (g.im - im).abs() <= 1e-6);
    }
}

#[test]
fn single_bin_spectrogram_gives_closed_form_sinusoid() {
    // Bin nearest 440 Hz, phase advancing with the hop like a stationary tone.
    let p = StftParams::default();
    let (n, hop) = (p.n_fft, p.hop);
    let k0 = 19usize;
    let w0 = 2.0 * PI * k0 as f64 / n as f64;
    let (frames, amp, phi) = (40usize, 3.0, 0.7);
    let mut values = vec![Complex64::new(0.0, 0.0); frames * p.bins()];
    for m in 0..frames {
        values[m * p.bins() + k0] = Complex64::from_polar(amp, w0 * (m * hop) as f64 + phi);
    }
    let out = istft(&ComplexSpectrogram::new(frames, values, p).unwrap()).unwrap();
    let window = common::periodic_hann_centered(&p);
    for (t, &y) in out.samples.iter().enumerate() {
        let pos = t + n / 2;
        let (mut sw, mut sw2) = (0.0, 0.0);
        for m in 0..frames {
            let start = m * hop;
            if pos >= start && pos < start + n {
                sw += window[pos - start];
                sw2 += window[pos - start] * window[pos - start];
            }
        }
        let want = 2.0 * amp / n as f64 * (w0 * pos as f64 + phi).cos() * sw / sw2;
        assert!((y - want).abs() <= 1e-5, "sample {t}: {y} vs {want}");
    }
}

#[test]
fn pseudoinverse_matches_normal_equations() {
    let fb = MelFilterbank::default_24k();
    let (rows, cols) = (fb.n_mels, fb.bins());
    let a = DMatrix::from_row_slice(rows, cols, &fb.matrix);
    let gram = (&a * a.transpose()).cholesky().expect("filterbank has full row rank");
    for seed in 0..20 {
        let v = normal_vec(seed, "pinv-rhs", rows);
        let mut got = vec![0.0; cols];
        fb.invert(&v, &mut got);
        let y = gram.solve(&DMatrix::from_column_slice(rows, 1, &v));
        let want = a.transpose() * y;
        let scale = want.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (g, w) in got.iter().zip(want.iter()) {
            assert!((g - w).abs() <= 1e-6 * scale.max(1.0), "{g} vs {w}");
        }
    }
}

#[test]
fn sine_energy_lands_in_its_mel_band() {
    let fb = MelFilterbank::default_24k();
    let p = StftParams::default();
    let x = sine(440.0, 24000);
    let c = log_mel(&x, &p, &fb).unwrap();
    let direct = common::naive_stft(&x.samples, &p);
    let mid = c.frames / 2;
    let mags: Vec<f64> = direct[mid * p.bins()..(mid + 1) * p.bins()]
        .iter()
        .map(|(re, im)| (re * re + im * im).sqrt())
        .collect();
    let oracle = (0..fb.n_mels)
        .map(|m| fb.row(m).iter().zip(&mags).map(|(w, v)| w * v).sum::<f64>())
        .enumerate()
        .fold((0, f64::MIN), |b, (i, v)| if v > b.1 { (i, v) } else { b })
        .0;
    let frame = c.frame(mid);
    let got = (0..fb.n_mels).fold(0, |b, i| if frame[i] > frame[b] { i } else { b });
    assert_eq!(got, oracle);
    // Band edges on the mel scale around the argmax band contain 440 Hz.
    let step = hz_to_mel(fb.fmax) / (fb.n_mels + 1) as f64;
    let lo = mel_to_hz(step * got as f64);
    let hi = mel_to_hz(step * (got + 2) as f64);
    assert!(lo <= 440.0 && 440.0 <= hi, "{lo}..{hi}");
}

#[test]
fn white_noise_power_survives_mel_inversion() {
    let fb = MelFilterbank::default_24k();
    let p = StftParams::default();
    let x = AudioBuffer::from_samples(normal_vec(1, "white", 48000));
    let truth = stft(&x, &p).unwrap().power();
    let est = mel_to_linear_power(&log_mel(&x, &p, &fb).unwrap(), &fb).unwrap();
    // Group bins by the band with the largest weight.
    let bins = p.bins();
    let owner: Vec<usize> = (0..bins)
        .map(|k| (0..fb.n_mels).fold(0, |b, m| if fb.row(m)[k] > fb.row(b)[k] { m } else { b }))
        .collect();
    let mut sums = vec![(0.0, 0.0); fb.n_mels];
    for f in 0..truth.frames {
        for k in 0..bins {
            sums[owner[k]].0 += truth.frame(f)[k];
            sums[owner[k]].1 += est.frame(f)[k];
        }
    }
    let errors: Vec<f64> = sums.iter().map(|(t, e)| (e - t).abs() / t).collect();
    let mean = errors.iter().sum::<f64>() / errors.len() as f64;
    assert!(mean <= 0.25, "band-averaged relative error {mean}");
    // The DC band holds one real-valued bin and the top band tapers to zero
    // at Nyquist; every band in between must pass on its own.
    for (m, rel) in errors.iter().enumerate().take(fb.n_mels - 1).skip(1) {
        assert!(*rel <= 0.25, "band {m}: relative error {rel}");
    }
}

#[test]
fn mean_power_is_direct_sum() {
    let p = StftParams::default();
    let x = normal_vec(5, "mean-power", 5000);
    let direct = common::naive_stft(&x, &p);
    let oracle = direct.iter().map(|(re, im)| re * re + im * im).sum::<f64>() / direct.len() as f64;
    let got = mean_power(&stft(&AudioBuffer::from_samples(x), &p).unwrap().power().values).unwrap();
    assert!((got - oracle).abs() <= 1e-9 * oracle);
}

#[test]
fn griffin_lim_monotone_at_default_params() {
    let p = StftParams::default();
    for seed in 0..5 {
        let x = AudioBuffer::from_samples(normal_vec(seed, "gl", 12000));
        let mag = stft(&x, &p).unwrap().magnitude();
        let (_, trace) = griffin_lim_trace(&mag, &p, 32).unwrap();
        assert_eq!(trace.len(), 33);
        for w in trace.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-9), "seed {seed}: {trace:?}");
        }
    }
}

#[test]
fn griffin_lim_improves_harmonic_tone() {
    // Harmonic tone with vibrato, standing in for a voiced recording.
    let p = StftParams::default();
    let x: Vec<f64> = (0..24000)
        .map(|n| {
            let t = n as f64 / 24000.0;
            let f0 = 150.0 + 10.0 * (2.0 * PI * 5.0 * t).sin();
            (1..8).map(|h| (2.0 * PI * f0 * h as f64 * t).sin() / h as f64).sum()
        })
        .collect();
    let mag = stft(&AudioBuffer::from_samples(x), &p).unwrap().magnitude();
    let distance = |y: &AudioBuffer| {
        let m = stft(y, &p).unwrap().magnitude();
        let num: f64 = m.values.iter().zip(&mag.values).map(|(a, b)| (a - b) * (a - b)).sum();
        let den: f64 = mag.values.iter().map(|a| a * a).sum();
        (num / den).sqrt()
    };
    let d0 = distance(&griffin_lim(&mag, &p, 0).unwrap());
    let d32 = distance(&griffin_lim(&mag, &p, 32).unwrap());
    assert!(d32 < d0, "{d32} vs {d0}");
}

#[test]
fn band_limited_prior_has_no_high_band_energy() {
    let p = StftParams::default();
    let frames = 32;
    let cutoff = (6000.0 / 23.4375) as usize;
    let mut filter = PriorFilter::identity(frames, p.bins());
    for m in 0..frames {
        for k in cutoff + 1..p.bins() {
            filter.values[m * p.bins() + k] = Complex64::new(0.0, 0.0);
        }
    }
    let mut psd = vec![0.0; p.bins()];
    for seed in 0..100 {
        let y = sample_prior(&filter, &p, frames * p.hop, seed).unwrap();
        let s = stft(&y, &p).unwrap().power();
        for f in 0..s.frames {
            for (acc, v) in psd.iter_mut().zip(s.frame(f)) {
                *acc += v;
            }
        }
    }
    let total: f64 = psd.iter().sum();
    let above = (6200.0 / 23.4375f64).ceil() as usize;
    let high: f64 = psd[above..].iter().sum();
    assert!(high <= 0.01 * total, "{}", high / total);
}
