//! Brute-force reference implementations used as test oracles.
#![allow(dead_code)]

use std::f64::consts::PI;

use fastfit_core::dsp::{stft, MelFilterbank, MelSpectrogram, StftParams};
use fastfit_core::prior::{sample_prior, PriorFilter};

pub fn periodic_hann_centered(p: &StftParams) -> Vec<f64> {
    let off = (p.n_fft - p.win_length) / 2;
    let mut window = vec![0.0; p.n_fft];
    for i in 0..p.win_length {
        window[off + i] = 0.5 - 0.5 * (2.0 * PI * i as f64 / p.win_length as f64).cos();
    }
    window
}

fn reflect(x: &[f64], i: isize) -> f64 {
    let n = x.len() as isize;
    if n == 1 {
        return x[0];
    }
    let period = 2 * (n - 1);
    let mut j = i.rem_euclid(period);
    if j >= n {
        j = period - j;
    }
    x[j as usize]
}

/// Direct DFT of every frame, `(re, im)` pairs, frames x bins.
pub fn naive_stft(x: &[f64], p: &StftParams) -> Vec<(f64, f64)> {
    let padded: Vec<f64> = if p.center {
        let pad = (p.n_fft / 2) as isize;
        (-pad..x.len() as isize + pad).map(|i| reflect(x, i)).collect()
    } else {
        x.to_vec()
    };
    let window = periodic_hann_centered(p);
    let frames = (padded.len() - p.n_fft) / p.hop + 1;
    let mut out = Vec::with_capacity(frames * (p.n_fft / 2 + 1));
    for m in 0..frames {
        let seg = &padded[m * p.hop..m * p.hop + p.n_fft];
        for k in 0..=p.n_fft / 2 {
            let (mut re, mut im) = (0.0, 0.0);
            for (i, &v) in seg.iter().enumerate() {
                let a = -2.0 * PI * ((k * i) % p.n_fft) as f64 / p.n_fft as f64;
                re += v * window[i] * a.cos();
                im += v * window[i] * a.sin();
            }
            out.push((re, im));
        }
    }
    out
}

/// Cross-correlation over an explicitly zero-padded copy of the input.
/// `x` is channels x steps, `w` is out x in x k.
pub fn naive_conv1d(
    x: &[Vec<f64>],
    w: &[f64],
    b: &[f64],
    (out_ch, k): (usize, usize),
    stride: usize,
    dilation: usize,
    padding: usize,
) -> Vec<Vec<f64>> {
    let in_ch = x.len();
    let steps = x[0].len();
    let padded: Vec<Vec<f64>> = x
        .iter()
        .map(|c| {
            let mut v = vec![0.0; padding];
            v.extend_from_slice(c);
            v.extend(std::iter::repeat(0.0).take(padding));
            v
        })
        .collect();
    let span = dilation * (k - 1) + 1;
    let out_steps = (steps + 2 * padding - span) / stride + 1;
    (0..out_ch)
        .map(|o| {
            (0..out_steps)
                .map(|t| {
                    let mut acc = b[o];
                    for i in 0..in_ch {
                        for kk in 0..k {
                            acc += w[(o * in_ch + i) * k + kk] * padded[i][t * stride + kk * dilation];
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

/// Transposed convolution as zero insertion, full convolution, then a
/// symmetric crop of `(k - stride) / 2`. `w` is in x out x k.
pub fn naive_transposed_conv1d(x: &[Vec<f64>], w: &[f64], b: &[f64], out_ch: usize, k: usize, stride: usize) -> Vec<Vec<f64>> {
    let in_ch = x.len();
    let steps = x[0].len();
    let up_len = (steps - 1) * stride + 1;
    let full_len = up_len + k - 1;
    let crop = (k - stride) / 2;
    (0..out_ch)
        .map(|o| {
            let mut full = vec![0.0; full_len];
            for i in 0..in_ch {
                let mut up = vec![0.0; up_len];
                for m in 0..steps {
                    up[m * stride] = x[i][m];
                }
                for n in 0..full_len {
                    for kk in 0..k {
                        if n >= kk && n - kk < up_len {
                            full[n] += w[(i * out_ch + o) * k + kk] * up[n - kk];
                        }
                    }
                }
            }
            (0..steps * stride).map(|n| b[o] + full[n + crop]).collect()
        })
        .collect()
}

/// Per-frame kernels `frames x out x in x k` and biases `frames x out`,
/// zero outside the sequence.
pub fn naive_lvc(
    x: &[Vec<f64>],
    w: &[f64],
    b: &[f64],
    (out_ch, k): (usize, usize),
    hop: usize,
    dilation: usize,
) -> Vec<Vec<f64>> {
    let in_ch = x.len();
    let steps = x[0].len();
    let pad = (dilation * (k - 1) / 2) as isize;
    let per = out_ch * in_ch * k;
    (0..out_ch)
        .map(|o| {
            (0..steps)
                .map(|t| {
                    let f = t / hop;
                    let mut acc = b[f * out_ch + o];
                    for i in 0..in_ch {
                        for kk in 0..k {
                            let s = t as isize + (kk * dilation) as isize - pad;
                            if s >= 0 && (s as usize) < steps {
                                acc += w[f * per + (o * in_ch + i) * k + kk] * x[i][s as usize];
                            }
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

/// Log-mel of a fixed red-noise magnitude spectrum, repeated over `frames`.
pub fn red_mel(frames: usize, fb: &MelFilterbank, p: StftParams) -> MelSpectrogram {
    let s: Vec<f64> = (0..fb.bins())
        .map(|k| {
            let w = PI * k as f64 / (fb.bins() - 1) as f64;
            10.0 / ((1.0 - 0.9 * w.cos()).powi(2) + (0.9 * w.sin()).powi(2)).sqrt()
        })
        .collect();
    let mut mel = vec![0.0; fb.n_mels];
    fb.apply(&s, &mut mel);
    let mut c = MelSpectrogram::silent(frames, fb, p);
    c.values = mel.iter().map(|v| v.max(1e-5).ln() as f32).cycle().take(frames * fb.n_mels).collect();
    c
}

/// Per third-octave band: (center Hz, bins in band, relative error of the
/// empirical PSD against `|M|^2`), for bands whose mean `|M|` exceeds the
/// median of `|M|`.
pub fn band_errors(filter: &PriorFilter, p: &StftParams, seeds: u64) -> Vec<(f64, usize, f64)> {
    let bins = p.bins();
    let frames = filter.frames;
    let window_energy: f64 = p.window().iter().map(|w| w * w).sum();
    let mut psd = vec![0.0; bins];
    for seed in 0..seeds {
        let y = sample_prior(filter, p, frames * p.hop, seed).unwrap();
        let s = stft(&y, p).unwrap().power();
        for m in 0..frames {
            for (acc, v) in psd.iter_mut().zip(s.frame(m)) {
                *acc += v / seeds as f64;
            }
        }
    }
    let mut expected = vec![0.0; bins];
    let mut mags = Vec::with_capacity(frames * bins);
    for m in 0..frames {
        for (k, h) in filter.frame(m).iter().enumerate() {
            expected[k] += h.norm_sqr() * window_energy;
            mags.push(h.norm());
        }
    }
    mags.sort_by(f64::total_cmp);
    let median = mags[mags.len() / 2];
    let df = 24000.0 / p.n_fft as f64;
    let mut out = Vec::new();
    for n in -16..=11 {
        let center = 1000.0 * 2f64.powf(n as f64 / 3.0);
        let (lo, hi) = (center * 2f64.powf(-1.0 / 6.0), center * 2f64.powf(1.0 / 6.0));
        let ks: Vec<usize> = (0..bins).filter(|&k| k as f64 * df >= lo && (k as f64 * df) < hi).collect();
        if ks.is_empty() {
            continue;
        }
        let mean_mag = ks
            .iter()
            .map(|&k| (0..frames).map(|m| filter.frame(m)[k].norm()).sum::<f64>())
            .sum::<f64>()
            / (ks.len() * frames) as f64;
        if mean_mag <= median {
            continue;
        }
        let e: f64 = ks.iter().map(|&k| expected[k]).sum();
        let g: f64 = ks.iter().map(|&k| psd[k]).sum();
        out.push((center, ks.len(), (g - e) / e));
    }
    out
}
