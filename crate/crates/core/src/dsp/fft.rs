//! Complex FFT for arbitrary lengths.
//!
//! Power-of-two sizes use an iterative radix-2 transform with a precomputed
//! twiddle table. Other sizes go through Bluestein's chirp-z algorithm on a
//! power-of-two grid.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

#[derive(Debug, Clone)]
pub struct FftPlan {
    len: usize,
    kind: Kind,
}

#[derive(Debug, Clone)]
enum Kind {
    Radix2 {
        twiddles: Vec<Complex64>,
        bitrev: Vec<u32>,
    },
    Bluestein {
        inner: alloc::boxed::Box<FftPlan>,
        chirp: Vec<Complex64>,
        kernel_fft: Vec<Complex64>,
    },
}

impl FftPlan {
    pub fn new(len: usize) -> Self {
        assert!(len > 0, "FFT length must be positive");
        if len.is_power_of_two() {
            let twiddles = (0..len / 2)
                .map(|k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 / len as f64))
                .collect();
            let bits = len.trailing_zeros();
            let bitrev = (0..len as u32)
                .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (32 - bits) })
                .collect();
            return FftPlan {
                len,
                kind: Kind::Radix2 { twiddles, bitrev },
            };
        }
        let m = (2 * len - 1).next_power_of_two();
        let inner = FftPlan::new(m);
        // chirp[n] = exp(-i*pi*n^2/len); n^2 reduced mod 2*len to keep the angle exact.
        let chirp: Vec<Complex64> = (0..len)
            .map(|n| {
                let q = ((n as u128 * n as u128) % (2 * len as u128)) as f64;
                Complex64::from_polar(1.0, -PI * q / len as f64)
            })
            .collect();
        let mut kernel = vec![Complex64::new(0.0, 0.0); m];
        kernel[0] = chirp[0].conj();
        for n in 1..len {
            kernel[n] = chirp[n].conj();
            kernel[m - n] = chirp[n].conj();
        }
        inner.forward(&mut kernel);
        FftPlan {
            len,
            kind: Kind::Bluestein {
                inner: alloc::boxed::Box::new(inner),
                chirp,
                kernel_fft: kernel,
            },
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Unnormalized forward transform, `X[k] = sum x[n] e^{-2 pi i k n / N}`.
    pub fn forward(&self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.len);
        match &self.kind {
            Kind::Radix2 { twiddles, bitrev } => radix2(data, twiddles, bitrev),
            Kind::Bluestein {
                inner,
                chirp,
                kernel_fft,
            } => {
                let m = inner.len;
                let mut buf = vec![Complex64::new(0.0, 0.0); m];
                for n in 0..self.len {
                    buf[n] = data[n] * chirp[n];
                }
                inner.forward(&mut buf);
                for (b, k) in buf.iter_mut().zip(kernel_fft) {
                    *b *= k;
                }
                inner.inverse(&mut buf);
                for k in 0..self.len {
                    data[k] = buf[k] * chirp[k];
                }
            }
        }
    }

    /// Normalized inverse transform (divides by N).
    pub fn inverse(&self, data: &mut [Complex64]) {
        for v in data.iter_mut() {
            *v = v.conj();
        }
        self.forward(data);
        let scale = 1.0 / self.len as f64;
        for v in data.iter_mut() {
            *v = v.conj() * scale;
        }
    }
}

fn radix2(data: &mut [Complex64], twiddles: &[Complex64], bitrev: &[u32]) {
    let n = data.len();
    for i in 0..n {
        let j = bitrev[i] as usize;
        if i < j {
            data.swap(i, j);
        }
    }
    let mut size = 2;
    while size <= n {
        let half = size / 2;
        let step = n / size;
        for start in (0..n).step_by(size) {
            for k in 0..half {
                let w = twiddles[k * step];
                let a = data[start + k];
                let b = data[start + k + half] * w;
                data[start + k] = a + b;
                data[start + k + half] = a - b;
            }
        }
        size *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(j, v)| {
                        let ang = -2.0 * PI * ((k * j) % n) as f64 / n as f64;
                        v * Complex64::from_polar(1.0, ang)
                    })
                    .sum()
            })
            .collect()
    }

    fn signal(n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|i| Complex64::new(libm::sin(i as f64 * 0.37) + 0.1 * i as f64, libm::cos(i as f64 * 1.3)))
            .collect()
    }

    #[test]
    fn matches_naive_dft_for_many_lengths() {
        for &n in &[1usize, 2, 3, 5, 8, 12, 16, 17, 100, 128, 600] {
            let x = signal(n);
            let expect = naive_dft(&x);
            let mut got = x.clone();
            FftPlan::new(n).forward(&mut got);
            for (a, b) in got.iter().zip(&expect) {
                assert!((a - b).norm() < 1e-9 * (1.0 + n as f64), "n={n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn inverse_round_trip() {
        for &n in &[16usize, 30, 1024] {
            let x = signal(n);
            let plan = FftPlan::new(n);
            let mut y = x.clone();
            plan.forward(&mut y);
            plan.inverse(&mut y);
            for (a, b) in x.iter().zip(&y) {
                assert!((a - b).norm() < 1e-10);
            }
        }
    }
}
