//! Spectral analysis and synthesis primitives.

pub mod cepstrum;
pub mod fft;
pub mod griffin_lim;
pub mod linalg;
pub mod mel;
pub mod stft;

pub use cepstrum::{lifter_log_magnitude, minimum_phase_filter};
pub use fft::FftPlan;
pub use griffin_lim::{griffin_lim, griffin_lim_trace};
pub use mel::{
    log_mel, mean_power, mel_filterbank, mel_to_linear_amplitude, mel_to_linear_power, MelFilterbank,
    MelSpectrogram, LOG_FLOOR,
};
pub use stft::{hann, istft, stft, AudioBuffer, ComplexSpectrogram, RealSpectrogram, StftParams, SAMPLE_RATE};
