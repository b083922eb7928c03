//! `.fmel` log-mel files.
//!
//! Layout: the 8-byte magic `FMEL0001`, a little-endian `u32` header length,
//! that many bytes of UTF-8 JSON (see [`MelHeader`]), then
//! `frames * n_mels` little-endian `f32` values, frame by frame.

use std::path::Path;

use fastfit_core::dsp::{mel_filterbank, MelFilterbank, MelSpectrogram, StftParams};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"FMEL0001";
/// Headers longer than this are rejected before parsing.
pub const MAX_HEADER_LEN: usize = 1 << 16;

/// Feature extraction settings shared by `analyze` and every consumer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub sample_rate: u32,
    pub n_fft: usize,
    pub hop: usize,
    pub win_length: usize,
    pub n_mels: usize,
    pub fmin: f64,
    pub fmax: f64,
}

impl Default for Analysis {
    fn default() -> Self {
        Analysis {
            sample_rate: 24_000,
            n_fft: 1024,
            hop: 256,
            win_length: 1024,
            n_mels: 100,
            fmin: 0.0,
            fmax: 12_000.0,
        }
    }
}

impl Analysis {
    pub fn params(&self) -> StftParams {
        StftParams::new(self.n_fft, self.hop, self.win_length)
    }

    pub fn filterbank(&self) -> Result<MelFilterbank> {
        self.params().validate()?;
        Ok(mel_filterbank(self.sample_rate, self.n_fft, self.n_mels, self.fmin, self.fmax)?)
    }

    pub fn of(c: &MelSpectrogram) -> Self {
        Analysis {
            sample_rate: c.sample_rate,
            n_fft: c.params.n_fft,
            hop: c.params.hop,
            win_length: c.params.win_length,
            n_mels: c.n_mels,
            fmin: c.fmin,
            fmax: c.fmax,
        }
    }

    /// Error unless `c` was extracted with exactly these settings.
    pub fn check(&self, c: &MelSpectrogram) -> Result<()> {
        let found = Analysis::of(c);
        if found != *self || !c.params.center {
            return Err(Error::ConfigMismatch(format!(
                "features were extracted with {found:?}, expected {self:?}"
            )));
        }
        Ok(())
    }
}

/// JSON header of a `.fmel` file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MelHeader {
    pub sample_rate: u32,
    pub n_fft: usize,
    pub hop: usize,
    pub win_length: usize,
    pub n_mels: usize,
    pub fmin: f64,
    pub fmax: f64,
    pub frames: usize,
}

impl MelHeader {
    pub fn analysis(&self) -> Analysis {
        Analysis {
            sample_rate: self.sample_rate,
            n_fft: self.n_fft,
            hop: self.hop,
            win_length: self.win_length,
            n_mels: self.n_mels,
            fmin: self.fmin,
            fmax: self.fmax,
        }
    }

    fn check(&self) -> Result<()> {
        if self.frames == 0 || self.n_mels == 0 {
            return Err(Error::Header(format!("{} frames x {} bands", self.frames, self.n_mels)));
        }
        let nyquist = self.sample_rate as f64 / 2.0;
        if self.sample_rate == 0 || !(self.fmin >= 0.0 && self.fmin < self.fmax && self.fmax <= nyquist) {
            return Err(Error::Header(format!(
                "band edges {}..{} Hz invalid at {} Hz",
                self.fmin, self.fmax, self.sample_rate
            )));
        }
        self.analysis()
            .params()
            .validate()
            .map_err(|e| Error::Header(e.to_string()))?;
        if self.n_mels > self.n_fft / 2 + 1 {
            return Err(Error::Header(format!("{} bands exceed {} bins", self.n_mels, self.n_fft / 2 + 1)));
        }
        Ok(())
    }
}

pub fn encode(c: &MelSpectrogram) -> Result<Vec<u8>> {
    c.validate()?;
    let a = Analysis::of(c);
    let header = MelHeader {
        sample_rate: a.sample_rate,
        n_fft: a.n_fft,
        hop: a.hop,
        win_length: a.win_length,
        n_mels: a.n_mels,
        fmin: a.fmin,
        fmax: a.fmax,
        frames: c.frames,
    };
    let json = serde_json::to_vec(&header)?;
    let mut out = Vec::with_capacity(12 + json.len() + 4 * c.values.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for v in &c.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

/// Parse a `.fmel` image. With `expected`, the header must match it exactly.
pub fn decode(bytes: &[u8], expected: Option<&Analysis>) -> Result<MelSpectrogram> {
    if bytes.len() < 8 || &bytes[..8] != MAGIC {
        return Err(Error::BadMagic { expected: "FMEL0001" });
    }
    let len_bytes: [u8; 4] = bytes
        .get(8..12)
        .and_then(|b| b.try_into().ok())
        .ok_or_else(|| Error::Bounds("file ends inside the header length".into()))?;
    let header_len = u32::from_le_bytes(len_bytes) as usize;
    if header_len > MAX_HEADER_LEN {
        return Err(Error::Header(format!("header length {header_len} exceeds {MAX_HEADER_LEN}")));
    }
    let json = bytes
        .get(12..12 + header_len)
        .ok_or_else(|| Error::Bounds(format!("header of {header_len} bytes runs past end of file")))?;
    let header: MelHeader =
        serde_json::from_slice(json).map_err(|e| Error::Header(e.to_string()))?;
    header.check()?;
    if let Some(want) = expected {
        if header.analysis() != *want {
            return Err(Error::ConfigMismatch(format!(
                "file has {:?}, expected {want:?}",
                header.analysis()
            )));
        }
    }
    let payload = &bytes[12 + header_len..];
    let expected_bytes = (header.frames as u64)
        .checked_mul(header.n_mels as u64)
        .and_then(|n| n.checked_mul(4));
    if expected_bytes != Some(payload.len() as u64) {
        return Err(Error::PayloadSize {
            expected: expected_bytes.unwrap_or(u64::MAX),
            found: payload.len() as u64,
        });
    }
    let values = payload
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    let c = MelSpectrogram {
        frames: header.frames,
        n_mels: header.n_mels,
        values,
        sample_rate: header.sample_rate,
        params: header.analysis().params(),
        fmin: header.fmin,
        fmax: header.fmax,
    };
    c.validate()?;
    Ok(c)
}

pub fn read(path: &Path, expected: Option<&Analysis>) -> Result<MelSpectrogram> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, expected)
}

pub fn write(c: &MelSpectrogram, path: &Path) -> Result<()> {
    let bytes = encode(c)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> MelSpectrogram {
        let a = Analysis::default();
        MelSpectrogram {
            frames: 3,
            n_mels: 100,
            values: (0..300).map(|i| (i as f32 * 0.37).sin() - 4.0).collect(),
            sample_rate: 24_000,
            params: a.params(),
            fmin: 0.0,
            fmax: 12_000.0,
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let c = sample();
        let back = decode(&encode(&c).unwrap(), Some(&Analysis::default())).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn short_payload_is_size_error() {
        let mut c = sample();
        c.frames = 10;
        c.values = vec![-5.0; 1000];
        let mut bytes = encode(&c).unwrap();
        bytes.truncate(bytes.len() - 400);
        assert!(matches!(decode(&bytes, None), Err(Error::PayloadSize { .. })));
    }

    #[test]
    fn mismatched_analysis_is_config_error() {
        let bytes = encode(&sample()).unwrap();
        let other = Analysis {
            n_mels: 80,
            ..Analysis::default()
        };
        assert!(matches!(decode(&bytes, Some(&other)), Err(Error::ConfigMismatch(_))));
    }
}
