//! 16-bit mono PCM at 24 kHz, nothing else.

use std::io::{Cursor, Read, Seek, Write};
use std::path::Path;

use fastfit_core::dsp::{AudioBuffer, SAMPLE_RATE};

use crate::error::{Error, Result};

fn spec() -> hound::WavSpec {
    hound::WavSpec {
        channels: 1,
        sample_rate: SAMPLE_RATE,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    }
}

fn wav_err(e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(io) => Error::Wav(io.to_string()),
        other => Error::Wav(other.to_string()),
    }
}

pub fn decode<R: Read>(reader: R) -> Result<AudioBuffer> {
    let reader = hound::WavReader::new(reader).map_err(wav_err)?;
    let s = reader.spec();
    if s.channels != 1 {
        return Err(Error::Usage(format!("expected mono audio, got {} channels", s.channels)));
    }
    if s.sample_rate != SAMPLE_RATE {
        return Err(Error::Usage(format!(
            "expected {SAMPLE_RATE} Hz audio, got {} Hz (resample first)",
            s.sample_rate
        )));
    }
    if s.bits_per_sample != 16 || s.sample_format != hound::SampleFormat::Int {
        return Err(Error::Usage(format!(
            "expected 16-bit PCM, got {}-bit {:?}",
            s.bits_per_sample, s.sample_format
        )));
    }
    let samples = reader
        .into_samples::<i16>()
        .map(|v| v.map(|v| v as f64 / 32768.0))
        .collect::<Result<Vec<_>, _>>()
        .map_err(wav_err)?;
    Ok(AudioBuffer::new(samples, SAMPLE_RATE))
}

pub fn read(path: &Path) -> Result<AudioBuffer> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    decode(std::io::BufReader::new(file))
}

/// Quantize to 16 bits: clamp to [-1, 1], scale by 32767, round.
pub fn quantize(x: f64) -> i16 {
    (x.clamp(-1.0, 1.0) * 32767.0).round() as i16
}

pub fn encode_to<W: Write + Seek>(audio: &AudioBuffer, writer: W) -> Result<()> {
    if audio.sample_rate != SAMPLE_RATE {
        return Err(Error::Usage(format!("cannot write {} Hz audio", audio.sample_rate)));
    }
    let mut w = hound::WavWriter::new(writer, spec()).map_err(wav_err)?;
    for &x in &audio.samples {
        w.write_sample(quantize(x)).map_err(wav_err)?;
    }
    w.finalize().map_err(wav_err)
}

pub fn encode(audio: &AudioBuffer) -> Result<Vec<u8>> {
    let mut cursor = Cursor::new(Vec::new());
    encode_to(audio, &mut cursor)?;
    Ok(cursor.into_inner())
}

pub fn write(audio: &AudioBuffer, path: &Path) -> Result<()> {
    let bytes = encode(audio)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
