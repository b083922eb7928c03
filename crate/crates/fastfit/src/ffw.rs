//! `.ffw` weight files.
//!
//! Layout: the 8-byte magic `FFW00001`, a little-endian `u32` header length,
//! the JSON header ([`WeightHeader`]), zero padding to a 64-byte boundary,
//! then the payload. Each tensor is stored as little-endian `f32` at a
//! 64-byte aligned offset relative to the payload start. The header carries
//! the payload length and its CRC-32.

use std::path::Path;

use fastfit_core::model::{tensor_specs, ModelConfig, WeightStore};
use fastfit_core::nn::Tensor;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"FFW00001";
pub const VERSION: u64 = 1;
pub const ALIGN: usize = 64;
/// Headers longer than this are rejected before parsing.
pub const MAX_HEADER_LEN: usize = 1 << 22;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorEntry {
    pub name: String,
    pub dtype: String,
    pub shape: Vec<usize>,
    pub offset: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightHeader {
    pub version: u64,
    pub config: ModelConfig,
    pub seed: u64,
    pub config_hash: u64,
    pub payload_len: u64,
    pub payload_crc: u32,
    pub tensors: Vec<TensorEntry>,
}

fn align_up(n: usize) -> usize {
    n.div_ceil(ALIGN) * ALIGN
}

pub fn encode(store: &WeightStore, config: &ModelConfig) -> Result<Vec<u8>> {
    store.check_config(config)?;
    let mut payload = Vec::new();
    let mut entries = Vec::with_capacity(store.tensors().len());
    for (name, t) in store.tensors() {
        payload.resize(align_up(payload.len()), 0);
        entries.push(TensorEntry {
            name: name.clone(),
            dtype: "f32".into(),
            shape: t.shape.clone(),
            offset: payload.len() as u64,
        });
        for v in &t.data {
            payload.extend_from_slice(&v.to_le_bytes());
        }
    }
    let header = WeightHeader {
        version: VERSION,
        config: config.clone(),
        seed: store.seed,
        config_hash: config.hash(),
        payload_len: payload.len() as u64,
        payload_crc: crc32fast::hash(&payload),
        tensors: entries,
    };
    let json = serde_json::to_vec(&header)?;
    let start = align_up(12 + json.len());
    let mut out = Vec::with_capacity(start + payload.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    out.resize(start, 0);
    out.extend_from_slice(&payload);
    Ok(out)
}

/// Parse just the header, checking magic, version and length bounds.
pub fn decode_header(bytes: &[u8]) -> Result<(WeightHeader, usize)> {
    if bytes.len() < 8 || &bytes[..8] != MAGIC {
        return Err(Error::BadMagic { expected: "FFW00001" });
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
    // Read the version alone first so a future layout reports a version
    // error rather than a schema error.
    #[derive(Deserialize)]
    struct Probe {
        version: u64,
    }
    let probe: Probe = serde_json::from_slice(json).map_err(|e| Error::Header(e.to_string()))?;
    if probe.version != VERSION {
        return Err(Error::Version {
            format: "ffw",
            found: probe.version,
        });
    }
    let header: WeightHeader = serde_json::from_slice(json).map_err(|e| Error::Header(e.to_string()))?;
    Ok((header, align_up(12 + header_len)))
}

/// Parse and verify a `.ffw` image. With `expected`, the stored config must
/// equal it.
pub fn decode(bytes: &[u8], expected: Option<&ModelConfig>) -> Result<(ModelConfig, WeightStore)> {
    let (header, start) = decode_header(bytes)?;
    let config = header.config;
    config.validate().map_err(|e| Error::Header(format!("config: {e}")))?;
    if let Some(want) = expected {
        if *want != config {
            return Err(Error::ConfigMismatch(format!(
                "file holds config {:016x}, runtime config is {:016x}",
                config.hash(),
                want.hash()
            )));
        }
    }
    if header.config_hash != config.hash() {
        return Err(Error::ConfigMismatch(format!(
            "stored hash {:016x} does not match its config ({:016x})",
            header.config_hash,
            config.hash()
        )));
    }

    let available = bytes.len().saturating_sub(start) as u64;
    if bytes.len() < start || header.payload_len != available {
        return Err(Error::PayloadSize {
            expected: header.payload_len,
            found: available,
        });
    }
    let payload = &bytes[start..];

    let specs = tensor_specs(&config);
    if specs.len() != header.tensors.len() {
        return Err(Error::Header(format!(
            "directory lists {} tensors, model has {}",
            header.tensors.len(),
            specs.len()
        )));
    }
    let mut spans = Vec::with_capacity(specs.len());
    for (spec, entry) in specs.iter().zip(&header.tensors) {
        if entry.name != spec.name || entry.shape != spec.shape {
            return Err(Error::Header(format!(
                "directory entry `{}` {:?} does not match `{}` {:?}",
                entry.name, entry.shape, spec.name, spec.shape
            )));
        }
        if entry.dtype != "f32" {
            return Err(Error::Header(format!("`{}` has dtype {:?}", entry.name, entry.dtype)));
        }
        if entry.offset % ALIGN as u64 != 0 {
            return Err(Error::Bounds(format!("`{}` offset {} is not aligned", entry.name, entry.offset)));
        }
        let end = (spec.numel() as u64)
            .checked_mul(4)
            .and_then(|n| n.checked_add(entry.offset))
            .filter(|&end| end <= available)
            .ok_or_else(|| Error::Bounds(format!("`{}` extends past the payload", entry.name)))?;
        spans.push((entry.offset, end));
    }
    let mut sorted = spans.clone();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[1].0 < w[0].1) {
        return Err(Error::Bounds("tensor ranges overlap".into()));
    }

    let computed = crc32fast::hash(payload);
    if computed != header.payload_crc {
        return Err(Error::Checksum {
            stored: header.payload_crc,
            computed,
        });
    }

    let tensors = specs
        .into_iter()
        .zip(spans)
        .map(|(spec, (lo, hi))| {
            let data = payload[lo as usize..hi as usize]
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                .collect();
            Ok((spec.name, Tensor::new(spec.shape, data)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let store = WeightStore::from_tensors(&config, header.seed, tensors)?;
    Ok((config, store))
}

pub fn load(path: &Path, expected: Option<&ModelConfig>) -> Result<(ModelConfig, WeightStore)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, expected)
}

pub fn save(store: &WeightStore, config: &ModelConfig, path: &Path) -> Result<()> {
    let bytes = encode(store, config)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use fastfit_core::model::init_weights;

    fn small() -> ModelConfig {
        ModelConfig {
            channels: 4,
            kp_hidden: 8,
            ..ModelConfig::default()
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let config = small();
        let store = init_weights(&config, 5).unwrap();
        let bytes = encode(&store, &config).unwrap();
        let (back_config, back) = decode(&bytes, Some(&config)).unwrap();
        assert_eq!(back_config, config);
        assert_eq!(back, store);
    }

    #[test]
    fn payload_is_aligned() {
        let config = small();
        let bytes = encode(&init_weights(&config, 5).unwrap(), &config).unwrap();
        let (header, start) = decode_header(&bytes).unwrap();
        assert_eq!(start % ALIGN, 0);
        assert!(header.tensors.iter().all(|t| t.offset % ALIGN as u64 == 0));
    }

    #[test]
    fn flipped_payload_byte_is_checksum_error() {
        let config = small();
        let mut bytes = encode(&init_weights(&config, 5).unwrap(), &config).unwrap();
        let n = bytes.len();
        bytes[n - 3] ^= 0x40;
        assert!(matches!(decode(&bytes, None), Err(Error::Checksum { .. })));
    }

    #[test]
    fn other_runtime_config_is_rejected() {
        let config = small();
        let bytes = encode(&init_weights(&config, 5).unwrap(), &config).unwrap();
        let other = config.clone().with_encoder(fastfit_core::model::EncoderKind::SingleStftNoSkip);
        assert!(matches!(decode(&bytes, Some(&other)), Err(Error::ConfigMismatch(_))));
    }
}
