//! Little-endian model files.
//!
//! Full precision (`SPLT`): magic, version `u16`, count `u32`, then 14 `f32` per
//! gaussian (position, scale, quaternion wxyz, opacity, color).
//!
//! Quantized (`SPLQ`): magic, version `u16`, count `u32`, bits `u8`, 14 `(min, max)`
//! `f32` pairs, then per gaussian 14 codes of `bits` bits, MSB-first, padded to a byte.

use std::fs;
use std::io;
use std::path::Path;

use byteorder::{ByteOrder, LittleEndian, WriteBytesExt};
use thiserror::Error;

use super::compress::{rebuild, QuantizedModel};
use super::gaussian::{Gaussian3D, SplatModel, PARAMS_PER_GAUSSIAN};
use crate::codec::bits::{BitReader, BitWriter};

const MAGIC: &[u8; 4] = b"SPLT";
const MAGIC_QUANTIZED: &[u8; 4] = b"SPLQ";
const VERSION: u16 = 1;
const HEADER_BYTES: usize = 10;

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error("bad magic at byte 0: expected {expected:?}, found {found:?}")]
    BadMagic { expected: String, found: Vec<u8> },
    #[error("unsupported version {0} at byte 4")]
    UnsupportedVersion(u16),
    #[error("truncated file: needed {needed} bytes at byte offset {offset}, have {have}")]
    Truncated { offset: usize, needed: usize, have: usize },
    #[error("{0} trailing bytes after model data")]
    TrailingBytes(usize),
    #[error("invalid quantization bit width {0} at byte 10")]
    BitWidth(u8),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Byte length of a full-precision model file.
pub fn model_size_bytes(count: usize) -> usize {
    HEADER_BYTES + count * PARAMS_PER_GAUSSIAN * 4
}

pub fn encode_model(model: &SplatModel) -> Vec<u8> {
    let mut out = Vec::with_capacity(model_size_bytes(model.size()));
    out.extend_from_slice(MAGIC);
    out.write_u16::<LittleEndian>(VERSION).unwrap();
    out.write_u32::<LittleEndian>(model.size() as u32).unwrap();
    for g in &model.gaussians {
        for v in g.to_params() {
            out.write_f32::<LittleEndian>(v as f32).unwrap();
        }
    }
    out
}

fn need(bytes: &[u8], offset: usize, len: usize) -> Result<&[u8], ModelIoError> {
    bytes
        .get(offset..offset + len)
        .ok_or(ModelIoError::Truncated { offset, needed: len, have: bytes.len().saturating_sub(offset) })
}

fn header(bytes: &[u8], magic: &[u8; 4]) -> Result<usize, ModelIoError> {
    let m = need(bytes, 0, 4)?;
    if m != magic {
        return Err(ModelIoError::BadMagic {
            expected: String::from_utf8_lossy(magic).into_owned(),
            found: m.to_vec(),
        });
    }
    let version = LittleEndian::read_u16(need(bytes, 4, 2)?);
    if version != VERSION {
        return Err(ModelIoError::UnsupportedVersion(version));
    }
    Ok(LittleEndian::read_u32(need(bytes, 6, 4)?) as usize)
}

pub fn decode_model(bytes: &[u8]) -> Result<SplatModel, ModelIoError> {
    let count = header(bytes, MAGIC)?;
    let body = need(bytes, HEADER_BYTES, count * PARAMS_PER_GAUSSIAN * 4)?;
    if bytes.len() > model_size_bytes(count) {
        return Err(ModelIoError::TrailingBytes(bytes.len() - model_size_bytes(count)));
    }
    let gaussians = body
        .chunks_exact(PARAMS_PER_GAUSSIAN * 4)
        .map(|rec| {
            let mut p = [0.0; PARAMS_PER_GAUSSIAN];
            for (k, v) in p.iter_mut().enumerate() {
                *v = LittleEndian::read_f32(&rec[k * 4..]) as f64;
            }
            Gaussian3D::from_params(&p)
        })
        .collect();
    Ok(SplatModel::new(gaussians))
}

pub fn save_model(model: &SplatModel, path: impl AsRef<Path>) -> Result<(), ModelIoError> {
    fs::write(path, encode_model(model))?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SplatModel, ModelIoError> {
    decode_model(&fs::read(path)?)
}

pub fn encode_quantized(q: &QuantizedModel) -> Vec<u8> {
    let mut out = Vec::with_capacity(q.size_bytes());
    out.extend_from_slice(MAGIC_QUANTIZED);
    out.write_u16::<LittleEndian>(VERSION).unwrap();
    out.write_u32::<LittleEndian>(q.codes.len() as u32).unwrap();
    out.push(q.bits as u8);
    for (lo, hi) in q.ranges {
        out.write_f32::<LittleEndian>(lo).unwrap();
        out.write_f32::<LittleEndian>(hi).unwrap();
    }
    let mut w = BitWriter::new();
    for c in &q.codes {
        for &v in c {
            w.write(v, q.bits);
        }
        w.align();
    }
    out.extend(w.into_bytes());
    out
}

pub fn decode_quantized(bytes: &[u8]) -> Result<QuantizedModel, ModelIoError> {
    let count = header(bytes, MAGIC_QUANTIZED)?;
    let bits = need(bytes, 10, 1)?[0];
    if !(2..=16).contains(&bits) {
        return Err(ModelIoError::BitWidth(bits));
    }
    let bits = bits as u32;
    let table = need(bytes, 11, PARAMS_PER_GAUSSIAN * 8)?;
    let mut ranges = [(0.0f32, 0.0f32); PARAMS_PER_GAUSSIAN];
    for (k, r) in ranges.iter_mut().enumerate() {
        *r = (LittleEndian::read_f32(&table[k * 8..]), LittleEndian::read_f32(&table[k * 8 + 4..]));
    }
    let start = 11 + PARAMS_PER_GAUSSIAN * 8;
    let per = (PARAMS_PER_GAUSSIAN * bits as usize).div_ceil(8);
    let payload = need(bytes, start, count * per)?;
    if bytes.len() > start + count * per {
        return Err(ModelIoError::TrailingBytes(bytes.len() - start - count * per));
    }
    let mut r = BitReader::new(payload);
    let mut codes = Vec::with_capacity(count);
    for _ in 0..count {
        let mut c = [0u32; PARAMS_PER_GAUSSIAN];
        for v in c.iter_mut() {
            *v = r.read(bits).expect("length checked");
        }
        r.align();
        codes.push(c);
    }
    Ok(rebuild(bits, ranges, codes))
}

#[cfg(test)]
mod tests {
    use nalgebra::Vector3;

    use super::*;
    use crate::splat::quantize_model;

    fn sample() -> SplatModel {
        SplatModel::new(vec![
            Gaussian3D::new(Vector3::new(0.1, 0.2, 0.3), Vector3::new(0.1, 0.2, 0.3), [0.8, 0.1, -0.3, 0.2], 0.33, [
                0.1, 0.7, 0.9,
            ])
            .unwrap(),
            Gaussian3D::isotropic(Vector3::new(-1.0, 2.0, 5.0), 0.05, 0.9, [1.0, 0.0, 0.25]).unwrap(),
        ])
    }

    #[test]
    fn round_trip_at_stored_precision() {
        let m = sample();
        let bytes = encode_model(&m);
        assert_eq!(bytes.len(), model_size_bytes(2));
        assert_eq!(&bytes[..4], b"SPLT");
        let back = decode_model(&bytes).unwrap();
        assert_eq!(back.gaussians, m.snapped_f32().gaussians);
        assert_eq!(encode_model(&back), bytes);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.splt");
        save_model(&sample(), &path).unwrap();
        assert_eq!(load_model(&path).unwrap().gaussians, sample().snapped_f32().gaussians);
    }

    #[test]
    fn faults() {
        let mut bytes = encode_model(&sample());
        assert!(matches!(decode_model(&bytes[..20]), Err(ModelIoError::Truncated { offset: 10, .. })));
        bytes.push(0);
        assert!(matches!(decode_model(&bytes), Err(ModelIoError::TrailingBytes(1))));
        bytes[0] = b'X';
        assert!(matches!(decode_model(&bytes), Err(ModelIoError::BadMagic { .. })));
        let mut v = encode_model(&sample());
        v[4] = 9;
        assert!(matches!(decode_model(&v), Err(ModelIoError::UnsupportedVersion(9))));
    }

    #[test]
    fn quantized_round_trip() {
        let (q, size) = quantize_model(&sample(), 5).unwrap();
        let bytes = encode_quantized(&q);
        assert_eq!(bytes.len(), size);
        let back = decode_quantized(&bytes).unwrap();
        assert_eq!(back.codes, q.codes);
        assert_eq!(back.model.gaussians, q.model.gaussians);
    }
}
