//! `BSKB` files: magic, version `u16`, M `u16`, H `u16`, W `u16`, then M+1 images
//! (base first) of H·W·3 little-endian `f32`.

use std::fs;
use std::io;
use std::path::Path;

use byteorder::{ByteOrder, LittleEndian, WriteBytesExt};
use thiserror::Error;

use super::BlendshapeModel;
use crate::image::Image;

const MAGIC: &[u8; 4] = b"BSKB";
const VERSION: u16 = 1;
const HEADER_BYTES: usize = 12;

#[derive(Debug, Error)]
pub enum KbIoError {
    #[error("bad magic at byte 0")]
    BadMagic,
    #[error("unsupported version {0} at byte 4")]
    UnsupportedVersion(u16),
    #[error("dimension does not fit the u16 header field")]
    TooLarge,
    #[error("truncated file at byte offset {offset}: expected {expected} bytes total")]
    Truncated { offset: usize, expected: usize },
    #[error("invalid knowledge base: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn encode_kb(kb: &BlendshapeModel) -> Result<Vec<u8>, KbIoError> {
    let dims = [kb.bases().len(), kb.height(), kb.width()];
    if dims.iter().any(|&d| d > u16::MAX as usize) {
        return Err(KbIoError::TooLarge);
    }
    let mut out = Vec::with_capacity(HEADER_BYTES + (dims[0] + 1) * dims[1] * dims[2] * 12);
    out.extend_from_slice(MAGIC);
    out.write_u16::<LittleEndian>(VERSION)?;
    for d in dims {
        out.write_u16::<LittleEndian>(d as u16)?;
    }
    for img in std::iter::once(kb.base()).chain(kb.bases()) {
        for v in img.data() {
            out.write_f32::<LittleEndian>(*v as f32)?;
        }
    }
    Ok(out)
}

pub fn decode_kb(bytes: &[u8]) -> Result<BlendshapeModel, KbIoError> {
    if bytes.len() < HEADER_BYTES {
        return Err(KbIoError::Truncated { offset: bytes.len(), expected: HEADER_BYTES });
    }
    if &bytes[..4] != MAGIC {
        return Err(KbIoError::BadMagic);
    }
    let version = LittleEndian::read_u16(&bytes[4..]);
    if version != VERSION {
        return Err(KbIoError::UnsupportedVersion(version));
    }
    let m = LittleEndian::read_u16(&bytes[6..]) as usize;
    let h = LittleEndian::read_u16(&bytes[8..]) as usize;
    let w = LittleEndian::read_u16(&bytes[10..]) as usize;
    let per = h * w * 3;
    let expected = HEADER_BYTES + (m + 1) * per * 4;
    if bytes.len() != expected {
        return Err(KbIoError::Truncated { offset: bytes.len().min(expected), expected });
    }
    let mut images = bytes[HEADER_BYTES..].chunks_exact(per * 4).map(|chunk| {
        let data = chunk.chunks_exact(4).map(|b| LittleEndian::read_f32(b) as f64).collect();
        Image::from_vec(h, w, data).map_err(|e| KbIoError::Invalid(e.to_string()))
    });
    let base = images.next().expect("m + 1 >= 1")?;
    let bases = images.collect::<Result<Vec<_>, _>>()?;
    BlendshapeModel::new(base, bases).map_err(|e| KbIoError::Invalid(e.to_string()))
}

pub fn save_kb(kb: &BlendshapeModel, path: impl AsRef<Path>) -> Result<(), KbIoError> {
    fs::write(path, encode_kb(kb)?)?;
    Ok(())
}

pub fn load_kb(path: impl AsRef<Path>) -> Result<BlendshapeModel, KbIoError> {
    decode_kb(&fs::read(path)?)
}
