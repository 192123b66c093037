//! `RNNP` model files (little-endian):
//!
//! magic `RNNP`, version `u16` = 1, `D`, `H`, `w` as `u16`, then the normalization
//! statistics as `f32` (`D` means, `D` standard deviations, `D` minima, `D` maxima),
//! then the flat parameter vector as `f32` in the order documented on
//! [`PredictorModel`].

use std::io::{Cursor, Read};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use thiserror::Error;

use super::{FrameStats, PredictorModel};

const MAGIC: &[u8; 4] = b"RNNP";
const VERSION: u16 = 1;

#[derive(Debug, Error)]
pub enum PredictorIoError {
    #[error("malformed predictor file at byte {offset}: {reason}")]
    Format { offset: usize, reason: String },
    #[error("model dimensions exceed the file format limits")]
    TooLarge,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn encode_predictor(model: &PredictorModel) -> Result<Vec<u8>, PredictorIoError> {
    let dims = [model.dims(), model.hidden(), model.window()];
    if dims.iter().any(|&v| v > u16::MAX as usize) {
        return Err(PredictorIoError::TooLarge);
    }
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.write_u16::<LittleEndian>(VERSION)?;
    for v in dims {
        out.write_u16::<LittleEndian>(v as u16)?;
    }
    let st = model.stats();
    for v in st.mean.iter().chain(&st.std).chain(&st.min).chain(&st.max).chain(model.params()) {
        out.write_f32::<LittleEndian>(*v as f32)?;
    }
    Ok(out)
}

fn fault(offset: u64, reason: impl Into<String>) -> PredictorIoError {
    PredictorIoError::Format { offset: offset as usize, reason: reason.into() }
}

pub fn decode_predictor(bytes: &[u8]) -> Result<PredictorModel, PredictorIoError> {
    let mut r = Cursor::new(bytes);
    let truncated = |r: &Cursor<&[u8]>| fault(r.position(), "truncated");
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|_| truncated(&r))?;
    if &magic != MAGIC {
        return Err(fault(0, "bad magic"));
    }
    let version = r.read_u16::<LittleEndian>().map_err(|_| truncated(&r))?;
    if version != VERSION {
        return Err(fault(4, format!("unsupported version {version}")));
    }
    let mut dims = [0usize; 3];
    for v in &mut dims {
        *v = r.read_u16::<LittleEndian>().map_err(|_| truncated(&r))? as usize;
    }
    let [d, h, w] = dims;
    if d == 0 || h == 0 || w == 0 {
        return Err(fault(6, "dimensions must be at least 1"));
    }
    let read_vec = |n: usize, r: &mut Cursor<&[u8]>| -> Result<Vec<f64>, PredictorIoError> {
        (0..n).map(|_| r.read_f32::<LittleEndian>().map(f64::from).map_err(|_| truncated(r))).collect()
    };
    let stats = FrameStats {
        mean: read_vec(d, &mut r)?,
        std: read_vec(d, &mut r)?,
        min: read_vec(d, &mut r)?,
        max: read_vec(d, &mut r)?,
    };
    let params = read_vec(PredictorModel::param_count(d, h), &mut r)?;
    if (r.position() as usize) != bytes.len() {
        return Err(fault(r.position(), "trailing bytes"));
    }
    PredictorModel::from_parts(h, w, stats, params).ok_or_else(|| fault(12, "non-finite or non-positive values"))
}

pub fn save_predictor(model: &PredictorModel, path: impl AsRef<Path>) -> Result<(), PredictorIoError> {
    std::fs::write(path, encode_predictor(model)?)?;
    Ok(())
}

pub fn load_predictor(path: impl AsRef<Path>) -> Result<PredictorModel, PredictorIoError> {
    decode_predictor(&std::fs::read(path)?)
}
