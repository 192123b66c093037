//! Wire format (little-endian):
//!
//! | bytes        | field                                         |
//! |--------------|-----------------------------------------------|
//! | 4            | magic `NFSC`                                  |
//! | 2            | version `u16` = 1                             |
//! | 2            | N `u16`                                       |
//! | 2            | Nf `u16`                                      |
//! | 2            | M `u16`                                       |
//! | 1            | Q `u8`                                        |
//! | ⌈M/8⌉        | dynamic-dimension bitmask, MSB-first          |
//! | 8·M          | per-dimension `(min, max)` as `f32` pairs     |
//! | ⌈payload/8⌉  | coefficient codes, MSB-first, zero padded     |
//!
//! `M_dyn` is the population count of the bitmask.

use byteorder::{ByteOrder, LittleEndian, WriteBytesExt};

use super::bits::{BitReader, BitWriter};
use super::{payload_bits, ChunkPlan, CodecError, WIRE_VERSION};
use crate::face::{ExpressionChunk, ExpressionFrame};

const MAGIC: &[u8; 4] = b"NFSC";
const FIXED_HEADER: usize = 13;

/// Total encoded length in bytes.
pub fn wire_size_bytes(m: usize, m_dyn: usize, q: u32, nf: usize) -> usize {
    FIXED_HEADER + m.div_ceil(8) + 8 * m + payload_bits(m, m_dyn, q, nf).div_ceil(8) as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodedChunk {
    pub plan: ChunkPlan,
    /// Per-dimension quantizer range.
    pub ranges: Vec<(f32, f32)>,
    pub payload: Vec<u8>,
    pub payload_bits: u64,
}

/// Receiver-side reconstruction of the transmitted frames.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedChunk {
    pub n: usize,
    pub q: u32,
    pub dynamic_dims: Vec<usize>,
    pub ranges: Vec<(f64, f64)>,
    /// `Nf` frames; static dimensions repeat the transmitted chunk mean.
    pub frames: Vec<ExpressionFrame>,
}

impl DecodedChunk {
    pub fn nf(&self) -> usize {
        self.frames.len()
    }

    /// Quantizer step of dimension `d`.
    pub fn step(&self, d: usize) -> f64 {
        let (lo, hi) = self.ranges[d];
        (hi - lo) / levels(self.q)
    }
}

fn levels(q: u32) -> f64 {
    ((1u32 << q) - 1) as f64
}

/// Smallest `f32` interval containing `[lo, hi]`.
fn outward_f32(lo: f64, hi: f64) -> (f32, f32) {
    let mut l = lo as f32;
    if l as f64 > lo {
        l = l.next_down();
    }
    let mut h = hi as f32;
    if (h as f64) < hi {
        h = h.next_up();
    }
    (l, h)
}

fn quantize(v: f64, lo: f64, hi: f64, q: u32) -> u32 {
    if hi <= lo {
        return 0;
    }
    let top = levels(q);
    ((v - lo) / (hi - lo) * top).round().clamp(0.0, top) as u32
}

fn dequantize(code: u32, lo: f64, hi: f64, q: u32) -> f64 {
    if hi <= lo {
        return lo;
    }
    lo + code as f64 * ((hi - lo) / levels(q))
}

/// Packs a chunk under `budget_bits` (coefficient bits only).
pub fn encode_chunk(
    chunk: &ExpressionChunk,
    dynamic_dims: &[usize],
    q: u32,
    budget_bits: f64,
) -> Result<EncodedChunk, CodecError> {
    if !(2..=16).contains(&q) {
        return Err(CodecError::BitWidth(q));
    }
    let (n, m) = (chunk.len(), chunk.dims());
    if n > u16::MAX as usize || m > u16::MAX as usize {
        return Err(CodecError::TooLarge { n, m });
    }
    if let Some(&dim) = dynamic_dims.iter().find(|&&d| d >= m) {
        return Err(CodecError::DimOutOfRange { dim, m });
    }
    let plan = ChunkPlan::new(n, m, dynamic_dims, q, budget_bits);
    if !plan.is_feasible() {
        return Err(CodecError::InfeasibleBudget { budget_bits, first_frame_bits: q as u64 * m as u64 });
    }
    let mut is_dynamic = vec![false; m];
    for &d in &plan.dynamic_dims {
        is_dynamic[d] = true;
    }
    let columns: Vec<Vec<f64>> = (0..m).map(|d| chunk.column(d)).collect();
    let ranges: Vec<(f32, f32)> = columns
        .iter()
        .map(|col| {
            let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            outward_f32(lo, hi)
        })
        .collect();
    let code = |d: usize, v: f64| quantize(v, ranges[d].0 as f64, ranges[d].1 as f64, q);

    let mut w = BitWriter::new();
    for d in 0..m {
        let v = if is_dynamic[d] { columns[d][0] } else { columns[d].iter().sum::<f64>() / n as f64 };
        w.write(code(d, v), q);
    }
    for frame in 1..plan.nf {
        for &d in &plan.dynamic_dims {
            w.write(code(d, columns[d][frame]), q);
        }
    }
    let payload_bits = w.bits_written();
    debug_assert_eq!(payload_bits, plan.payload_bits());
    Ok(EncodedChunk { plan, ranges, payload: w.into_bytes(), payload_bits })
}

impl EncodedChunk {
    pub fn size_bytes(&self) -> usize {
        wire_size_bytes(self.plan.m, self.plan.m_dyn(), self.plan.q, self.plan.nf)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let p = &self.plan;
        let mut out = Vec::with_capacity(self.size_bytes());
        out.extend_from_slice(MAGIC);
        out.write_u16::<LittleEndian>(WIRE_VERSION).unwrap();
        out.write_u16::<LittleEndian>(p.n as u16).unwrap();
        out.write_u16::<LittleEndian>(p.nf as u16).unwrap();
        out.write_u16::<LittleEndian>(p.m as u16).unwrap();
        out.push(p.q as u8);
        let mut mask = vec![0u8; p.m.div_ceil(8)];
        for &d in &p.dynamic_dims {
            mask[d / 8] |= 0x80 >> (d % 8);
        }
        out.extend(mask);
        for (lo, hi) in &self.ranges {
            out.write_f32::<LittleEndian>(*lo).unwrap();
            out.write_f32::<LittleEndian>(*hi).unwrap();
        }
        out.extend_from_slice(&self.payload);
        out
    }
}

fn format_err(offset: usize, reason: impl Into<String>) -> CodecError {
    CodecError::Format { offset, reason: reason.into() }
}

fn take(bytes: &[u8], offset: usize, len: usize) -> Result<&[u8], CodecError> {
    bytes.get(offset..offset + len).ok_or_else(|| {
        format_err(bytes.len(), format!("truncated: needed {len} bytes at offset {offset}"))
    })
}

/// Parses and dequantizes a wire chunk.
pub fn decode_chunk(bytes: &[u8]) -> Result<DecodedChunk, CodecError> {
    let header = take(bytes, 0, FIXED_HEADER)?;
    if &header[..4] != MAGIC {
        return Err(format_err(0, "bad magic"));
    }
    let version = LittleEndian::read_u16(&header[4..]);
    if version != WIRE_VERSION {
        return Err(format_err(4, format!("unsupported version {version}")));
    }
    let n = LittleEndian::read_u16(&header[6..]) as usize;
    let nf = LittleEndian::read_u16(&header[8..]) as usize;
    let m = LittleEndian::read_u16(&header[10..]) as usize;
    let q = header[12] as u32;
    if n == 0 {
        return Err(format_err(6, "N must be at least 1"));
    }
    if nf == 0 || nf > n {
        return Err(format_err(8, format!("Nf = {nf} outside [1, {n}]")));
    }
    if m == 0 {
        return Err(format_err(10, "M must be at least 1"));
    }
    if !(2..=16).contains(&q) {
        return Err(format_err(12, format!("Q = {q} outside [2, 16]")));
    }
    let mask_len = m.div_ceil(8);
    let mask = take(bytes, FIXED_HEADER, mask_len)?;
    let dynamic_dims: Vec<usize> = (0..m).filter(|d| mask[d / 8] & (0x80 >> (d % 8)) != 0).collect();
    if (m..mask_len * 8).any(|d| mask[d / 8] & (0x80 >> (d % 8)) != 0) {
        return Err(format_err(FIXED_HEADER + mask_len - 1, "bitmask padding bits set"));
    }
    let ranges_at = FIXED_HEADER + mask_len;
    let table = take(bytes, ranges_at, 8 * m)?;
    let ranges: Vec<(f64, f64)> = (0..m)
        .map(|d| (LittleEndian::read_f32(&table[8 * d..]) as f64, LittleEndian::read_f32(&table[8 * d + 4..]) as f64))
        .collect();
    let payload_at = ranges_at + 8 * m;
    let total = wire_size_bytes(m, dynamic_dims.len(), q, nf);
    let payload = take(bytes, payload_at, total - payload_at)?;
    if bytes.len() != total {
        return Err(format_err(total, format!("{} trailing bytes", bytes.len() - total)));
    }
    let mut r = BitReader::new(payload);
    let mut read = |d: usize| -> f64 {
        let code = r.read(q).expect("payload length checked");
        dequantize(code, ranges[d].0, ranges[d].1, q)
    };
    let first: Vec<f64> = (0..m).map(&mut read).collect();
    let mut frames = vec![ExpressionFrame(first.clone())];
    for _ in 1..nf {
        let mut f = first.clone();
        for &d in &dynamic_dims {
            f[d] = read(d);
        }
        frames.push(ExpressionFrame(f));
    }
    Ok(DecodedChunk { n, q, dynamic_dims, ranges, frames })
}
