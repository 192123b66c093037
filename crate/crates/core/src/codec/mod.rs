//! Semantic chunk codec.
//!
//! Within a chunk of `N` frames, feature dimensions are split into static and
//! dynamic ones. The first frame carries all `M` coefficients (chunk means for static
//! dimensions, actual values for dynamic ones); the following `Nf − 1` frames carry
//! only the `M_dyn` dynamic coefficients. Every coefficient is uniformly quantized
//! to `Q` bits, so a chunk costs `Q·M + Q·(Nf−1)·M_dyn` payload bits and `Nf` is the
//! largest frame count that fits the per-chunk budget.

pub mod bits;
mod wire;

use thiserror::Error;

pub use wire::{decode_chunk, encode_chunk, wire_size_bytes, DecodedChunk, EncodedChunk};

use crate::face::ExpressionChunk;
use crate::stats::variance;

pub const WIRE_VERSION: u16 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum CodecError {
    #[error("budget of {budget_bits} bits cannot carry the first frame ({first_frame_bits} bits)")]
    InfeasibleBudget { budget_bits: f64, first_frame_bits: u64 },
    #[error("quantizer bits must be in [2, 16], got {0}")]
    BitWidth(u32),
    #[error("dynamic dimension {dim} out of range for M = {m}")]
    DimOutOfRange { dim: usize, m: usize },
    #[error("chunk dimensions do not fit the wire header (N = {n}, M = {m})")]
    TooLarge { n: usize, m: usize },
    #[error("malformed chunk at byte {offset}: {reason}")]
    Format { offset: usize, reason: String },
}

/// Resolved packing decision for one chunk.
#[derive(Debug, Clone, PartialEq)]
pub struct ChunkPlan {
    pub n: usize,
    pub m: usize,
    /// Sorted ascending, 0-based.
    pub dynamic_dims: Vec<usize>,
    pub q: u32,
    /// Frames whose dynamic coefficients are transmitted; 0 means infeasible.
    pub nf: usize,
    pub budget_bits: f64,
}

impl ChunkPlan {
    pub fn new(n: usize, m: usize, dynamic_dims: &[usize], q: u32, budget_bits: f64) -> Self {
        let mut dynamic_dims = dynamic_dims.to_vec();
        dynamic_dims.sort_unstable();
        dynamic_dims.dedup();
        let nf = max_frames(m, dynamic_dims.len(), q, budget_bits, n);
        Self { n, m, dynamic_dims, q, nf, budget_bits }
    }

    pub fn m_dyn(&self) -> usize {
        self.dynamic_dims.len()
    }

    pub fn is_feasible(&self) -> bool {
        self.nf >= 1
    }

    pub fn payload_bits(&self) -> u64 {
        payload_bits(self.m, self.m_dyn(), self.q, self.nf)
    }
}

/// `Q·M + Q·(Nf−1)·M_dyn`, or 0 when `nf == 0`.
pub fn payload_bits(m: usize, m_dyn: usize, q: u32, nf: usize) -> u64 {
    if nf == 0 {
        return 0;
    }
    let q = q as u64;
    q * m as u64 + q * (nf as u64 - 1) * m_dyn as u64
}

/// Largest `Nf ∈ [1, N]` with `Q·M + Q·(Nf−1)·M_dyn ≤ budget_bits`; 0 if even the
/// first frame does not fit.
pub fn max_frames(m: usize, m_dyn: usize, q: u32, budget_bits: f64, n: usize) -> usize {
    if n == 0 || !(budget_bits >= 0.0) {
        return 0;
    }
    // coefficient bit counts are integers, so only the integer part of the budget matters
    let budget = budget_bits.floor().min(u64::MAX as f64) as u64;
    let q = q as u64;
    let first = q * m as u64;
    if first > budget {
        return 0;
    }
    if m_dyn == 0 {
        return n;
    }
    let extra = (budget - first) / (q * m_dyn as u64);
    (extra.saturating_add(1)).min(n as u64) as usize
}

/// Bits of the wire header (everything but the payload).
pub fn header_bits(m: usize) -> u64 {
    8 * (13 + m.div_ceil(8) + 8 * m) as u64
}

/// Budget left for coefficients; with `count_header_bits` the header is charged too.
pub fn coefficient_budget(budget_bits: f64, m: usize, count_header_bits: bool) -> f64 {
    if count_header_bits {
        (budget_bits - header_bits(m) as f64).max(0.0)
    } else {
        budget_bits
    }
}

/// The `m_dyn` dimensions with the largest within-chunk variance (ties to the lower
/// index), returned in ascending order.
pub fn classify_features(chunk: &ExpressionChunk, m_dyn: usize) -> Vec<usize> {
    let m = chunk.dims();
    let vars: Vec<f64> = (0..m).map(|d| variance(&chunk.column(d))).collect();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| vars[b].total_cmp(&vars[a]).then(a.cmp(&b)));
    let mut picked: Vec<usize> = order.into_iter().take(m_dyn.min(m)).collect();
    picked.sort_unstable();
    picked
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::face::{gen_trajectory, ExpressionFrame};

    #[test]
    fn max_frames_examples() {
        assert_eq!(max_frames(20, 5, 8, 560.0, 100), 11);
        assert_eq!(max_frames(20, 5, 8, 159.0, 100), 0);
        assert_eq!(max_frames(20, 5, 8, 1e6, 100), 100);
        assert_eq!(max_frames(20, 0, 8, 160.0, 100), 100);
        assert_eq!(max_frames(20, 5, 8, 599.9, 100), 11);
        assert_eq!(max_frames(20, 5, 8, f64::NAN, 100), 0);
    }

    #[test]
    fn payload_bits_example() {
        assert_eq!(payload_bits(20, 5, 8, 11), 560);
        assert_eq!(payload_bits(20, 5, 8, 0), 0);
    }

    #[test]
    fn classify_edges() {
        let c = gen_trajectory(2, 6, 50, &[1, 4], 0.0).unwrap();
        assert!(classify_features(&c, 0).is_empty());
        assert_eq!(classify_features(&c, 6), vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(classify_features(&c, 2), vec![1, 4]);
    }

    #[test]
    fn classify_ties_prefer_lower_index() {
        let frames = (0..4).map(|i| ExpressionFrame(vec![0.5, i as f64, 0.5, i as f64])).collect();
        let c = ExpressionChunk::new(frames).unwrap();
        assert_eq!(classify_features(&c, 1), vec![1]);
        assert_eq!(classify_features(&c, 3), vec![0, 1, 3]);
    }

    #[test]
    fn header_accounting() {
        assert_eq!(header_bits(20), 8 * (13 + 3 + 160));
        assert_eq!(coefficient_budget(2000.0, 20, false), 2000.0);
        assert_eq!(coefficient_budget(2000.0, 20, true), 2000.0 - 1408.0);
        assert_eq!(coefficient_budget(100.0, 20, true), 0.0);
    }
}
