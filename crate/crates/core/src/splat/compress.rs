use thiserror::Error;

use super::gaussian::{Gaussian3D, SplatModel, PARAMS_PER_GAUSSIAN};

#[derive(Debug, Error, PartialEq)]
pub enum QuantizeError {
    #[error("quantization bit width must be in [2, 16], got {0}")]
    BitWidth(u32),
}

/// Keeps exactly the gaussians with `opacity >= threshold`, in order.
pub fn prune_by_opacity(model: &SplatModel, threshold: f64) -> SplatModel {
    SplatModel {
        gaussians: model.gaussians.iter().filter(|g| g.opacity >= threshold).copied().collect(),
        frame_id: model.frame_id.clone(),
        frame_to_world: model.frame_to_world,
    }
}

/// Uniformly quantized model: per-field ranges, integer codes and the dequantized result.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedModel {
    pub bits: u32,
    /// Per-parameter `(min, max)` over the model.
    pub ranges: [(f32, f32); PARAMS_PER_GAUSSIAN],
    pub codes: Vec<[u32; PARAMS_PER_GAUSSIAN]>,
    pub model: SplatModel,
}

impl QuantizedModel {
    pub fn size_bytes(&self) -> usize {
        quantized_size_bytes(self.codes.len(), self.bits)
    }

    /// Quantizer step of parameter `k`.
    pub fn step(&self, k: usize) -> f64 {
        let (lo, hi) = self.ranges[k];
        (hi as f64 - lo as f64) / levels(self.bits)
    }
}

/// Byte length of the quantized model file for `count` gaussians.
pub fn quantized_size_bytes(count: usize, bits: u32) -> usize {
    4 + 2 + 4 + 1 + PARAMS_PER_GAUSSIAN * 8 + count * (PARAMS_PER_GAUSSIAN * bits as usize).div_ceil(8)
}

fn levels(bits: u32) -> f64 {
    ((1u32 << bits) - 1) as f64
}

pub(crate) fn dequantize(code: u32, lo: f32, hi: f32, bits: u32) -> f64 {
    let (lo, hi) = (lo as f64, hi as f64);
    if hi <= lo {
        return lo;
    }
    lo + code as f64 * ((hi - lo) / levels(bits))
}

pub(crate) fn rebuild(
    bits: u32,
    ranges: [(f32, f32); PARAMS_PER_GAUSSIAN],
    codes: Vec<[u32; PARAMS_PER_GAUSSIAN]>,
) -> QuantizedModel {
    let gaussians = codes
        .iter()
        .map(|c| {
            let mut p = [0.0; PARAMS_PER_GAUSSIAN];
            for k in 0..PARAMS_PER_GAUSSIAN {
                p[k] = dequantize(c[k], ranges[k].0, ranges[k].1, bits);
            }
            Gaussian3D::from_params(&p)
        })
        .collect();
    QuantizedModel { bits, ranges, codes, model: SplatModel::new(gaussians) }
}

/// Uniform per-field quantization over each field's min/max across the model.
///
/// Operates on the model at its stored (`f32`) precision. Components of the
/// dequantized model are within half a quantizer step of the `f32`-rounded
/// originals; the quaternion is not renormalized, rendering normalizes it on use.
pub fn quantize_model(model: &SplatModel, bits: u32) -> Result<(QuantizedModel, usize), QuantizeError> {
    if !(2..=16).contains(&bits) {
        return Err(QuantizeError::BitWidth(bits));
    }
    let stored = model.snapped_f32();
    let params: Vec<[f64; PARAMS_PER_GAUSSIAN]> = stored.gaussians.iter().map(Gaussian3D::to_params).collect();
    let mut ranges = [(0.0f32, 0.0f32); PARAMS_PER_GAUSSIAN];
    for (k, range) in ranges.iter_mut().enumerate() {
        let mut it = params.iter().map(|p| p[k] as f32);
        if let Some(first) = it.next() {
            *range = it.fold((first, first), |(lo, hi), v| (lo.min(v), hi.max(v)));
        }
    }
    let top = levels(bits);
    let codes = params
        .iter()
        .map(|p| {
            let mut c = [0u32; PARAMS_PER_GAUSSIAN];
            for k in 0..PARAMS_PER_GAUSSIAN {
                let (lo, hi) = (ranges[k].0 as f64, ranges[k].1 as f64);
                if hi > lo {
                    c[k] = ((p[k] - lo) / (hi - lo) * top).round().clamp(0.0, top) as u32;
                }
            }
            c
        })
        .collect();
    let mut q = rebuild(bits, ranges, codes);
    q.model.frame_id = model.frame_id.clone();
    q.model.frame_to_world = model.frame_to_world;
    let size = q.size_bytes();
    Ok((q, size))
}
