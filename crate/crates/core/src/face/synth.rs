use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{BlendshapeModel, ExpressionChunk, ExpressionFrame, FaceError};
use crate::image::Image;

const WAVES: usize = 4;

/// Sum of a few low-frequency cosines per channel, scaled to max-abs 1.
fn smooth_field(rng: &mut ChaCha8Rng, h: usize, w: usize) -> Vec<f64> {
    let mut data = vec![0.0; h * w * 3];
    for ch in 0..3 {
        let waves: Vec<(f64, f64, f64, f64)> = (0..WAVES)
            .map(|_| {
                (
                    rng.random_range(-2.0..2.0),
                    rng.random_range(-2.0..2.0),
                    rng.random_range(0.0..std::f64::consts::TAU),
                    rng.random_range(0.3..1.0),
                )
            })
            .collect();
        for r in 0..h {
            for c in 0..w {
                let (y, x) = ((r as f64 + 0.5) / h as f64, (c as f64 + 0.5) / w as f64);
                data[(r * w + c) * 3 + ch] = waves
                    .iter()
                    .map(|(fx, fy, ph, amp)| amp * (std::f64::consts::TAU * (fx * x + fy * y) + ph).cos())
                    .sum();
            }
        }
    }
    let peak = data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        data.iter_mut().for_each(|v| *v /= peak);
    }
    data
}

/// Deterministic smooth knowledge base: base in `[0.2, 0.8]`, `m` bases with max-abs 0.3.
pub fn gen_synthetic_kb(seed: u64, m: usize, h: usize, w: usize) -> Result<BlendshapeModel, FaceError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base: Vec<f64> = smooth_field(&mut rng, h, w).into_iter().map(|v| 0.5 + 0.3 * v).collect();
    let base = Image::from_vec(h, w, base)?;
    let bases = (0..m)
        .map(|_| {
            let field: Vec<f64> = smooth_field(&mut rng, h, w).into_iter().map(|v| 0.3 * v).collect();
            Image::from_vec(h, w, field)
        })
        .collect::<Result<Vec<_>, _>>()?;
    BlendshapeModel::new(base, bases)
}

/// Synthetic expression trajectory.
///
/// Dimensions in `dynamic_dims` (0-based) follow `0.5 + 0.4·sin(2π·f·n/N + φ)` with
/// per-dimension random `f ∈ [0.8, 2.5]` cycles per chunk and phase `φ`, plus
/// `N(0, noise_std)`; the others hold a random constant in `[0, 1]` plus
/// `N(0, noise_std / 10)`.
pub fn gen_trajectory(
    seed: u64,
    m: usize,
    n: usize,
    dynamic_dims: &[usize],
    noise_std: f64,
) -> Result<ExpressionChunk, FaceError> {
    if let Some(&d) = dynamic_dims.iter().find(|&&d| d >= m) {
        return Err(FaceError::DimOutOfRange(d));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, noise_std.max(0.0)).expect("finite std");
    let static_noise = Normal::new(0.0, noise_std.max(0.0) / 10.0).expect("finite std");
    let dims: Vec<(bool, f64, f64, f64)> = (0..m)
        .map(|d| {
            let freq = rng.random_range(0.8..2.5);
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            let level = rng.random_range(0.0..1.0);
            (dynamic_dims.contains(&d), freq, phase, level)
        })
        .collect();
    let frames = (0..n)
        .map(|i| {
            ExpressionFrame(
                dims.iter()
                    .map(|&(dynamic, freq, phase, level)| {
                        if dynamic {
                            let t = std::f64::consts::TAU * freq * i as f64 / n as f64 + phase;
                            0.5 + 0.4 * t.sin() + if noise_std > 0.0 { noise.sample(&mut rng) } else { 0.0 }
                        } else {
                            level + if noise_std > 0.0 { static_noise.sample(&mut rng) } else { 0.0 }
                        }
                    })
                    .collect(),
            )
        })
        .collect();
    ExpressionChunk::new(frames)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::variance;

    #[test]
    fn kb_is_deterministic_and_shaped() {
        let a = gen_synthetic_kb(3, 3, 32, 32).unwrap();
        assert_eq!(a, gen_synthetic_kb(3, 3, 32, 32).unwrap());
        assert_ne!(a, gen_synthetic_kb(4, 3, 32, 32).unwrap());
        assert_eq!(a.bases().len(), 3);
        assert!(a.bases().iter().all(|b| b.height() == 32 && b.width() == 32 && b.data().len() == 32 * 32 * 3));
        assert!(a.base().data().iter().all(|v| (0.2..=0.8).contains(v)));
        for b in a.bases() {
            let peak = b.data().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!((peak - 0.3).abs() < 1e-12);
        }
        assert_ne!(a.bases()[0], a.bases()[1]);
    }

    #[test]
    fn static_dims_are_constant_without_noise() {
        let c = gen_trajectory(1, 6, 100, &[0, 2], 0.0).unwrap();
        assert_eq!(c.len(), 100);
        for d in [1, 3, 4, 5] {
            let col = c.column(d);
            assert!(col.iter().all(|v| *v == col[0]));
        }
        assert!(variance(&c.column(0)) > 0.01);
    }

    #[test]
    fn dynamic_variance_dominates() {
        for seed in 0..10 {
            let dynamic = [0, 3, 7];
            let c = gen_trajectory(seed, 10, 100, &dynamic, 0.01).unwrap();
            let min_dyn = dynamic.iter().map(|&d| variance(&c.column(d))).fold(f64::INFINITY, f64::min);
            let max_static = (0..10)
                .filter(|d| !dynamic.contains(d))
                .map(|d| variance(&c.column(d)))
                .fold(0.0, f64::max);
            assert!(min_dyn > max_static, "seed {seed}");
        }
    }

    #[test]
    fn rejects_out_of_range_dim() {
        assert_eq!(gen_trajectory(0, 3, 10, &[3], 0.0), Err(FaceError::DimOutOfRange(3)));
    }
}
