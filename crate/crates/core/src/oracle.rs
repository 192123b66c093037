//! Slow, direct reference computations.
//!
//! These deliberately share no code with the production paths they check: the
//! dense renderer re-derives the projection from the covariance formula and
//! composites every gaussian at every pixel with no culling or tiling.

use nalgebra::{Matrix2, Matrix2x3, Vector2};

use crate::image::Image;
use crate::splat::{CameraPose, SplatModel, ALPHA_MAX, COV2D_REGULARIZATION, NEAR_PLANE};

/// Direct per-pixel evaluation of front-to-back alpha compositing.
pub fn dense_render(model: &SplatModel, cam: &CameraPose, background: [f64; 3]) -> Image {
    struct Footprint {
        depth: f64,
        index: usize,
        mean: Vector2<f64>,
        inv: Matrix2<f64>,
        opacity: f64,
        color: [f64; 3],
    }
    let mut splats: Vec<Footprint> = Vec::new();
    for (index, g) in model.gaussians.iter().enumerate() {
        let p = cam.rotation * g.position + cam.translation;
        if p.z <= NEAR_PLANE {
            continue;
        }
        let j = Matrix2x3::new(cam.fx / p.z, 0.0, -cam.fx * p.x / (p.z * p.z), 0.0, cam.fy / p.z, -cam.fy * p.y / (p.z * p.z));
        let sigma = g.covariance();
        let cov = j * cam.rotation * sigma * cam.rotation.transpose() * j.transpose()
            + Matrix2::identity() * COV2D_REGULARIZATION;
        let Some(inv) = cov.try_inverse() else { continue };
        splats.push(Footprint {
            depth: p.z,
            index,
            mean: Vector2::new(cam.fx * p.x / p.z + cam.cx, cam.fy * p.y / p.z + cam.cy),
            inv,
            opacity: g.opacity,
            color: g.color,
        });
    }
    splats.sort_by(|a, b| a.depth.total_cmp(&b.depth).then(a.index.cmp(&b.index)));
    let mut img = Image::filled(cam.height, cam.width, background).expect("camera has positive size");
    for row in 0..cam.height {
        for col in 0..cam.width {
            let pix = Vector2::new(col as f64 + 0.5, row as f64 + 0.5);
            let mut c = [0.0; 3];
            let mut t = 1.0;
            for s in &splats {
                let d = pix - s.mean;
                let m = (d.transpose() * s.inv * d)[(0, 0)];
                let a = (s.opacity * (-0.5 * m).exp()).clamp(0.0, ALPHA_MAX);
                for ch in 0..3 {
                    c[ch] += s.color[ch] * a * t;
                }
                t *= 1.0 - a;
            }
            for ch in 0..3 {
                c[ch] += background[ch] * t;
            }
            img.set_pixel(row, col, c);
        }
    }
    img
}

/// Central finite-difference gradient of `f` at `x` with step `h`.
pub fn central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Largest frame count in `[1, n]` whose coefficient bits fit the budget, found by
/// scanning every candidate; 0 when the first frame alone does not fit.
pub fn max_frames_scan(m: u64, m_dyn: u64, q: u64, budget_bits: f64, n: u64) -> u64 {
    let mut best = 0;
    for nf in 1..=n {
        let bits = q * m + q * (nf - 1) * m_dyn;
        if bits as f64 <= budget_bits {
            best = nf;
        }
    }
    best
}

/// Worst relative error `|a-b| / max(|a|, |b|, floor)` between two gradients.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(floor))
        .fold(0.0, f64::max)
}
