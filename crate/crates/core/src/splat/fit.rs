use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use rayon::prelude::*;
use thiserror::Error;

use super::camera::CameraPose;
use super::gaussian::{SplatModel, PARAMS_PER_GAUSSIAN};
use super::render::{bin_tiles, composite_pixel, prepare, render, Contribution, RenderError, DEFAULT_TILE_SIZE};
use crate::image::{Image, ImageError};

/// Background used for fitting losses.
pub const FIT_BACKGROUND: [f64; 3] = [0.0; 3];

/// Multiplier on the global step size for each of the 14 parameters
/// (position, scale, rotation, opacity, color).
pub const GROUP_STEP_SCALE: [f64; PARAMS_PER_GAUSSIAN] =
    [1.0, 1.0, 1.0, 0.2, 0.2, 0.2, 0.1, 0.1, 0.1, 0.1, 1.0, 1.0, 1.0, 1.0];

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("fitting needs at least one view")]
    NoViews,
    #[error("non-finite loss at step {step}")]
    NonFiniteLoss { step: usize },
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Image(#[from] ImageError),
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub model: SplatModel,
    /// Loss before the first step followed by the loss after every step.
    pub trace: Vec<f64>,
}

/// Mean over views of the per-view MSE against the target images (black background).
pub fn loss(model: &SplatModel, views: &[(Image, CameraPose)]) -> Result<f64, FitError> {
    if views.is_empty() {
        return Err(FitError::NoViews);
    }
    let mut total = 0.0;
    for (target, cam) in views {
        total += render(model, cam, FIT_BACKGROUND)?.mse(target)?;
    }
    Ok(total / views.len() as f64)
}

#[derive(Debug, Clone, Copy, Default)]
struct ScreenGrad {
    color: [f64; 3],
    opacity: f64,
    mean: Vector2<f64>,
    conic: Matrix2<f64>,
}

impl ScreenGrad {
    fn add(&mut self, o: &ScreenGrad) {
        for ch in 0..3 {
            self.color[ch] += o.color[ch];
        }
        self.opacity += o.opacity;
        self.mean += o.mean;
        self.conic += o.conic;
    }
}

/// Accumulates `dL/d(params)` for one view into `grad`, returns that view's MSE.
fn view_gradient(
    model: &SplatModel,
    cam: &CameraPose,
    target: &Image,
    weight: f64,
    grad: &mut [f64],
) -> Result<f64, FitError> {
    if target.height() != cam.height || target.width() != cam.width {
        return Err(ImageError::DimensionMismatch(target.height(), target.width(), cam.height, cam.width).into());
    }
    let visible = prepare(model, cam);
    let bins = bin_tiles(&visible, cam, DEFAULT_TILE_SIZE);
    let n_values = (cam.height * cam.width * 3) as f64;
    let bg = FIT_BACKGROUND;

    let per_tile: Vec<(f64, Vec<ScreenGrad>)> = bins
        .par_iter()
        .map(|(t, list)| {
            let mut acc = vec![ScreenGrad::default(); list.len()];
            let mut sq = 0.0;
            let mut contribs: Vec<Contribution> = Vec::new();
            let mut before: Vec<f64> = Vec::new();
            for row in t.row0..t.row1 {
                for col in t.col0..t.col1 {
                    contribs.clear();
                    let (color, t_final) =
                        composite_pixel(&visible, list, row, col, bg, |c| contribs.push(*c));
                    let tgt = target.pixel(row, col);
                    let mut dl_dc = [0.0; 3];
                    for ch in 0..3 {
                        let r = color[ch] - tgt[ch];
                        sq += r * r;
                        dl_dc[ch] = 2.0 * r * weight / n_values;
                    }
                    before.clear();
                    let mut tr = 1.0;
                    for c in &contribs {
                        before.push(tr);
                        tr *= 1.0 - c.alpha;
                    }
                    let mut behind = bg.map(|b| b * t_final);
                    for (c, &t_i) in contribs.iter().zip(&before).rev() {
                        let splat = &visible[list[c.pos]].proj.splat;
                        let a = &mut acc[c.pos];
                        let mut dl_dalpha = 0.0;
                        for ch in 0..3 {
                            a.color[ch] += dl_dc[ch] * c.alpha * t_i;
                            dl_dalpha += dl_dc[ch] * (splat.color[ch] * t_i - behind[ch] / (1.0 - c.alpha));
                            behind[ch] += splat.color[ch] * c.alpha * t_i;
                        }
                        if !c.saturated {
                            a.opacity += dl_dalpha * c.falloff;
                            let dl_dm = -0.5 * c.alpha * dl_dalpha;
                            let d = Vector2::new(c.offset[0], c.offset[1]);
                            a.mean += -2.0 * dl_dm * (splat.conic * d);
                            a.conic += dl_dm * (d * d.transpose());
                        }
                    }
                }
            }
            (sq, acc)
        })
        .collect();

    let mut sq_total = 0.0;
    let mut screen = vec![ScreenGrad::default(); visible.len()];
    for ((_, list), (sq, acc)) in bins.iter().zip(&per_tile) {
        sq_total += sq;
        for (slot, g) in list.iter().zip(acc) {
            screen[*slot].add(g);
        }
    }

    for (v, sg) in visible.iter().zip(&screen) {
        let g = &model.gaussians[v.index];
        let out = &mut grad[v.index * PARAMS_PER_GAUSSIAN..(v.index + 1) * PARAMS_PER_GAUSSIAN];
        for ch in 0..3 {
            out[11 + ch] += sg.color[ch];
        }
        out[10] += sg.opacity;

        let conic = v.proj.splat.conic;
        let dl_dcov2d = -(conic * sg.conic * conic);
        let j = v.proj.jacobian;
        let cov_view = v.proj.view_covariance;
        let pc = v.proj.view_position;
        let (fx, fy) = (cam.fx, cam.fy);
        let (x, y, z) = (pc.x, pc.y, pc.z);

        let dl_dcov_view = j.transpose() * dl_dcov2d * j;
        let dl_dj = 2.0 * dl_dcov2d * j * cov_view;
        let z2 = z * z;
        let z3 = z2 * z;
        let mut dl_dpc = j.transpose() * sg.mean;
        dl_dpc.x += dl_dj[(0, 2)] * (-fx / z2);
        dl_dpc.y += dl_dj[(1, 2)] * (-fy / z2);
        dl_dpc.z += dl_dj[(0, 0)] * (-fx / z2)
            + dl_dj[(0, 2)] * (2.0 * fx * x / z3)
            + dl_dj[(1, 1)] * (-fy / z2)
            + dl_dj[(1, 2)] * (2.0 * fy * y / z3);
        let dl_dpos: Vector3<f64> = cam.rotation.transpose() * dl_dpc;
        out[0] += dl_dpos.x;
        out[1] += dl_dpos.y;
        out[2] += dl_dpos.z;

        let dl_dsigma = cam.rotation.transpose() * dl_dcov_view * cam.rotation;
        let r = g.rotation_matrix();
        let m = r * Matrix3::from_diagonal(&g.scale);
        let dl_dm = (dl_dsigma + dl_dsigma.transpose()) * m;
        let mut dl_dr = Matrix3::zeros();
        for col in 0..3 {
            let mut ds = 0.0;
            for row in 0..3 {
                ds += dl_dm[(row, col)] * r[(row, col)];
                dl_dr[(row, col)] = dl_dm[(row, col)] * g.scale[col];
            }
            out[3 + col] += ds;
        }
        let dq = quaternion_gradient(&g.rotation, &dl_dr);
        for k in 0..4 {
            out[6 + k] += dq[k];
        }
    }
    Ok(sq_total / n_values)
}

/// Chain rule from `dL/dR` to the raw (unnormalized) wxyz quaternion.
fn quaternion_gradient(q: &[f64; 4], g: &Matrix3<f64>) -> [f64; 4] {
    let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    let [w, x, y, z] = q.map(|v| v / n);
    let gn = [
        2.0 * (-z * g[(0, 1)] + y * g[(0, 2)] + z * g[(1, 0)] - x * g[(1, 2)] - y * g[(2, 0)] + x * g[(2, 1)]),
        2.0 * (y * g[(0, 1)] + z * g[(0, 2)] + y * g[(1, 0)] - 2.0 * x * g[(1, 1)] - w * g[(1, 2)]
            + z * g[(2, 0)]
            + w * g[(2, 1)]
            - 2.0 * x * g[(2, 2)]),
        2.0 * (-2.0 * y * g[(0, 0)] + x * g[(0, 1)] + w * g[(0, 2)] + x * g[(1, 0)] + z * g[(1, 2)]
            - w * g[(2, 0)]
            + z * g[(2, 1)]
            - 2.0 * y * g[(2, 2)]),
        2.0 * (-2.0 * z * g[(0, 0)] - w * g[(0, 1)] + x * g[(0, 2)] + w * g[(1, 0)] - 2.0 * z * g[(1, 1)]
            + y * g[(1, 2)]
            + x * g[(2, 0)]
            + y * g[(2, 1)]),
    ];
    let qn = [w, x, y, z];
    let dot: f64 = gn.iter().zip(&qn).map(|(a, b)| a * b).sum();
    [0, 1, 2, 3].map(|k| (gn[k] - qn[k] * dot) / n)
}

/// Loss and its gradient with respect to `model.to_params()`.
pub fn loss_and_gradient(model: &SplatModel, views: &[(Image, CameraPose)]) -> Result<(f64, Vec<f64>), FitError> {
    if views.is_empty() {
        return Err(FitError::NoViews);
    }
    let weight = 1.0 / views.len() as f64;
    let mut grad = vec![0.0; model.size() * PARAMS_PER_GAUSSIAN];
    let mut total = 0.0;
    for (target, cam) in views {
        total += view_gradient(model, cam, target, weight, &mut grad)?;
    }
    Ok((total * weight, grad))
}

/// Plain gradient descent on the multi-view MSE. Parameters are re-clamped to the
/// gaussian invariants after every step.
pub fn fit_model(
    init: &SplatModel,
    views: &[(Image, CameraPose)],
    steps: usize,
    step_size: f64,
) -> Result<FitResult, FitError> {
    if views.is_empty() {
        return Err(FitError::NoViews);
    }
    let mut model = init.clone();
    let mut trace = Vec::with_capacity(steps + 1);
    for step in 0..steps {
        let (l, grad) = loss_and_gradient(&model, views)?;
        if !l.is_finite() {
            return Err(FitError::NonFiniteLoss { step });
        }
        trace.push(l);
        for (gi, g) in model.gaussians.iter_mut().enumerate() {
            let mut p = g.to_params();
            for k in 0..PARAMS_PER_GAUSSIAN {
                p[k] -= step_size * GROUP_STEP_SCALE[k] * grad[gi * PARAMS_PER_GAUSSIAN + k];
            }
            *g = super::Gaussian3D::from_params(&p).sanitized();
        }
    }
    let last = loss(&model, views)?;
    if !last.is_finite() {
        return Err(FitError::NonFiniteLoss { step: steps });
    }
    trace.push(last);
    Ok(FitResult { model, trace })
}
