use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::lstm::{FrameStats, PredictorModel, Step};
use super::PredictorError;
use crate::face::ExpressionChunk;

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;
const CLIP_NORM: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PredictorConfig {
    pub hidden: usize,
    pub window: usize,
    pub epochs: usize,
    /// Adam learning rate.
    pub step_size: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        Self { hidden: 32, window: 10, epochs: 40, step_size: 0.01, batch_size: 32, seed: 0 }
    }
}

/// `w` normalized inputs and their one-step-ahead targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub model: PredictorModel,
    /// Loss before training followed by the mean minibatch loss of every epoch.
    pub trace: Vec<f64>,
}

/// Every length-`w` window of every sequence, normalized with the model's statistics.
pub fn windows(model: &PredictorModel, sequences: &[ExpressionChunk]) -> Vec<Window> {
    let w = model.window();
    let mut out = Vec::new();
    for seq in sequences {
        let z: Vec<Vec<f64>> = seq.frames().iter().map(|f| model.normalize(&f.0)).collect();
        for start in 0..z.len().saturating_sub(w) {
            out.push(Window { inputs: z[start..start + w].to_vec(), targets: z[start + 1..start + w + 1].to_vec() });
        }
    }
    out
}

fn window_loss(steps: &[Step], window: &Window) -> f64 {
    let count = (window.targets.len() * window.targets[0].len()) as f64;
    steps
        .iter()
        .zip(&window.targets)
        .map(|(s, t)| s.y.iter().zip(t).map(|(y, t)| (y - t).powi(2)).sum::<f64>())
        .sum::<f64>()
        / count
}

/// Mean squared one-step error over the windows, in normalized units.
fn mean_loss(model: &PredictorModel, windows: &[Window]) -> f64 {
    let losses: Vec<f64> = windows.par_iter().map(|w| window_loss(&model.forward(&w.inputs, model.params()), w)).collect();
    losses.iter().sum::<f64>() / windows.len() as f64
}

/// Backpropagation through one window; accumulates `scale · ∂loss/∂θ` into `grad`.
fn window_gradient(model: &PredictorModel, window: &Window, scale: f64, grad: &mut [f64]) -> f64 {
    let (d, hd) = (model.dims(), model.hidden());
    let params = model.params();
    let steps = model.forward(&window.inputs, params);
    let loss = window_loss(&steps, window);
    let coef = 2.0 * scale / (window.targets.len() * d) as f64;

    let wh_off = 4 * hd * d;
    let (b0, _) = model.bias_range();
    let (y0, y1) = model.readout_range();
    let mut dh_next = vec![0.0; hd];
    let mut dc_next = vec![0.0; hd];
    let zeros = vec![0.0; hd];
    for t in (0..steps.len()).rev() {
        let s = &steps[t];
        let x = &window.inputs[t];
        let (h_prev, c_prev) = if t > 0 { (&steps[t - 1].h, &steps[t - 1].c) } else { (&zeros, &zeros) };
        let mut dh = dh_next.clone();
        for k in 0..d {
            let dy = coef * (s.y[k] - window.targets[t][k]);
            grad[y1 + k] += dy;
            for j in 0..hd {
                grad[y0 + k * hd + j] += dy * s.h[j];
                dh[j] += params[y0 + k * hd + j] * dy;
            }
        }
        let mut dz = vec![0.0; 4 * hd];
        for j in 0..hd {
            let (i, f, g, o) = (s.gates[j], s.gates[hd + j], s.gates[2 * hd + j], s.gates[3 * hd + j]);
            let dc = dh[j] * o * (1.0 - s.tanh_c[j] * s.tanh_c[j]) + dc_next[j];
            dz[j] = dc * g * i * (1.0 - i);
            dz[hd + j] = dc * c_prev[j] * f * (1.0 - f);
            dz[2 * hd + j] = dc * i * (1.0 - g * g);
            dz[3 * hd + j] = dh[j] * s.tanh_c[j] * o * (1.0 - o);
            dc_next[j] = dc * f;
        }
        dh_next.fill(0.0);
        for (r, &dzr) in dz.iter().enumerate() {
            if dzr == 0.0 {
                continue;
            }
            grad[b0 + r] += dzr;
            for k in 0..d {
                grad[r * d + k] += dzr * x[k];
            }
            let row = wh_off + r * hd;
            for j in 0..hd {
                grad[row + j] += dzr * h_prev[j];
                dh_next[j] += params[row + j] * dzr;
            }
        }
    }
    loss
}

/// Mean window loss and its gradient with respect to the flat parameters.
pub fn loss_and_gradient(model: &PredictorModel, windows: &[Window]) -> (f64, Vec<f64>) {
    let n = model.params().len();
    let scale = 1.0 / windows.len() as f64;
    let parts: Vec<(f64, Vec<f64>)> = windows
        .par_iter()
        .map(|w| {
            let mut g = vec![0.0; n];
            let loss = window_gradient(model, w, scale, &mut g);
            (loss, g)
        })
        .collect();
    let mut grad = vec![0.0; n];
    let mut loss = 0.0;
    for (l, g) in parts {
        loss += l * scale;
        for (a, b) in grad.iter_mut().zip(g) {
            *a += b;
        }
    }
    (loss, grad)
}

/// Mean squared one-step error over all windows, in original units.
pub fn one_step_mse(model: &PredictorModel, sequences: &[ExpressionChunk]) -> f64 {
    let ws = windows(model, sequences);
    let mut total = 0.0;
    let mut count = 0usize;
    for w in &ws {
        for (s, t) in model.forward(&w.inputs, model.params()).iter().zip(&w.targets) {
            for k in 0..model.dims() {
                total += ((s.y[k] - t[k]) * model.stats().std[k]).powi(2);
                count += 1;
            }
        }
    }
    total / count as f64
}

fn validate(sequences: &[ExpressionChunk], cfg: &PredictorConfig) -> Result<(), PredictorError> {
    if cfg.hidden == 0 || cfg.window == 0 || cfg.batch_size == 0 {
        return Err(PredictorError::Config("hidden, window and batch_size must be at least 1".into()));
    }
    if !(cfg.step_size.is_finite() && cfg.step_size > 0.0) {
        return Err(PredictorError::Config(format!("step_size must be positive, got {}", cfg.step_size)));
    }
    let first = sequences.first().ok_or(PredictorError::NoSequences)?;
    let dims = first.dims();
    if dims == 0 {
        return Err(PredictorError::Config("sequences have no dimensions".into()));
    }
    for (index, seq) in sequences.iter().enumerate() {
        if seq.dims() != dims {
            return Err(PredictorError::DimMismatch { index, expected: dims, found: seq.dims() });
        }
        if seq.len() <= cfg.window {
            return Err(PredictorError::SequenceTooShort { index, len: seq.len(), window: cfg.window });
        }
    }
    Ok(())
}

/// Fits a predictor by minibatch Adam on one-step-ahead error, deterministic per seed.
pub fn train_predictor(sequences: &[ExpressionChunk], cfg: &PredictorConfig) -> Result<TrainOutput, PredictorError> {
    validate(sequences, cfg)?;
    let stats = FrameStats::from_sequences(sequences).ok_or(PredictorError::NoSequences)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = PredictorModel::init(cfg.hidden, cfg.window, stats, &mut rng);
    let mut all = windows(&model, sequences);

    let initial = mean_loss(&model, &all);
    if !initial.is_finite() {
        return Err(PredictorError::NonFiniteLoss { epoch: 0 });
    }
    let mut trace = vec![initial];
    let n = model.params().len();
    let (mut m1, mut m2) = (vec![0.0; n], vec![0.0; n]);
    let mut t = 0i32;
    for epoch in 1..=cfg.epochs {
        all.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in all.chunks(cfg.batch_size) {
            let (loss, mut grad) = loss_and_gradient(&model, batch);
            if !loss.is_finite() {
                return Err(PredictorError::NonFiniteLoss { epoch });
            }
            epoch_loss += loss * batch.len() as f64;
            let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if norm > CLIP_NORM {
                grad.iter_mut().for_each(|g| *g *= CLIP_NORM / norm);
            }
            t += 1;
            let c1 = 1.0 - ADAM_BETA1.powi(t);
            let c2 = 1.0 - ADAM_BETA2.powi(t);
            for (((p, g), a), b) in model.params_mut().iter_mut().zip(&grad).zip(&mut m1).zip(&mut m2) {
                *a = ADAM_BETA1 * *a + (1.0 - ADAM_BETA1) * g;
                *b = ADAM_BETA2 * *b + (1.0 - ADAM_BETA2) * g * g;
                *p -= cfg.step_size * (*a / c1) / ((*b / c2).sqrt() + ADAM_EPS);
            }
        }
        let mean_epoch = epoch_loss / all.len() as f64;
        if !mean_epoch.is_finite() || model.params().iter().any(|p| !p.is_finite()) {
            return Err(PredictorError::NonFiniteLoss { epoch });
        }
        trace.push(mean_epoch);
    }
    Ok(TrainOutput { model, trace })
}
