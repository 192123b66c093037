use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::FramePredictor;
use crate::face::ExpressionFrame;

use crate::face::ExpressionChunk;

const STD_FLOOR: f64 = 1e-3;

/// Per-dimension statistics of the training frames.
///
/// Inputs are normalized with `mean`/`std` (the deviation floored at 1e-3) and
/// rollouts are clamped to `[min, max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl FrameStats {
    /// Statistics over every frame of every sequence; `None` without frames.
    pub fn from_sequences(sequences: &[ExpressionChunk]) -> Option<Self> {
        let dims = sequences.first()?.dims();
        let frames: Vec<&[f64]> = sequences.iter().flat_map(|s| s.frames()).map(|f| f.0.as_slice()).collect();
        let count = frames.len() as f64;
        let mut stats = Self {
            mean: vec![0.0; dims],
            std: vec![0.0; dims],
            min: vec![f64::INFINITY; dims],
            max: vec![f64::NEG_INFINITY; dims],
        };
        for f in &frames {
            for k in 0..dims {
                stats.mean[k] += f[k] / count;
                stats.min[k] = stats.min[k].min(f[k]);
                stats.max[k] = stats.max[k].max(f[k]);
            }
        }
        for f in &frames {
            for k in 0..dims {
                stats.std[k] += (f[k] - stats.mean[k]).powi(2) / count;
            }
        }
        for s in &mut stats.std {
            *s = s.sqrt().max(STD_FLOOR);
        }
        Some(stats)
    }

    pub fn dims(&self) -> usize {
        self.mean.len()
    }

    fn is_valid(&self) -> bool {
        let d = self.dims();
        [&self.std, &self.min, &self.max].iter().all(|v| v.len() == d)
            && self.mean.iter().chain(&self.std).chain(&self.min).chain(&self.max).all(|v| v.is_finite())
            && self.std.iter().all(|&s| s > 0.0)
            && self.min.iter().zip(&self.max).all(|(a, b)| a <= b)
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Single-layer LSTM with a residual linear read-out.
///
/// With gates `i, f, g, o` stacked in that order,
/// `z = Wx·x + Wh·h + b`, `c' = σ(f)·c + σ(i)·tanh(g)`, `h' = σ(o)·tanh(c')` and the
/// one-step prediction is `x + Wy·h' + by`, all in normalized coordinates.
///
/// The flat parameter vector is laid out as `Wx (4H×D)`, `Wh (4H×H)`, `b (4H)`,
/// `Wy (D×H)`, `by (D)`, matrices row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictorModel {
    dims: usize,
    hidden: usize,
    window: usize,
    stats: FrameStats,
    params: Vec<f64>,
}

/// Per-step activations kept for backpropagation.
#[derive(Debug, Clone)]
pub(crate) struct Step {
    pub gates: Vec<f64>,
    pub c: Vec<f64>,
    pub tanh_c: Vec<f64>,
    pub h: Vec<f64>,
    pub y: Vec<f64>,
}

impl PredictorModel {
    pub fn param_count(dims: usize, hidden: usize) -> usize {
        4 * hidden * dims + 4 * hidden * hidden + 4 * hidden + dims * hidden + dims
    }

    /// Random initialization with forget-gate bias 1.
    pub fn init(hidden: usize, window: usize, stats: FrameStats, rng: &mut ChaCha8Rng) -> Self {
        let dims = stats.dims();
        let scale = 1.0 / (hidden as f64).sqrt();
        let mut params: Vec<f64> = (0..Self::param_count(dims, hidden))
            .map(|_| rng.random_range(-scale..scale))
            .collect();
        let mut m = Self { dims, hidden, window, stats, params: Vec::new() };
        let (b0, b1) = m.bias_range();
        params[b0..b1].fill(0.0);
        params[b0 + hidden..b0 + 2 * hidden].fill(1.0);
        let (y0, y1) = m.readout_range();
        for p in &mut params[y0..y1] {
            *p *= 0.1;
        }
        let n = params.len();
        params[n - dims..].fill(0.0);
        m.params = params;
        m
    }

    pub fn from_parts(hidden: usize, window: usize, stats: FrameStats, params: Vec<f64>) -> Option<Self> {
        let dims = stats.dims();
        let ok = dims >= 1
            && hidden >= 1
            && window >= 1
            && stats.is_valid()
            && params.len() == Self::param_count(dims, hidden)
            && params.iter().all(|v| v.is_finite());
        ok.then_some(Self { dims, hidden, window, stats, params })
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn stats(&self) -> &FrameStats {
        &self.stats
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Replaces the flat parameter vector. Panics on a length mismatch.
    pub fn set_params(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.params.len(), "parameter count");
        self.params.copy_from_slice(params);
    }

    pub(crate) fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn wh_offset(&self) -> usize {
        4 * self.hidden * self.dims
    }

    pub(crate) fn bias_range(&self) -> (usize, usize) {
        let start = self.wh_offset() + 4 * self.hidden * self.hidden;
        (start, start + 4 * self.hidden)
    }

    pub(crate) fn readout_range(&self) -> (usize, usize) {
        let start = self.bias_range().1;
        (start, start + self.dims * self.hidden)
    }

    pub fn normalize(&self, frame: &[f64]) -> Vec<f64> {
        frame.iter().zip(&self.stats.mean).zip(&self.stats.std).map(|((v, m), s)| (v - m) / s).collect()
    }

    pub fn denormalize(&self, z: &[f64]) -> Vec<f64> {
        z.iter().zip(&self.stats.mean).zip(&self.stats.std).map(|((v, m), s)| v * s + m).collect()
    }

    /// Runs the cell over normalized inputs from a zero state.
    pub(crate) fn forward(&self, inputs: &[Vec<f64>], params: &[f64]) -> Vec<Step> {
        let (d, hd) = (self.dims, self.hidden);
        let wx = &params[..4 * hd * d];
        let wh = &params[self.wh_offset()..self.wh_offset() + 4 * hd * hd];
        let (b0, b1) = self.bias_range();
        let b = &params[b0..b1];
        let (y0, y1) = self.readout_range();
        let wy = &params[y0..y1];
        let by = &params[y1..];
        let mut h = vec![0.0; hd];
        let mut c = vec![0.0; hd];
        let mut steps = Vec::with_capacity(inputs.len());
        for x in inputs {
            let mut z = b.to_vec();
            for (r, zr) in z.iter_mut().enumerate() {
                let row_x = &wx[r * d..(r + 1) * d];
                let row_h = &wh[r * hd..(r + 1) * hd];
                *zr += row_x.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
                    + row_h.iter().zip(&h).map(|(a, b)| a * b).sum::<f64>();
            }
            let mut gates = vec![0.0; 4 * hd];
            for j in 0..hd {
                gates[j] = sigmoid(z[j]);
                gates[hd + j] = sigmoid(z[hd + j]);
                gates[2 * hd + j] = z[2 * hd + j].tanh();
                gates[3 * hd + j] = sigmoid(z[3 * hd + j]);
            }
            let c_new: Vec<f64> = (0..hd).map(|j| gates[hd + j] * c[j] + gates[j] * gates[2 * hd + j]).collect();
            let tanh_c: Vec<f64> = c_new.iter().map(|v| v.tanh()).collect();
            let h_new: Vec<f64> = (0..hd).map(|j| gates[3 * hd + j] * tanh_c[j]).collect();
            let y: Vec<f64> = (0..d)
                .map(|k| x[k] + by[k] + wy[k * hd..(k + 1) * hd].iter().zip(&h_new).map(|(a, b)| a * b).sum::<f64>())
                .collect();
            h.clone_from(&h_new);
            c.clone_from(&c_new);
            steps.push(Step { gates, c: c_new, tanh_c, h: h_new, y });
        }
        steps
    }

    /// Next normalized frame given a normalized context.
    fn step_ahead(&self, context: &[Vec<f64>]) -> Vec<f64> {
        let start = context.len().saturating_sub(self.window);
        self.forward(&context[start..], &self.params).pop().map(|s| s.y).unwrap_or_default()
    }
}

impl FramePredictor for PredictorModel {
    /// Autoregressive rollout: each prediction, clamped to the training range, joins the
    /// context and the window slides.
    fn predict(&self, seed_frames: &[ExpressionFrame], horizon: usize) -> Vec<ExpressionFrame> {
        if horizon == 0 || seed_frames.is_empty() {
            return Vec::new();
        }
        let mut context: Vec<Vec<f64>> = seed_frames.iter().map(|f| self.normalize(&f.0)).collect();
        let mut out = Vec::with_capacity(horizon);
        for _ in 0..horizon {
            let mut frame = self.denormalize(&self.step_ahead(&context));
            for (k, v) in frame.iter_mut().enumerate() {
                *v = v.clamp(self.stats.min[k], self.stats.max[k]);
            }
            context.push(self.normalize(&frame));
            out.push(ExpressionFrame(frame));
        }
        out
    }

    fn dims(&self) -> Option<usize> {
        Some(self.dims)
    }
}
