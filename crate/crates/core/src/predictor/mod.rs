//! Receiver-side prediction of untransmitted frames.
//!
//! [`PredictorModel`] is a single-layer LSTM trained on one-step-ahead targets and
//! rolled out autoregressively over a sliding window. The closed-form baselines
//! [`HoldLast`] and [`LinearExtrapolation`] share the [`FramePredictor`] interface.

mod baseline;
mod io;
mod lstm;
mod train;

use thiserror::Error;

pub use baseline::{baseline_hold_last, baseline_linear, HoldLast, LinearExtrapolation};
pub use io::{decode_predictor, encode_predictor, load_predictor, save_predictor, PredictorIoError};
pub use lstm::{FrameStats, PredictorModel};
pub use train::{loss_and_gradient, one_step_mse, train_predictor, windows, PredictorConfig, TrainOutput, Window};

use crate::face::ExpressionFrame;

#[derive(Debug, Error, PartialEq)]
pub enum PredictorError {
    #[error("no training sequences")]
    NoSequences,
    #[error("sequence {index} has {len} frames; the window needs more than {window}")]
    SequenceTooShort { index: usize, len: usize, window: usize },
    #[error("sequence {index} has {found} dimensions, expected {expected}")]
    DimMismatch { index: usize, expected: usize, found: usize },
    #[error("invalid predictor config: {0}")]
    Config(String),
    #[error("loss became non-finite in epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
}

/// Continues a sequence of frames by `horizon` frames.
pub trait FramePredictor: Sync {
    fn predict(&self, seed_frames: &[ExpressionFrame], horizon: usize) -> Vec<ExpressionFrame>;

    /// Frame dimension the predictor is restricted to, if any.
    fn dims(&self) -> Option<usize> {
        None
    }
}
