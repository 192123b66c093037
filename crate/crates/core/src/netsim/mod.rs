//! Rendering-architecture latency models and streaming experiments.

mod benchmark;
mod csv;
mod latency;
mod stream;

use thiserror::Error;

pub use benchmark::{Benchmark, BenchmarkConfig};
pub use csv::{write_frames_csv, write_latency_csv, write_sweep_csv};
pub use latency::{latency, Architecture, LatencyBreakdown, RenderWorkload};
pub use stream::{
    simulate_stream, sweep_rate, ChunkRecord, FrameRecord, Scheme, StreamConfig, StreamResult, SweepRow,
};

use crate::face::FaceError;

#[derive(Debug, Error, PartialEq)]
pub enum NetsimError {
    #[error("invalid link profile: {0}")]
    Link(String),
    #[error("invalid workload: {0}")]
    Workload(String),
    #[error("{which} compute rate is zero but {which} work is {work}")]
    ZeroComputeRate { which: &'static str, work: f64 },
    #[error("invalid stream config: {0}")]
    Config(String),
    #[error("chunk {chunk} has {found} dimensions, expected {expected}")]
    ChunkShape { chunk: usize, expected: usize, found: usize },
    #[error("predictor works on {predictor} dimensions but chunk {chunk} has {dynamic} dynamic ones")]
    PredictorDims { chunk: usize, predictor: usize, dynamic: usize },
    #[error("sweep needs at least two rates")]
    TooFewRates,
    #[error("codec cross-check failed in chunk {chunk}: {reason}")]
    Conservation { chunk: usize, reason: String },
    #[error(transparent)]
    Face(#[from] FaceError),
}

/// Transmission link. Rates in bits/s; an optional trace overrides the uplink rate
/// as a step function of time.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkProfile {
    uplink_rate: f64,
    downlink_rate: f64,
    propagation_delay: f64,
    trace: Vec<(f64, f64)>,
}

fn positive(name: &str, v: f64) -> Result<(), NetsimError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(NetsimError::Link(format!("{name} must be positive and finite, got {v}")))
    }
}

impl LinkProfile {
    pub fn new(uplink_rate: f64, downlink_rate: f64, propagation_delay: f64) -> Result<Self, NetsimError> {
        positive("uplink_rate", uplink_rate)?;
        positive("downlink_rate", downlink_rate)?;
        if !(propagation_delay.is_finite() && propagation_delay >= 0.0) {
            return Err(NetsimError::Link(format!("propagation_delay must be non-negative, got {propagation_delay}")));
        }
        Ok(Self { uplink_rate, downlink_rate, propagation_delay, trace: Vec::new() })
    }

    /// Same rate both ways, no propagation delay.
    pub fn symmetric(rate: f64) -> Result<Self, NetsimError> {
        Self::new(rate, rate, 0.0)
    }

    /// Attaches a `(time s, rate bits/s)` trace with strictly increasing times.
    pub fn with_trace(mut self, trace: Vec<(f64, f64)>) -> Result<Self, NetsimError> {
        for (i, &(t, r)) in trace.iter().enumerate() {
            positive("trace rate", r)?;
            if !t.is_finite() || (i > 0 && t <= trace[i - 1].0) {
                return Err(NetsimError::Link(format!("trace times must be strictly increasing (entry {i})")));
            }
        }
        self.trace = trace;
        Ok(self)
    }

    pub fn uplink_rate(&self) -> f64 {
        self.uplink_rate
    }

    pub fn downlink_rate(&self) -> f64 {
        self.downlink_rate
    }

    pub fn propagation_delay(&self) -> f64 {
        self.propagation_delay
    }

    pub fn trace(&self) -> &[(f64, f64)] {
        &self.trace
    }

    /// Uplink rate in effect at time `t`: the last trace entry at or before `t`, else
    /// the nominal uplink rate.
    pub fn rate_at(&self, t: f64) -> f64 {
        self.trace.iter().take_while(|(ts, _)| *ts <= t).last().map_or(self.uplink_rate, |&(_, r)| r)
    }
}
