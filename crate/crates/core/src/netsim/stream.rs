use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use super::{LinkProfile, NetsimError};
use crate::codec::{
    classify_features, coefficient_budget, decode_chunk, encode_chunk, max_frames, payload_bits, wire_size_bytes,
};
use crate::face::{psnr, ExpressionChunk, ExpressionFrame, KnowledgeBase};
use crate::predictor::{baseline_hold_last, FramePredictor};

/// What the receiver does with the frames that were not transmitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Static/dynamic selection, recurrent prediction of the missing dynamic values.
    Full,
    /// Static/dynamic selection, the last received frame is held.
    NoPrediction,
    /// Every dimension is sent for as many whole frames as fit, then held.
    NoSelection,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Full, Scheme::NoPrediction, Scheme::NoSelection];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Full => "full",
            Scheme::NoPrediction => "no-prediction",
            Scheme::NoSelection => "no-selection",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|a| a.name() == s).ok_or_else(|| format!("unknown scheme `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamConfig {
    pub q: u32,
    pub m_dyn: usize,
    /// Per-chunk deadline in seconds; chunk `c` starts at `c·τ`.
    pub tau: f64,
    /// Charge the wire header against the budget as well.
    pub count_header_bits: bool,
    pub scheme: Scheme,
}

impl Default for StreamConfig {
    fn default() -> Self {
        Self { q: 16, m_dyn: 10, tau: 0.1, count_header_bits: false, scheme: Scheme::Full }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub chunk: usize,
    /// 1-based index within the chunk.
    pub frame: usize,
    pub transmitted: bool,
    pub psnr_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChunkRecord {
    pub chunk: usize,
    pub budget_bits: f64,
    /// 0 when the chunk was skipped.
    pub nf: usize,
    pub dynamic_dims: Vec<usize>,
    pub payload_bits: u64,
    pub wire_bytes: usize,
    pub diagnostic: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamResult {
    pub frames: Vec<FrameRecord>,
    pub chunks: Vec<ChunkRecord>,
}

impl StreamResult {
    pub fn mean_psnr(&self) -> f64 {
        self.frames.iter().map(|f| f.psnr_db).sum::<f64>() / self.frames.len() as f64
    }
}

fn validate(cfg: &StreamConfig, chunks: &[ExpressionChunk]) -> Result<usize, NetsimError> {
    if !(2..=16).contains(&cfg.q) {
        return Err(NetsimError::Config(format!("q must be in [2, 16], got {}", cfg.q)));
    }
    if !(cfg.tau.is_finite() && cfg.tau > 0.0) {
        return Err(NetsimError::Config(format!("tau must be positive, got {}", cfg.tau)));
    }
    let m = chunks.first().ok_or_else(|| NetsimError::Config("no chunks to stream".into()))?.dims();
    if cfg.m_dyn > m {
        return Err(NetsimError::Config(format!("m_dyn = {} exceeds M = {m}", cfg.m_dyn)));
    }
    if let Some((chunk, c)) = chunks.iter().enumerate().find(|(_, c)| c.dims() != m) {
        return Err(NetsimError::ChunkShape { chunk, expected: m, found: c.dims() });
    }
    Ok(m)
}

/// Receiver frames for one chunk: the `Nf` decoded frames followed by the
/// reconstruction of the rest.
fn receive(
    index: usize,
    chunk: &ExpressionChunk,
    cfg: &StreamConfig,
    budget_bits: f64,
    predictor: &dyn FramePredictor,
) -> Result<(Vec<ExpressionFrame>, ChunkRecord), NetsimError> {
    let (n, m) = (chunk.len(), chunk.dims());
    let dims: Vec<usize> = match cfg.scheme {
        Scheme::NoSelection => (0..m).collect(),
        _ => classify_features(chunk, cfg.m_dyn),
    };
    let coef_budget = coefficient_budget(budget_bits, m, cfg.count_header_bits);
    let mut record = ChunkRecord {
        chunk: index,
        budget_bits,
        nf: 0,
        dynamic_dims: dims.clone(),
        payload_bits: 0,
        wire_bytes: 0,
        diagnostic: None,
    };
    if max_frames(m, dims.len(), cfg.q, coef_budget, n) == 0 {
        record.diagnostic = Some(format!(
            "budget of {coef_budget} coefficient bits is below the {} bits of the first frame",
            cfg.q as usize * m
        ));
        return Ok((Vec::new(), record));
    }
    let enc = encode_chunk(chunk, &dims, cfg.q, coef_budget)
        .map_err(|e| NetsimError::Conservation { chunk: index, reason: e.to_string() })?;
    let bytes = enc.to_bytes();
    let nf = enc.plan.nf;
    let expected_bits = payload_bits(m, dims.len(), cfg.q, nf);
    if enc.payload_bits != expected_bits || bytes.len() != wire_size_bytes(m, dims.len(), cfg.q, nf) {
        return Err(NetsimError::Conservation {
            chunk: index,
            reason: format!("{} payload bits, {} bytes for Nf = {nf}", enc.payload_bits, bytes.len()),
        });
    }
    let dec = decode_chunk(&bytes).map_err(|e| NetsimError::Conservation { chunk: index, reason: e.to_string() })?;
    record.nf = nf;
    record.payload_bits = enc.payload_bits;
    record.wire_bytes = bytes.len();

    let mut frames = dec.frames.clone();
    let horizon = n - nf;
    match cfg.scheme {
        Scheme::Full if horizon > 0 && !dims.is_empty() => {
            if let Some(d) = predictor.dims().filter(|&d| d != dims.len()) {
                return Err(NetsimError::PredictorDims { chunk: index, predictor: d, dynamic: dims.len() });
            }
            let seed: Vec<ExpressionFrame> = dec.frames.iter().map(|f| f.select(&dims)).collect();
            let predicted = predictor.predict(&seed, horizon);
            let template = dec.frames.last().expect("Nf >= 1").clone();
            for p in predicted {
                let mut f = template.clone();
                for (k, &d) in dims.iter().enumerate() {
                    let (lo, hi) = dec.ranges[d];
                    f.0[d] = p.0[k].clamp(lo, hi);
                }
                frames.push(f);
            }
        }
        _ => frames.extend(baseline_hold_last(&dec.frames, horizon)),
    }
    Ok((frames, record))
}

/// Streams `chunks` over `link`: per chunk, classify, pack under `τ × rate`, encode,
/// decode, fill the untransmitted frames, and score every frame by PSNR against the
/// ground-truth rendering. Chunks whose budget cannot carry the first frame are
/// recorded as skipped and concealed with the previous reconstruction.
pub fn simulate_stream(
    kb: &dyn KnowledgeBase,
    chunks: &[ExpressionChunk],
    link: &LinkProfile,
    cfg: &StreamConfig,
    predictor: &dyn FramePredictor,
) -> Result<StreamResult, NetsimError> {
    let m = validate(cfg, chunks)?;
    let mut result = StreamResult { frames: Vec::new(), chunks: Vec::new() };
    let mut last = ExpressionFrame(vec![0.0; m]);
    for (index, chunk) in chunks.iter().enumerate() {
        let budget = cfg.tau * link.rate_at(index as f64 * cfg.tau);
        let (mut received, record) = receive(index, chunk, cfg, budget, predictor)?;
        let nf = record.nf;
        if nf == 0 {
            received = vec![last.clone(); chunk.len()];
        }
        last = received.last().expect("non-empty chunk").clone();
        let scores: Vec<f64> = chunk
            .frames()
            .par_iter()
            .zip(&received)
            .map(|(truth, rec)| Ok(psnr(&kb.render(truth)?, &kb.render(rec)?)?))
            .collect::<Result<_, NetsimError>>()?;
        result.frames.extend(scores.into_iter().enumerate().map(|(i, psnr_db)| FrameRecord {
            chunk: index,
            frame: i + 1,
            transmitted: i < nf,
            psnr_db,
        }));
        result.chunks.push(record);
    }
    Ok(result)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub scheme: Scheme,
    pub rate_bps: f64,
    pub budget_bits: f64,
    /// Smallest `Nf` over the chunks.
    pub nf: usize,
    pub mean_psnr_db: f64,
}

/// Runs every scheme at every constant rate; rows are ordered by rate, then scheme.
pub fn sweep_rate(
    kb: &dyn KnowledgeBase,
    chunks: &[ExpressionChunk],
    rates: &[f64],
    cfg: &StreamConfig,
    predictor: &dyn FramePredictor,
) -> Result<Vec<SweepRow>, NetsimError> {
    if rates.len() < 2 {
        return Err(NetsimError::TooFewRates);
    }
    let rows: Vec<Vec<SweepRow>> = rates
        .par_iter()
        .map(|&rate| {
            let link = LinkProfile::symmetric(rate)?;
            Scheme::ALL
                .iter()
                .map(|&scheme| {
                    let run = simulate_stream(kb, chunks, &link, &StreamConfig { scheme, ..cfg.clone() }, predictor)?;
                    Ok(SweepRow {
                        scheme,
                        rate_bps: rate,
                        budget_bits: cfg.tau * rate,
                        nf: run.chunks.iter().map(|c| c.nf).min().unwrap_or(0),
                        mean_psnr_db: run.mean_psnr(),
                    })
                })
                .collect()
        })
        .collect::<Result<_, NetsimError>>()?;
    Ok(rows.into_iter().flatten().collect())
}
