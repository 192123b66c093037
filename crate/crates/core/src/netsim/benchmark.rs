use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{NetsimError, StreamConfig};
use crate::face::{gen_synthetic_kb, gen_trajectory, BlendshapeModel, ExpressionChunk};
use crate::predictor::{train_predictor, PredictorConfig, PredictorError, PredictorModel};

const TRAIN_STREAM: u64 = 0x7261_696e_5eed;

/// Parameters of the synthetic streaming benchmark: sinusoidal dynamic dimensions
/// `0..m_dyn` over a random blendshape knowledge base.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkConfig {
    pub m: usize,
    pub m_dyn: usize,
    pub q: u32,
    pub n: usize,
    pub chunks: usize,
    pub noise_std: f64,
    pub height: usize,
    pub width: usize,
    pub tau: f64,
    pub train_sequences: usize,
    pub predictor: PredictorConfig,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            m: 20,
            m_dyn: 5,
            q: 8,
            n: 100,
            chunks: 4,
            noise_std: 0.001,
            height: 32,
            width: 32,
            tau: 0.1,
            train_sequences: 24,
            predictor: PredictorConfig::default(),
        }
    }
}

impl BenchmarkConfig {
    pub fn stream_config(&self) -> StreamConfig {
        StreamConfig { q: self.q, m_dyn: self.m_dyn, tau: self.tau, ..StreamConfig::default() }
    }

    pub fn dynamic_dims(&self) -> Vec<usize> {
        (0..self.m_dyn).collect()
    }

    /// Knowledge base and test chunks for one data seed.
    pub fn scenario(&self, seed: u64) -> Result<(BlendshapeModel, Vec<ExpressionChunk>), NetsimError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kb = gen_synthetic_kb(rng.random(), self.m, self.height, self.width)?;
        let dims = self.dynamic_dims();
        let chunks = (0..self.chunks)
            .map(|_| gen_trajectory(rng.random(), self.m, self.n, &dims, self.noise_std))
            .collect::<Result<_, _>>()?;
        Ok((kb, chunks))
    }

    /// Trains the receiver predictor on dynamic dimensions of independent trajectories.
    pub fn train(&self, seed: u64) -> Result<(PredictorModel, Vec<f64>), PredictorError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ TRAIN_STREAM);
        let dims = self.dynamic_dims();
        let sequences: Vec<ExpressionChunk> = (0..self.train_sequences)
            .map(|_| {
                gen_trajectory(rng.random(), self.m, self.n, &dims, self.noise_std)
                    .expect("dimensions in range")
                    .select(&dims)
            })
            .collect();
        let out = train_predictor(&sequences, &PredictorConfig { seed, ..self.predictor.clone() })?;
        Ok((out.model, out.trace))
    }
}

/// A ready-to-run benchmark instance.
#[derive(Debug, Clone)]
pub struct Benchmark {
    pub kb: BlendshapeModel,
    pub chunks: Vec<ExpressionChunk>,
    pub predictor: PredictorModel,
}

impl Benchmark {
    /// Builds the scenario for `seed` and trains the predictor with the same seed.
    pub fn build(cfg: &BenchmarkConfig, seed: u64) -> Result<Self, NetsimError> {
        let (kb, chunks) = cfg.scenario(seed)?;
        let (predictor, _) = cfg.train(seed).map_err(|e| NetsimError::Config(format!("predictor training: {e}")))?;
        Ok(Self { kb, chunks, predictor })
    }
}
