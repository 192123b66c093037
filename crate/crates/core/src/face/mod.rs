//! Semantic knowledge base for face streaming: a linear blendshape renderer shared by
//! transmitter and receiver, the PSNR metric, and seeded synthetic data.

mod io;
mod synth;

use thiserror::Error;

pub use io::{decode_kb, encode_kb, load_kb, save_kb, KbIoError};
pub use synth::{gen_synthetic_kb, gen_trajectory};

use crate::image::{Image, ImageError};

/// PSNR reported for identical images.
pub const PSNR_CAP_DB: f64 = 100.0;

#[derive(Debug, Error, PartialEq)]
pub enum FaceError {
    #[error("expression has {got} coefficients, knowledge base expects {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("knowledge base needs at least one basis image")]
    NoBases,
    #[error("chunk must contain at least one frame")]
    EmptyChunk,
    #[error("frame {frame} has {got} coefficients, expected {expected}")]
    RaggedChunk { frame: usize, got: usize, expected: usize },
    #[error("dynamic dimension {0} is out of range")]
    DimOutOfRange(usize),
    #[error(transparent)]
    Image(#[from] ImageError),
}

/// Per-frame expression coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpressionFrame(pub Vec<f64>);

impl ExpressionFrame {
    pub fn dims(&self) -> usize {
        self.0.len()
    }

    /// The listed coefficients, in the given order.
    pub fn select(&self, dims: &[usize]) -> ExpressionFrame {
        ExpressionFrame(dims.iter().map(|&d| self.0[d]).collect())
    }
}

/// `N ≥ 1` consecutive frames of uniform dimension `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpressionChunk {
    frames: Vec<ExpressionFrame>,
}

impl ExpressionChunk {
    pub fn new(frames: Vec<ExpressionFrame>) -> Result<Self, FaceError> {
        let first = frames.first().ok_or(FaceError::EmptyChunk)?.dims();
        if let Some((i, f)) = frames.iter().enumerate().find(|(_, f)| f.dims() != first) {
            return Err(FaceError::RaggedChunk { frame: i, got: f.dims(), expected: first });
        }
        Ok(Self { frames })
    }

    pub fn frames(&self) -> &[ExpressionFrame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.frames[0].dims()
    }

    /// Values of dimension `d` across all frames.
    pub fn column(&self, d: usize) -> Vec<f64> {
        self.frames.iter().map(|f| f.0[d]).collect()
    }

    /// The chunk restricted to the listed dimensions.
    pub fn select(&self, dims: &[usize]) -> ExpressionChunk {
        ExpressionChunk { frames: self.frames.iter().map(|f| f.select(dims)).collect() }
    }
}

/// Anything that turns an expression vector into an image.
pub trait KnowledgeBase: Sync {
    fn dims(&self) -> usize;
    fn render(&self, e: &ExpressionFrame) -> Result<Image, FaceError>;
}

/// `clamp(base + Σ eᵢ·basisᵢ, 0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlendshapeModel {
    base: Image,
    bases: Vec<Image>,
}

impl BlendshapeModel {
    pub fn new(base: Image, bases: Vec<Image>) -> Result<Self, FaceError> {
        if bases.is_empty() {
            return Err(FaceError::NoBases);
        }
        for b in &bases {
            base.same_shape(b)?;
        }
        Ok(Self { base, bases })
    }

    pub fn base(&self) -> &Image {
        &self.base
    }

    pub fn bases(&self) -> &[Image] {
        &self.bases
    }

    pub fn height(&self) -> usize {
        self.base.height()
    }

    pub fn width(&self) -> usize {
        self.base.width()
    }
}

impl KnowledgeBase for BlendshapeModel {
    fn dims(&self) -> usize {
        self.bases.len()
    }

    fn render(&self, e: &ExpressionFrame) -> Result<Image, FaceError> {
        render_face(self, e)
    }
}

pub fn render_face(kb: &BlendshapeModel, e: &ExpressionFrame) -> Result<Image, FaceError> {
    if e.dims() != kb.bases.len() {
        return Err(FaceError::LengthMismatch { got: e.dims(), expected: kb.bases.len() });
    }
    let mut out = kb.base.data().to_vec();
    for (coef, basis) in e.0.iter().zip(&kb.bases) {
        if *coef == 0.0 {
            continue;
        }
        for (o, b) in out.iter_mut().zip(basis.data()) {
            *o += coef * b;
        }
    }
    for v in &mut out {
        *v = v.clamp(0.0, 1.0);
    }
    Ok(Image::from_vec(kb.height(), kb.width(), out)?)
}

/// Peak signal-to-noise ratio with peak 1.0; identical images give [`PSNR_CAP_DB`].
pub fn psnr(a: &Image, b: &Image) -> Result<f64, FaceError> {
    let mse = a.mse(b)?;
    if mse == 0.0 {
        return Ok(PSNR_CAP_DB);
    }
    Ok(10.0 * (1.0 / mse).log10())
}
