//! Radiance-field content over bandwidth-constrained links.
//!
//! The crate is organised by subsystem:
//!
//! - [`splat`]: explicit 3D Gaussian radiance fields, tile-based alpha-blended
//!   rasterization, gradient fitting, pruning/quantization and the model file format.
//! - [`fed`]: device/edge/cloud hierarchical training with pose-aligned union aggregation.
//! - [`face`]: the blendshape face knowledge base, PSNR and synthetic data generators.
//! - [`codec`]: static/dynamic feature selection and rate-budget chunk packing.
//! - [`predictor`]: recurrent receiver-side prediction of untransmitted frames.
//! - [`netsim`]: rendering-architecture latency models and streaming experiments.
//! - [`oracle`]: slow reference implementations used for self-checks.

pub mod codec;
pub mod face;
pub mod fed;
pub mod geometry;
pub mod image;
pub mod netsim;
pub mod oracle;
pub mod predictor;
pub mod splat;
pub mod stats;

pub use codec::{ChunkPlan, DecodedChunk, EncodedChunk};
pub use face::{BlendshapeModel, ExpressionChunk, ExpressionFrame};
pub use fed::{FedSchedule, ResourceLedger};
pub use geometry::RigidTransform;
pub use image::Image;
pub use netsim::{LatencyBreakdown, LinkProfile, RenderWorkload};
pub use predictor::PredictorModel;
pub use splat::{CameraPose, Gaussian3D, Splat2D, SplatModel};
