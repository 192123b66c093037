//! Explicit radiance field made of anisotropic 3D Gaussians.

mod camera;
mod compress;
mod fit;
mod gaussian;
mod io;
mod project;
mod render;

pub use camera::{CameraError, CameraPose};
pub use compress::{prune_by_opacity, quantize_model, quantized_size_bytes, QuantizeError, QuantizedModel};
pub use fit::{fit_model, loss, loss_and_gradient, FitError, FitResult, FIT_BACKGROUND, GROUP_STEP_SCALE};
pub use gaussian::{Gaussian3D, GaussianError, SplatModel, PARAMS_PER_GAUSSIAN};
pub use io::{
    decode_model, decode_quantized, encode_model, encode_quantized, load_model, model_size_bytes,
    save_model, ModelIoError,
};
pub use project::{
    project_gaussian, projected_covariance, projection_jacobian, Projection, Splat2D, COV2D_REGULARIZATION,
    NEAR_PLANE,
};
pub use render::{render, render_with_tile_size, RenderError, ALPHA_MAX, ALPHA_MIN, DEFAULT_TILE_SIZE};
