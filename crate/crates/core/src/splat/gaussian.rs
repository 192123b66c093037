use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};
use thiserror::Error;

use crate::geometry::RigidTransform;

/// Number of scalar parameters stored per gaussian (position, scale, wxyz quaternion,
/// opacity, color), in file order.
pub const PARAMS_PER_GAUSSIAN: usize = 14;

const MIN_SCALE: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum GaussianError {
    #[error("scale components must be positive and finite, got {0:?}")]
    NonPositiveScale([f64; 3]),
    #[error("rotation quaternion has zero or non-finite norm")]
    DegenerateRotation,
    #[error("position is not finite")]
    NonFinitePosition,
}

/// One explicit radiance-field primitive: mean, anisotropic extent, opacity and color.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian3D {
    pub position: Vector3<f64>,
    /// Per-axis standard deviation before rotation.
    pub scale: Vector3<f64>,
    /// Quaternion as `[w, x, y, z]`.
    pub rotation: [f64; 4],
    pub opacity: f64,
    pub color: [f64; 3],
}

impl Gaussian3D {
    /// Builds a gaussian, normalizing the quaternion and clamping opacity/color into `[0, 1]`.
    pub fn new(
        position: Vector3<f64>,
        scale: Vector3<f64>,
        rotation: [f64; 4],
        opacity: f64,
        color: [f64; 3],
    ) -> Result<Self, GaussianError> {
        if !position.iter().all(|v| v.is_finite()) {
            return Err(GaussianError::NonFinitePosition);
        }
        if !scale.iter().all(|s| s.is_finite() && *s > 0.0) {
            return Err(GaussianError::NonPositiveScale([scale.x, scale.y, scale.z]));
        }
        let norm = rotation.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(GaussianError::DegenerateRotation);
        }
        Ok(Self {
            position,
            scale,
            rotation: rotation.map(|v| v / norm),
            opacity: opacity.clamp(0.0, 1.0),
            color: color.map(|c| c.clamp(0.0, 1.0)),
        })
    }

    pub fn isotropic(position: Vector3<f64>, sigma: f64, opacity: f64, color: [f64; 3]) -> Result<Self, GaussianError> {
        Self::new(position, Vector3::repeat(sigma), [1.0, 0.0, 0.0, 0.0], opacity, color)
    }

    /// Flat parameters in file order.
    pub fn to_params(&self) -> [f64; PARAMS_PER_GAUSSIAN] {
        let p = &self.position;
        let s = &self.scale;
        let q = &self.rotation;
        let c = &self.color;
        [p.x, p.y, p.z, s.x, s.y, s.z, q[0], q[1], q[2], q[3], self.opacity, c[0], c[1], c[2]]
    }

    /// Inverse of [`to_params`](Self::to_params). Values are taken verbatim, so the
    /// result may violate the normalized-quaternion and clamping invariants; use
    /// [`sanitized`](Self::sanitized) to restore them.
    pub fn from_params(p: &[f64; PARAMS_PER_GAUSSIAN]) -> Self {
        Self {
            position: Vector3::new(p[0], p[1], p[2]),
            scale: Vector3::new(p[3], p[4], p[5]),
            rotation: [p[6], p[7], p[8], p[9]],
            opacity: p[10],
            color: [p[11], p[12], p[13]],
        }
    }

    /// Re-imposes the invariants after a parameter update.
    pub fn sanitized(&self) -> Self {
        let norm = self.rotation.iter().map(|v| v * v).sum::<f64>().sqrt();
        let rotation = if norm.is_finite() && norm > 0.0 {
            self.rotation.map(|v| v / norm)
        } else {
            [1.0, 0.0, 0.0, 0.0]
        };
        Self {
            position: self.position,
            scale: self.scale.map(|s| if s.is_finite() { s.max(MIN_SCALE) } else { MIN_SCALE }),
            rotation,
            opacity: self.opacity.clamp(0.0, 1.0),
            color: self.color.map(|c| c.clamp(0.0, 1.0)),
        }
    }

    pub fn unit_quaternion(&self) -> UnitQuaternion<f64> {
        let [w, x, y, z] = self.rotation;
        UnitQuaternion::from_quaternion(Quaternion::new(w, x, y, z))
    }

    /// Rotation matrix of the (normalized) quaternion.
    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        let n = self.rotation.iter().map(|v| v * v).sum::<f64>().sqrt();
        let [w, x, y, z] = self.rotation.map(|v| v / n);
        Matrix3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        )
    }

    /// World-space covariance `R·diag(scale²)·Rᵀ`.
    pub fn covariance(&self) -> Matrix3<f64> {
        let m = self.rotation_matrix() * Matrix3::from_diagonal(&self.scale);
        m * m.transpose()
    }

    /// Moves the gaussian into another frame: position `R·p + t`, orientation
    /// left-multiplied by `R`, scale unchanged.
    pub fn transformed(&self, t: &RigidTransform) -> Self {
        let q = t.rotation_quaternion() * self.unit_quaternion();
        let q = q.quaternion();
        Self {
            position: t.apply(&self.position),
            scale: self.scale,
            rotation: [q.w, q.i, q.j, q.k],
            opacity: self.opacity,
            color: self.color,
        }
    }

    /// Round-trips every parameter through `f32`, the precision of the model file.
    pub fn snapped_f32(&self) -> Self {
        let p = self.to_params().map(|v| v as f32 as f64);
        Self::from_params(&p)
    }
}

/// Ordered collection of gaussians expressed in one coordinate frame.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SplatModel {
    pub gaussians: Vec<Gaussian3D>,
    /// Opaque label of the coordinate frame the gaussians live in.
    pub frame_id: String,
    /// Optional pose of this frame in the world frame.
    pub frame_to_world: Option<RigidTransform>,
}

impl SplatModel {
    pub fn new(gaussians: Vec<Gaussian3D>) -> Self {
        Self { gaussians, frame_id: String::new(), frame_to_world: None }
    }

    pub fn with_frame(mut self, frame_id: impl Into<String>) -> Self {
        self.frame_id = frame_id.into();
        self
    }

    pub fn size(&self) -> usize {
        self.gaussians.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gaussians.is_empty()
    }

    pub fn transformed(&self, t: &RigidTransform) -> Self {
        Self {
            gaussians: self.gaussians.iter().map(|g| g.transformed(t)).collect(),
            frame_id: self.frame_id.clone(),
            frame_to_world: self.frame_to_world,
        }
    }

    pub fn to_params(&self) -> Vec<f64> {
        self.gaussians.iter().flat_map(|g| g.to_params()).collect()
    }

    /// Replaces the gaussians with the parameters in `params` (verbatim, see
    /// [`Gaussian3D::from_params`]).
    pub fn with_params(&self, params: &[f64]) -> Self {
        assert_eq!(params.len(), self.size() * PARAMS_PER_GAUSSIAN);
        let gaussians = params
            .chunks_exact(PARAMS_PER_GAUSSIAN)
            .map(|c| Gaussian3D::from_params(c.try_into().expect("chunk of 14")))
            .collect();
        Self { gaussians, frame_id: self.frame_id.clone(), frame_to_world: self.frame_to_world }
    }

    pub fn snapped_f32(&self) -> Self {
        Self {
            gaussians: self.gaussians.iter().map(Gaussian3D::snapped_f32).collect(),
            frame_id: self.frame_id.clone(),
            frame_to_world: self.frame_to_world,
        }
    }

    pub fn centers(&self) -> Vec<Vector3<f64>> {
        self.gaussians.iter().map(|g| g.position).collect()
    }
}
