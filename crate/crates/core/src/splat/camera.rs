use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

use crate::geometry::{is_rotation, RigidTransform};

#[derive(Debug, Error, PartialEq)]
pub enum CameraError {
    #[error("extrinsic rotation is not orthonormal with det +1")]
    NotARotation,
    #[error("image size must be at least 1x1, got {height}x{width}")]
    EmptyImage { height: usize, width: usize },
    #[error("focal lengths must be positive and finite")]
    BadFocal,
    #[error("look-at eye and target coincide or up is parallel to the view direction")]
    DegenerateLookAt,
}

/// Pinhole camera: world→camera rigid extrinsic plus intrinsics in pixels.
///
/// Camera axes follow the vision convention: x right, y down, z forward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub height: usize,
    pub width: usize,
}

impl CameraPose {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        rotation: Matrix3<f64>,
        translation: Vector3<f64>,
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        height: usize,
        width: usize,
    ) -> Result<Self, CameraError> {
        if !is_rotation(&rotation, 1e-9) {
            return Err(CameraError::NotARotation);
        }
        if height == 0 || width == 0 {
            return Err(CameraError::EmptyImage { height, width });
        }
        if !(fx.is_finite() && fy.is_finite() && fx > 0.0 && fy > 0.0) {
            return Err(CameraError::BadFocal);
        }
        Ok(Self { rotation, translation, fx, fy, cx, cy, height, width })
    }

    /// Identity extrinsic with the principal point at the image center.
    pub fn identity(focal: f64, height: usize, width: usize) -> Result<Self, CameraError> {
        Self::new(
            Matrix3::identity(),
            Vector3::zeros(),
            focal,
            focal,
            width as f64 / 2.0,
            height as f64 / 2.0,
            height,
            width,
        )
    }

    /// Camera at `eye` looking at `target`; `up` fixes the roll.
    pub fn look_at(
        eye: Vector3<f64>,
        target: Vector3<f64>,
        up: Vector3<f64>,
        focal: f64,
        height: usize,
        width: usize,
    ) -> Result<Self, CameraError> {
        let forward = target - eye;
        if forward.norm() < 1e-12 {
            return Err(CameraError::DegenerateLookAt);
        }
        let z = forward.normalize();
        let x = z.cross(&up);
        if x.norm() < 1e-12 {
            return Err(CameraError::DegenerateLookAt);
        }
        let x = x.normalize();
        let y = z.cross(&x);
        let rotation = Matrix3::from_rows(&[x.transpose(), y.transpose(), z.transpose()]);
        let translation = -(rotation * eye);
        Self::new(rotation, translation, focal, focal, width as f64 / 2.0, height as f64 / 2.0, height, width)
    }

    pub fn extrinsic(&self) -> RigidTransform {
        RigidTransform::new(self.rotation, self.translation)
    }

    pub fn to_camera(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// The same physical camera, re-expressed for points given in a frame whose pose
    /// relative to this camera's world frame is `frame_to_world`.
    pub fn in_frame(&self, frame_to_world: &RigidTransform) -> Self {
        let ext = self.extrinsic().compose(frame_to_world);
        Self { rotation: ext.rotation, translation: ext.translation, ..*self }
    }

    /// Inverse of [`in_frame`](Self::in_frame): this camera is expressed in the frame
    /// of `frame_to_world`; return it expressed in the world frame.
    pub fn to_world(&self, frame_to_world: &RigidTransform) -> Self {
        self.in_frame(&frame_to_world.inverse())
    }

    pub fn pixel_count(&self) -> usize {
        self.height * self.width
    }
}
