use nalgebra::{Matrix2, Matrix2x3, Matrix3, Vector2, Vector3};

use super::camera::CameraPose;
use super::gaussian::Gaussian3D;

/// View-space depth at or below which a gaussian is culled.
pub const NEAR_PLANE: f64 = 0.01;

/// Added to both diagonal entries of every projected covariance (pixels²).
pub const COV2D_REGULARIZATION: f64 = 0.3;

/// Screen-space footprint of a gaussian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Splat2D {
    /// Pixel coordinates; pixel `(row, col)` has its center at `(col + 0.5, row + 0.5)`.
    pub mean2d: Vector2<f64>,
    /// Regularized 2D covariance, pixels².
    pub cov2d: Matrix2<f64>,
    /// Inverse of `cov2d`.
    pub conic: Matrix2<f64>,
    pub depth: f64,
    pub opacity: f64,
    pub color: [f64; 3],
}

/// Projection result with the intermediates needed for backpropagation.
#[derive(Debug, Clone, Copy)]
pub struct Projection {
    pub splat: Splat2D,
    pub view_position: Vector3<f64>,
    pub jacobian: Matrix2x3<f64>,
    /// Covariance rotated into the camera frame, `W·Σ·Wᵀ`.
    pub view_covariance: Matrix3<f64>,
}

/// First-order Jacobian of `(x, y, z) ↦ (fx·x/z + cx, fy·y/z + cy)` at a view-space point.
pub fn projection_jacobian(cam: &CameraPose, pc: &Vector3<f64>) -> Matrix2x3<f64> {
    let (x, y, z) = (pc.x, pc.y, pc.z);
    let iz = 1.0 / z;
    let iz2 = iz * iz;
    Matrix2x3::new(cam.fx * iz, 0.0, -cam.fx * x * iz2, 0.0, cam.fy * iz, -cam.fy * y * iz2)
}

/// Unregularized screen covariance `J·W·Σ·Wᵀ·Jᵀ`.
pub fn projected_covariance(g: &Gaussian3D, cam: &CameraPose) -> Option<Matrix2<f64>> {
    let pc = cam.to_camera(&g.position);
    if pc.z <= NEAR_PLANE {
        return None;
    }
    let j = projection_jacobian(cam, &pc);
    let cov_view = cam.rotation * g.covariance() * cam.rotation.transpose();
    Some(j * cov_view * j.transpose())
}

pub(crate) fn project_full(g: &Gaussian3D, cam: &CameraPose) -> Option<Projection> {
    let pc = cam.to_camera(&g.position);
    if pc.z <= NEAR_PLANE {
        return None;
    }
    let j = projection_jacobian(cam, &pc);
    let view_covariance = cam.rotation * g.covariance() * cam.rotation.transpose();
    let mut cov2d = j * view_covariance * j.transpose();
    // enforce exact symmetry before regularizing
    let off = 0.5 * (cov2d[(0, 1)] + cov2d[(1, 0)]);
    cov2d[(0, 1)] = off;
    cov2d[(1, 0)] = off;
    cov2d[(0, 0)] += COV2D_REGULARIZATION;
    cov2d[(1, 1)] += COV2D_REGULARIZATION;
    let det = cov2d[(0, 0)] * cov2d[(1, 1)] - off * off;
    if !(det.is_finite() && det > 0.0) {
        return None;
    }
    let conic = Matrix2::new(cov2d[(1, 1)], -off, -off, cov2d[(0, 0)]) / det;
    let mean2d = Vector2::new(cam.fx * pc.x / pc.z + cam.cx, cam.fy * pc.y / pc.z + cam.cy);
    Some(Projection {
        splat: Splat2D { mean2d, cov2d, conic, depth: pc.z, opacity: g.opacity, color: g.color },
        view_position: pc,
        jacobian: j,
        view_covariance,
    })
}

/// Projects one gaussian; `None` means it was culled by the near plane.
pub fn project_gaussian(g: &Gaussian3D, cam: &CameraPose) -> Option<Splat2D> {
    project_full(g, cam).map(|p| p.splat)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cam() -> CameraPose {
        CameraPose::new(Matrix3::identity(), Vector3::zeros(), 100.0, 100.0, 32.0, 32.0, 64, 64).unwrap()
    }

    #[test]
    fn on_axis_projects_to_principal_point() {
        let g = Gaussian3D::isotropic(Vector3::new(0.0, 0.0, 2.0), 0.1, 0.5, [1.0; 3]).unwrap();
        let s = project_gaussian(&g, &cam()).unwrap();
        assert_eq!(s.mean2d, Vector2::new(32.0, 32.0));
        assert_eq!(s.depth, 2.0);
    }

    #[test]
    fn near_plane_culls() {
        for z in [0.01, 0.0, -1.0] {
            let g = Gaussian3D::isotropic(Vector3::new(0.0, 0.0, z), 0.1, 0.5, [1.0; 3]).unwrap();
            assert!(project_gaussian(&g, &cam()).is_none());
        }
    }

    #[test]
    fn isotropic_covariance_and_regularization() {
        let g = Gaussian3D::isotropic(Vector3::new(0.0, 0.0, 2.0), 0.1, 0.5, [1.0; 3]).unwrap();
        let raw = projected_covariance(&g, &cam()).unwrap();
        assert!((raw - Matrix2::new(25.0, 0.0, 0.0, 25.0)).norm() < 1e-9);
        let s = project_gaussian(&g, &cam()).unwrap();
        assert!((s.cov2d[(0, 0)] - 25.3).abs() < 1e-9);
        assert!((s.conic * s.cov2d - Matrix2::identity()).norm() < 1e-12);
    }
}
