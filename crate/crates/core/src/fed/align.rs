use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

use crate::geometry::RigidTransform;

#[derive(Debug, Error, PartialEq)]
pub enum AlignError {
    #[error("need at least 3 correspondences, got {0}")]
    TooFewPoints(usize),
    #[error("point sets differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("correspondences are collinear or coincident; rotation is not determined")]
    Degenerate,
}

/// Least-squares rigid transform (unit scale) with `R·src + t ≈ dst`.
pub fn align_pose(src: &[Vector3<f64>], dst: &[Vector3<f64>]) -> Result<RigidTransform, AlignError> {
    if src.len() != dst.len() {
        return Err(AlignError::LengthMismatch(src.len(), dst.len()));
    }
    if src.len() < 3 {
        return Err(AlignError::TooFewPoints(src.len()));
    }
    let n = src.len() as f64;
    let cs = src.iter().sum::<Vector3<f64>>() / n;
    let cd = dst.iter().sum::<Vector3<f64>>() / n;
    let mut cross = Matrix3::zeros();
    for (s, d) in src.iter().zip(dst) {
        cross += (s - cs) * (d - cd).transpose();
    }
    let svd = cross.svd(true, true);
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    if !(sv[0] > 0.0) || sv[1] <= 1e-12 * sv[0] {
        return Err(AlignError::Degenerate);
    }
    let u = svd.u.expect("requested");
    let v = svd.v_t.expect("requested").transpose();
    let sign = (v * u.transpose()).determinant().signum();
    let rotation = v * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, sign)) * u.transpose();
    Ok(RigidTransform::new(rotation, cd - rotation * cs))
}
