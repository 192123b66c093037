use nalgebra::{Matrix3, UnitQuaternion, Vector3};

/// Rigid transform `x ↦ R·x + t` with `R` a proper rotation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self { rotation: Matrix3::identity(), translation: Vector3::zeros() }
    }

    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self { rotation, translation }
    }

    /// Rotation about `axis` by `angle` radians followed by a translation.
    pub fn from_axis_angle(axis: Vector3<f64>, angle: f64, translation: Vector3<f64>) -> Self {
        let rot = UnitQuaternion::from_scaled_axis(axis.normalize() * angle);
        Self { rotation: rot.to_rotation_matrix().into_inner(), translation }
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self { rotation: rt, translation: -(rt * self.translation) }
    }

    /// `self ∘ inner`: applies `inner` first.
    pub fn compose(&self, inner: &RigidTransform) -> Self {
        Self {
            rotation: self.rotation * inner.rotation,
            translation: self.rotation * inner.translation + self.translation,
        }
    }

    pub fn rotation_quaternion(&self) -> UnitQuaternion<f64> {
        UnitQuaternion::from_matrix(&self.rotation)
    }

    /// Angle of the relative rotation between `self` and `other`, radians.
    pub fn rotation_angle_to(&self, other: &RigidTransform) -> f64 {
        let rel = self.rotation.transpose() * other.rotation;
        // atan2 keeps full precision near zero, where acos of the trace does not
        let skew = Vector3::new(rel[(2, 1)] - rel[(1, 2)], rel[(0, 2)] - rel[(2, 0)], rel[(1, 0)] - rel[(0, 1)]);
        (skew.norm() / 2.0).atan2((rel.trace() - 1.0) / 2.0)
    }
}

/// True when `r` is orthonormal with determinant +1 to within `tol`.
pub fn is_rotation(r: &Matrix3<f64>, tol: f64) -> bool {
    let gram = r.transpose() * r - Matrix3::identity();
    gram.iter().all(|v| v.abs() <= tol) && (r.determinant() - 1.0).abs() <= tol
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_angle_resolves_tiny_rotations() {
        let a = RigidTransform::from_axis_angle(Vector3::new(0.2, 1.0, 0.1), 1.1, Vector3::zeros());
        for angle in [1e-12, 1e-6, 0.5, 3.0] {
            let b = a.compose(&RigidTransform::from_axis_angle(Vector3::new(1.0, 0.0, 1.0), angle, Vector3::zeros()));
            assert!((a.rotation_angle_to(&b) - angle).abs() <= 1e-12 * angle.max(1.0), "{angle}");
        }
    }

    #[test]
    fn compose_with_inverse_is_identity() {
        let t = RigidTransform::from_axis_angle(Vector3::new(1.0, 2.0, -0.5), 0.7, Vector3::new(0.3, -1.0, 2.0));
        let id = t.compose(&t.inverse());
        assert!((id.rotation - Matrix3::identity()).norm() < 1e-12);
        assert!(id.translation.norm() < 1e-12);
        assert!(is_rotation(&t.rotation, 1e-12));
    }

    #[test]
    fn composition_applies_inner_first() {
        let a = RigidTransform::from_axis_angle(Vector3::z(), 0.3, Vector3::new(1.0, 0.0, 0.0));
        let b = RigidTransform::from_axis_angle(Vector3::x(), -1.1, Vector3::new(0.0, 2.0, 0.0));
        let p = Vector3::new(0.2, 0.4, -0.9);
        assert!((a.compose(&b).apply(&p) - a.apply(&b.apply(&p))).norm() < 1e-12);
    }
}
