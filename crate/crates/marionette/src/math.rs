//! Small numeric helpers shared across the crate: yaw extraction, quaternion
//! distances, and sagittal (x–z plane) mirror maps for vectors and rotations.

use nalgebra::{Quaternion, UnitQuaternion, Vector3};

/// Yaw (rotation about world z) of a quaternion under the z-y-x Euler
/// convention: `yaw = atan2(2(wz + xy), 1 − 2(y² + z²))`.
pub fn yaw_of(q: &UnitQuaternion<f64>) -> f64 {
    let (w, x, y, z) = (q.w, q.i, q.j, q.k);
    (2.0 * (w * z + x * y)).atan2(1.0 - 2.0 * (y * y + z * z))
}

/// Rotation about world z by `yaw`.
pub fn yaw_quat(yaw: f64) -> UnitQuaternion<f64> {
    UnitQuaternion::from_axis_angle(&Vector3::z_axis(), yaw)
}

/// Geodesic angle between two rotations, computed as
/// `2·arcsin(min(1, ‖vec(a⁻¹·b)‖))`. Symmetric in its arguments and immune to
/// the quaternion double cover.
pub fn quat_angle(a: &UnitQuaternion<f64>, b: &UnitQuaternion<f64>) -> f64 {
    let d = a.inverse() * b;
    2.0 * d.vector().norm().min(1.0).asin()
}

/// Mirror of an ordinary (polar) vector across the x–z plane: y negated.
pub fn mirror_vec(v: &Vector3<f64>) -> Vector3<f64> {
    Vector3::new(v.x, -v.y, v.z)
}

/// Mirror of an axial vector (angular velocity, torque axis) across the x–z
/// plane: x and z negated.
pub fn mirror_axial(v: &Vector3<f64>) -> Vector3<f64> {
    Vector3::new(-v.x, v.y, -v.z)
}

/// Mirror of a rotation across the x–z plane.
///
/// Conjugating a rotation matrix R by the reflection diag(1,−1,1) equals
/// conjugating by a half-turn about world y, so on quaternions the map is the
/// exact group homomorphism `(w,x,y,z) ↦ (w,−x,y,−z)`. Negating components
/// preserves unit norm exactly, hence `new_unchecked`.
pub fn mirror_quat(q: &UnitQuaternion<f64>) -> UnitQuaternion<f64> {
    UnitQuaternion::new_unchecked(Quaternion::new(q.w, -q.i, q.j, -q.k))
}

/// Skew-symmetric cross-product matrix of `v`, i.e. `skew(v) * w == v × w`.
pub fn skew(v: &Vector3<f64>) -> nalgebra::Matrix3<f64> {
    nalgebra::Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::UnitQuaternion;

    #[test]
    fn yaw_of_pure_yaw_rotation() {
        for &psi in &[-2.5, -0.3, 0.0, 0.7, 3.0] {
            let q = yaw_quat(psi);
            assert_relative_eq!(yaw_of(&q), psi, epsilon = 1e-12);
        }
    }

    #[test]
    fn yaw_of_matches_rotation_matrix_heading() {
        // Independent extraction: heading of the rotated x axis.
        let q = UnitQuaternion::from_euler_angles(0.3, -0.4, 1.1);
        let fwd = q * Vector3::x();
        assert_relative_eq!(yaw_of(&q), fwd.y.atan2(fwd.x), epsilon = 1e-12);
    }

    #[test]
    fn quat_angle_of_known_rotation() {
        let a = UnitQuaternion::identity();
        let b = UnitQuaternion::from_axis_angle(&Vector3::x_axis(), 0.8);
        assert_relative_eq!(quat_angle(&a, &b), 0.8, epsilon = 1e-12);
        // Symmetric and double-cover safe.
        assert_relative_eq!(quat_angle(&b, &a), 0.8, epsilon = 1e-12);
        let b_neg = UnitQuaternion::new_unchecked(-b.into_inner());
        assert_relative_eq!(quat_angle(&a, &b_neg), 0.8, epsilon = 1e-12);
    }

    #[test]
    fn mirror_quat_is_matrix_conjugation() {
        let m = nalgebra::Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, 1.0));
        let q = UnitQuaternion::from_euler_angles(0.4, -0.9, 2.2);
        let conj = m * q.to_rotation_matrix().into_inner() * m;
        let mirrored = mirror_quat(&q).to_rotation_matrix().into_inner();
        assert_relative_eq!(conj, mirrored, epsilon = 1e-12);
    }

    #[test]
    fn mirror_quat_is_involution() {
        let q = UnitQuaternion::from_euler_angles(-1.2, 0.5, 0.9);
        let twice = mirror_quat(&mirror_quat(&q));
        assert_eq!(twice.into_inner(), q.into_inner());
    }

    #[test]
    fn skew_matches_cross_product() {
        let a = Vector3::new(0.3, -1.1, 2.0);
        let b = Vector3::new(-0.7, 0.2, 0.5);
        assert_relative_eq!(skew(&a) * b, a.cross(&b), epsilon = 1e-15);
    }
}
