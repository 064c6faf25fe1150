use nalgebra::{Matrix3, Vector3};

use super::{CameraModel, GeometryError};

const ORTHONORMAL_TOL: f64 = 1e-9;

/// Rigid transform mapping points of one frame into another:
/// `p_dst = rotation * p_src + translation`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Pose {
    /// Builds a pose, rejecting rotations that are not orthonormal with
    /// determinant +1 (checked to 1e-9).
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self, GeometryError> {
        let deviation = rotation_deviation(&rotation);
        if deviation > ORTHONORMAL_TOL {
            return Err(GeometryError::NonOrthonormalRotation { deviation });
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Applies the transform to a point.
    pub fn transform(&self, point: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * point + self.translation
    }
}

/// How far `r` is from a proper rotation: max of `|R^T R - I|` entries and
/// `|det R - 1|`.
pub(crate) fn rotation_deviation(r: &Matrix3<f64>) -> f64 {
    let gram = r.transpose() * r - Matrix3::identity();
    let ortho = gram.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    ortho.max((r.determinant() - 1.0).abs())
}

/// Rotation by `theta_deg` about the world `y` axis, with zero translation:
///
/// ```text
/// [  cos t  0  sin t ]
/// [    0    1    0   ]
/// [ -sin t  0  cos t ]
/// ```
pub fn azimuth_rotation(theta_deg: f64) -> Pose {
    let t = theta_deg.to_radians();
    let (s, c) = t.sin_cos();
    Pose {
        rotation: Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c),
        translation: Vector3::zeros(),
    }
}

/// Skew-symmetric matrix of `t`, satisfying `skew(t) * v == t.cross(v)`.
pub fn skew(t: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -t.z, t.y, t.z, 0.0, -t.x, -t.y, t.x, 0.0)
}

/// Relative pose mapping camera-frame coordinates of `view_a` into those of
/// `view_b`: `p_b = R * p_a + t`.
///
/// For two canonical-rig views the rotation is a pure `y`-axis rotation by
/// the azimuth difference and the translation has the form `(t_x, 0, t_z)`.
pub fn relative_pose(view_a: &CameraModel, view_b: &CameraModel) -> Result<Pose, GeometryError> {
    let a = view_a.world_to_camera()?;
    let b = view_b.world_to_camera()?;
    let rotation = b.rotation * a.rotation.transpose();
    let translation = b.translation - rotation * a.translation;
    Ok(Pose {
        rotation,
        translation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CameraModel;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mat_abs_diff(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
        (a - b).iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    #[test]
    fn azimuth_rotation_zero_is_identity() {
        let p = azimuth_rotation(0.0);
        assert_eq!(p.rotation, Matrix3::identity());
        assert_eq!(p.translation, Vector3::zeros());
    }

    #[test]
    fn azimuth_rotation_quarter_turn() {
        let p = azimuth_rotation(90.0);
        let expected = Matrix3::new(0.0, 0.0, 1.0, 0.0, 1.0, 0.0, -1.0, 0.0, 0.0);
        assert!(mat_abs_diff(&p.rotation, &expected) < 1e-15);
    }

    #[test]
    fn azimuth_rotation_thirty_degrees_matches_independent_trig() {
        // cos(30 deg) = sqrt(3)/2, computed without the trig path under test.
        let p = azimuth_rotation(30.0);
        assert_abs_diff_eq!(p.rotation[(0, 0)], 3.0f64.sqrt() / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.rotation[(0, 2)], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn skew_of_zero_is_zero() {
        assert_eq!(skew(&Vector3::zeros()), Matrix3::zeros());
    }

    #[test]
    fn skew_of_basis_vector() {
        let m = skew(&Vector3::new(1.0, 0.0, 0.0));
        let expected = Matrix3::new(0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0);
        assert_eq!(m, expected);
    }

    #[test]
    fn skew_matches_cross_product_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let t = Vector3::new(
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
            );
            let v = Vector3::new(
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
            );
            let diff = (skew(&t) * v - t.cross(&v)).norm();
            assert!(diff <= 1e-12, "skew/cross mismatch: {diff}");
            // Antisymmetry and t x t = 0 are exact.
            assert_eq!(skew(&t).transpose(), -skew(&t));
            assert_eq!((skew(&t) * t).norm(), 0.0);
        }
    }

    #[test]
    fn pose_rejects_non_orthonormal_rotation() {
        let bad = Matrix3::new(1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 1.0);
        assert!(Pose::new(bad, Vector3::zeros()).is_err());
        // Orthogonal but det = -1 (a reflection) is also rejected.
        let reflect = Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0);
        assert!(Pose::new(reflect, Vector3::zeros()).is_err());
    }

    #[test]
    fn relative_pose_of_view_with_itself_is_identity() {
        let v = CameraModel::orthographic(1.0, 1.0, 0.0, 30.0).unwrap();
        let p = relative_pose(&v, &v).unwrap();
        assert!(mat_abs_diff(&p.rotation, &Matrix3::identity()) < 1e-15);
        assert!(p.translation.norm() < 1e-15);
    }

    #[test]
    fn relative_pose_between_rig_views_is_pure_azimuth_rotation() {
        let a = CameraModel::orthographic(1.0, 1.0, 0.0, 20.0).unwrap();
        let b = CameraModel::orthographic(1.0, 1.0, 0.0, 110.0).unwrap();
        let p = relative_pose(&a, &b).unwrap();
        let expected = azimuth_rotation(90.0);
        assert!(mat_abs_diff(&p.rotation, &expected.rotation) < 1e-12);
        // Canonical-rig translations keep t_y = 0 exactly.
        assert_eq!(p.translation.y, 0.0);
    }

    #[test]
    fn relative_pose_agrees_with_composed_world_transforms() {
        // Oracle: push world points through each view's world-to-camera
        // transform independently and compare with the relative map.
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let a = CameraModel::orthographic(0.8, 1.0, 0.0, 75.0).unwrap();
        let b = CameraModel::perspective(50.0, 3.0, 25.0, 290.0).unwrap();
        let rel = relative_pose(&a, &b).unwrap();
        let wa = a.world_to_camera().unwrap();
        let wb = b.world_to_camera().unwrap();
        for _ in 0..200 {
            let p = Vector3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            let direct = wb.transform(&p);
            let via_rel = rel.transform(&wa.transform(&p));
            assert!((direct - via_rel).norm() <= 1e-12);
        }
    }

    #[test]
    fn rig_views_share_camera_frame_height() {
        // At elevation zero the camera-frame y coordinate of a world point is
        // the same in every rig view.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = CameraModel::orthographic(1.0, 1.0, 0.0, 15.0).unwrap();
        let b = CameraModel::orthographic(1.0, 1.0, 0.0, 195.0).unwrap();
        let wa = a.world_to_camera().unwrap();
        let wb = b.world_to_camera().unwrap();
        for _ in 0..1000 {
            let p = Vector3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            let ya = wa.transform(&p).y;
            let yb = wb.transform(&p).y;
            assert!((ya - yb).abs() <= 1e-12);
        }
    }
}
